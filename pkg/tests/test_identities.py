import pytest

from wfcomplex import diffops as D
from wfcomplex.identities import IDENTITIES, run_identity

HOLDS = [n for n, (_, _, e) in IDENTITIES.items() if e == "holds"]
FAILS = [n for n, (_, _, e) in IDENTITIES.items() if e == "fails"]


@pytest.mark.parametrize("name", HOLDS)
def test_identity_holds(name):
    res = run_identity(name, trials=5, seed=1)
    assert res.failures == 0 and res.passed


@pytest.mark.parametrize("name", FAILS)
def test_sign_variant_is_refuted(name):
    res = run_identity(name, trials=5, seed=1)
    assert res.failures > 0 and res.passed
    assert res.counterexample


def test_suite_entry_point_from_diffops():
    out = D.identity_suite(trials=2, seed=3, names=["div_xi", "xi_grad"])
    assert [r.identity for r in out] == ["div_xi", "xi_grad"]
    assert all(r.passed for r in out)
    assert out[0].to_dict()["trials"] == 2


def test_identity_runs_are_reproducible():
    a = run_identity("curl_f_skew", trials=3, seed=9).to_dict()
    b = run_identity("curl_f_skew", trials=3, seed=9).to_dict()
    assert a == b
