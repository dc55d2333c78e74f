import pytest

from wfcomplex import complexes as C
from wfcomplex.rlinalg import Field

FACE_SEQUENCES = [n for n in C.LOCAL_SEQUENCES if C.CATALOG[n].level == "face"]
TET_SEQUENCES = [n for n in C.LOCAL_SEQUENCES if C.CATALOG[n].level == "tet"]


def slot_dims(res):
    return [s.dim for s in res.reports[0].slots]


@pytest.mark.parametrize("name", FACE_SEQUENCES)
def test_face_sequences_r3(name):
    res = C.catalog_run(name, 3, mode="exact")
    assert res.passed, [c for c in res.checks() if not c["pass"]]


@pytest.mark.parametrize("name", TET_SEQUENCES)
def test_tet_sequences_r3(name):
    res = C.catalog_run(name, 3)
    assert res.passed, [c for c in res.checks() if not c["pass"]]


def test_seq0_gradient_rank():
    rep = C.catalog_run("seq0", 3, mode="exact").reports[0]
    assert rep.slots[0].dim == 91
    assert rep.slots[1].in_rank == 90
    assert rep.head_kernel == 1


def test_elseq_dims_and_rigid_head():
    res = C.catalog_run("elseq", 3, mode="exact")
    assert slot_dims(res) == [210, 294, 126, 36]
    assert res.reports[0].head_kernel == 6
    assert res.passed


def test_elseqb_eps_injective_on_ring():
    res = C.catalog_run("elseqb", 4)
    rep = res.reports[0]
    assert rep.head_kernel == 0
    assert res.passed


def test_2dpreelasvenb_low_degree():
    res = C.catalog_run("2dpreelasvenb", 2, mode="exact")
    assert res.passed


def test_min_degree_is_enforced():
    with pytest.raises(ValueError):
        C.catalog_run("elseq", 2)
    with pytest.raises(KeyError):
        C.catalog_run("nosuchseq", 3)


def test_modular_matches_exact():
    ex = C.catalog_run("seq1", 3, mode="exact")
    mo = C.catalog_run("seq1", 3, mode="modular", seed=4)
    assert mo.mode == "modular" and len(mo.reports) == 2
    key = lambda r: [(s.in_rank, s.out_kernel) for s in r.reports[0].slots]
    assert key(ex) == key(mo)


def test_global_sequences_two_tet():
    for name in C.GLOBAL_SEQUENCES:
        res = C.catalog_run(name, 3, geometry="two-tet")
        assert res.passed, (name, [c for c in res.checks() if not c["pass"]])
        if name in ("global_preseq", "global_elseq"):
            assert res.reports[0].head_kernel == 6


def test_bgg_reproduces_preseq():
    res = C.run_bgg(3)
    assert res["pass"], [c for c in res["checks"] if not c["pass"]]
    assert any(c["name"].endswith("s1_onto_A2") for c in res["checks"])


def test_bgg_detects_a_broken_connecting_map(tet_dom):
    F = Field()
    top, bottom, s = C._diagram(tet_dom, 3, F, False)
    broken = [s[0], lambda b: s[1](b).scale(0), s[2]]
    res = C.derive_bgg(top, bottom, broken, name="broken")
    failed = {c["name"] for c in res.checks if not c["pass"]}
    assert "broken:s1_injective" in failed
