import random

import pytest

from wfcomplex import diffops as D
from wfcomplex.eladofs import (EXPECTED_COUNTS, DofFamily, DofSet, Projection, build, commuting_suite,
                               project)
from wfcomplex.bernstein import polynomial_field, random_polynomial
from wfcomplex.rlinalg import Field, SingularMatrix

COUNTS_R3 = {
    "U0": (12, 36, 18, 72, 24, 12, 12, 24, 0),
    "U1": (24, 72, 54, 12, 24, 36, 24, 24, 12, 12, 0, 0),
    "U2": (12, 36, 48, 30, 0),
    "U3": (6, 30),
}


@pytest.fixture(scope="module")
def sets(disphenoid):
    return {k: build(k, 3, disphenoid) for k in COUNTS_R3}


@pytest.mark.parametrize("space", list(COUNTS_R3))
def test_counts_and_unisolvence_r3(sets, space):
    ds = sets[space]
    got = tuple(c["count"] for c in ds.count_check())
    assert got == COUNTS_R3[space]
    assert len(ds) == ds.target.dim
    assert ds.unisolvent("exact") == (True, "exact")


def test_u2_has_no_vertex_or_edge_dofs(sets):
    audit = sets["U2"].audit("exact")
    assert audit["vertex_dofs"] == 0 and audit["edge_dofs"] == 0
    assert {f["entity"] for f in audit["families"]} <= {"face", "interior"}


def test_audit_schema(sets):
    audit = sets["U3"].audit()
    assert set(audit) >= {"space", "r", "families", "dim", "unisolvent", "mode"}
    assert sum(f["count"] for f in audit["families"]) == audit["dim"] == 36


def test_zero_dofs_means_zero_function(sets):
    F = Field()
    A = sets["U0"].matrix()
    assert F.nullspace(A).ncols() == 0


def test_expected_count_formulas_sum_to_dimension():
    from wfcomplex.fespaces import U_DIMS
    for r in (3, 4, 5):
        for k in range(4):
            total = sum(fn(r) for _, _, fn in EXPECTED_COUNTS[f"U{k}"])
            assert total == U_DIMS[(k, False)](r)


def random_element(ds, rng):
    F = Field()
    c = F.matrix(ds.target.dim, 1, [rng.randint(-4, 4) for _ in range(ds.target.dim)])
    return ds.target.basis @ c


@pytest.mark.parametrize("space", ["U2", "U3"])
def test_projection_is_idempotent(sets, space, rng):
    ds = sets[space]
    P = ds.projection
    for _ in range(20):
        u = random_element(ds, rng)
        assert P(u).equals(u)
        assert P(P(u)).equals(P(u))


def test_constants_are_reproduced(sets):
    u = [{(0, 0, 0): 3}, {(0, 0, 0): -1}, {(0, 0, 0): 2}]
    pu = project(sets["U0"], u)
    assert D.apply(pu, D.eps).is_zero()
    L = pu.layout
    assert pu.equals(polynomial_field(L, u))


def test_projection_matches_dofs_of_smooth_input(sets, rng):
    ds = sets["U3"]
    L = ds.target.layout.with_(degree=2)
    g = polynomial_field(L, [random_polynomial(2, rng) for _ in range(3)])
    pg = ds.projection(g)
    assert Field().equal(ds.evaluate(pg), ds.evaluate(g))


def test_projection_invariant_under_family_recombination(sets):
    ds = sets["U2"]
    rng = random.Random(5)
    F = Field()
    fams = []
    for fam in ds.families:
        if fam.count == 0:
            fams.append(fam)
            continue
        while True:
            M = F.matrix(fam.count, fam.count, [rng.randint(-3, 3) for _ in range(fam.count ** 2)])
            if F.rank(M) == fam.count:
                break
        fams.append(DofFamily(fam.tag, fam.entity_kind, fam.entity,
                              lambda g, ev=fam.evaluate, M=M: M * ev(g), fam.count))
    mixed = DofSet(ds.space, ds.r, ds.target, fams)
    L = ds.target.layout.with_(degree=3)
    g = polynomial_field(L, [random_polynomial(3, rng) for _ in range(9)])
    assert Projection(mixed)(g).equals(ds.projection(g))


def test_singular_dofs_raise(sets):
    ds = sets["U2"]
    fams = list(ds.families)
    first = fams[0]
    k = next(i for i, f in enumerate(fams) if i and f.tag == first.tag)
    fams[k] = first  # same face family twice: square but singular
    bad = DofSet(ds.space, ds.r, ds.target, fams)
    with pytest.raises(SingularMatrix):
        Projection(bad)


def test_commuting_eps_with_constant_input(sets):
    u = [{(0, 0, 0): 1}, {(0, 0, 0): 5}, {(0, 0, 0): -2}]
    lhs = D.apply(project(sets["U0"], u), D.eps)
    assert lhs.is_zero()


def test_commuting_inc_on_strain_input(sets, rng):
    L = sets["U0"].target.layout.with_(degree=3)
    v = D.apply(polynomial_field(L, [random_polynomial(3, rng) for _ in range(3)]), D.eps)
    assert D.apply(v, D.inc).is_zero()
    assert D.apply(sets["U1"].projection(v), D.inc).is_zero()


def test_commuting_suite_single_trial(sets):
    rep = commuting_suite(3, trials=1, seed=2, sets=sets)
    assert len(rep.checks) == 3 and rep.passed


def test_r_below_three_rejected():
    with pytest.raises(ValueError):
        build("U1", 2)
