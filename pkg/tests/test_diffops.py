from fractions import Fraction

import pytest

from wfcomplex import diffops as D
from wfcomplex.bernstein import polynomial_field, random_polynomial


@pytest.fixture(scope="module")
def layouts(tet_dom):
    return {k: tet_dom.layout(4, k) for k in (1, 3, 9)}


def field(L, rng, symmetric=False):
    polys = [random_polynomial(L.degree, rng) for _ in range(L.ncomp)]
    if symmetric:
        for i in range(3):
            for j in range(i):
                polys[3 * i + j] = polys[3 * j + i]
    return polynomial_field(L, polys)


def constant(L, values):
    return polynomial_field(L, [{(0, 0, 0): v} for v in values])


def test_xi_inverse(layouts, rng):
    u = field(layouts[9], rng)
    assert D.apply(D.apply(u, D.xi_inv), D.xi).equals(u)
    assert D.apply(D.apply(u, D.xi), D.xi_inv).equals(u)


def test_div_curl_and_curl_grad_vanish(layouts, rng):
    v = field(layouts[3], rng)
    assert D.apply(D.apply(v, D.curl), D.div).is_zero()
    p = field(layouts[1], rng)
    assert D.apply(D.apply(p, D.grad), D.curl).is_zero()


def test_mskw_is_cross_product(layouts):
    v = (Fraction(2, 3), -1, 5)
    w = (3, Fraction(1, 2), -2)
    L = layouts[3].with_(degree=0)
    M = D.apply(constant(L, v), D.mskw)
    rows = [[0] * 9 for _ in range(3)]
    for a in range(3):
        for c in range(3):
            rows[a][3 * a + c] = w[c]
    times_w = D.pointwise(M.layout, rows)
    assert times_w(M).equals(D.apply(constant(L, v), D.cross_vec, w))


def test_inc_equals_curl_xi_inv_curl_on_symmetric(layouts, rng):
    u = field(layouts[9], rng, symmetric=True)
    lhs = D.apply(u, D.inc)
    rhs = D.apply(D.apply(D.apply(u, D.curl), D.xi_inv), D.curl)
    assert lhs.equals(rhs)


def test_curl_xi_inv_curl_kills_skew(layouts, rng):
    v = field(layouts[3], rng)
    m = D.apply(v, D.mskw)
    assert D.apply(D.apply(D.apply(m, D.curl), D.xi_inv), D.curl).is_zero()


def test_vskw_of_curl_xi_inv_curl_vanishes(layouts, rng):
    u = field(layouts[9], rng)
    w = D.apply(D.apply(D.apply(u, D.curl), D.xi_inv), D.curl)
    assert D.apply(w, D.vskw).is_zero()


def test_constant_vector_has_no_strain_curl(layouts):
    v = constant(layouts[3].with_(degree=1), (1, -2, 7))
    assert D.apply(D.apply(v, D.eps), D.curl).is_zero()


def test_hand_expanded_example(layouts):
    # u = x e1 e1'
    L = layouts[9].with_(degree=1)
    u = polynomial_field(L, [{(1, 0, 0): 1}] + [{}] * 8)
    assert D.apply(D.apply(u, D.xi), D.div).is_zero()
    assert D.apply(D.apply(u, D.curl), D.vskw).is_zero()


def test_inc_of_eps_vanishes(layouts, rng):
    v = field(layouts[3], rng)
    assert D.apply(D.apply(v, D.eps), D.inc).is_zero()


def test_cached_maps_are_reused(layouts):
    assert D.cached(D.grad, layouts[1]) is D.cached(D.grad, layouts[1])
