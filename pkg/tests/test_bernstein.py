from fractions import Fraction

from wfcomplex.bernstein import (barycentric, diff_matrix, elevate_to, evaluate, interpolate, mass_matrix, measure,
                                 monomial_coefficients, multi_indices, partials, trace_matrix)
from wfcomplex.rlinalg import Field, qmat, to_fmpq_mat

TET = ((0, 0, 0), (2, 1, 0), (-1, 3, 1), (1, 1, 4))
EDGE = ((0, 0, 0), (1, 0, 0))
TRI = ((0, 0, 0), (1, 0, 0), (0, 1, 0))


def col(values):
    return qmat(len(values), 1, list(values))


def as_list(M):
    return [Fraction(int(x.p), int(x.q)) for x in M.entries()]


def random_poly(rng, deg):
    return {(a, b, c): rng.randint(-5, 5)
            for a in range(deg + 1) for b in range(deg + 1 - a) for c in range(deg + 1 - a - b)}


def test_derivative_of_x_on_unit_edge():
    x = monomial_coefficients(EDGE, 1, {(1, 0, 0): 1})
    d = as_list(diff_matrix(EDGE, 1, (1, 0, 0)) * col(x))
    assert d == [1]


def test_barycentric_derivative_is_constant_gradient():
    lam0 = [1, 0, 0, 0]  # lambda_0 in the degree-1 basis
    direction = (1, 2, -1)
    (d,) = as_list(diff_matrix(TET, 1, direction) * col(lam0))
    lam = lambda p: evaluate(lam0, 1, barycentric(TET, p))
    p0 = (Fraction(1, 5),) * 3
    p1 = tuple(a + b for a, b in zip(p0, direction))
    assert d == lam(p1) - lam(p0)


def test_mixed_partials_commute(rng):
    c = col(monomial_coefficients(TET, 4, random_poly(rng, 4)))
    P4 = partials(TET, 4)
    P3 = partials(TET, 3)
    for i in range(3):
        for j in range(3):
            assert P3[i] * P4[j] * c == P3[j] * P4[i] * c


def test_constant_interpolates_to_itself():
    assert interpolate(TET, 3, lambda p: Fraction(5, 2)) == [Fraction(5, 2)] * 20


def test_trace_of_barycentric_on_opposite_face():
    lam0 = col([1, 0, 0, 0])
    cell = (0, 1, 2, 3)
    assert Field().is_zero(trace_matrix(cell, (1, 2, 3), 1) * lam0)
    assert not Field().is_zero(trace_matrix(cell, (0, 1, 2), 1) * lam0)


def test_trace_commutes_with_tangential_derivative(rng):
    coeffs = col(monomial_coefficients(TET, 3, random_poly(rng, 3)))
    face = TET[:3]
    t = tuple(b - a for a, b in zip(face[0], face[1]))
    cell = (0, 1, 2, 3)
    lhs = diff_matrix(face, 3, t) * (trace_matrix(cell, (0, 1, 2), 3) * coeffs)
    rhs = trace_matrix(cell, (0, 1, 2), 2) * (diff_matrix(TET, 3, t) * coeffs)
    assert lhs == rhs


def test_integral_of_one_and_x():
    w = mass_matrix(2, 0, 1)  # relative integrals of the degree-1 basis
    x = col(monomial_coefficients(EDGE, 1, {(1, 0, 0): 1}))
    assert as_list(w * x) == [Fraction(1, 2)]
    assert measure(EDGE) == 1
    assert measure(TRI) == Fraction(1, 2)
    assert measure(((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))) == Fraction(1, 6)


def test_mass_matrix_spd():
    M = mass_matrix(3, 2, 2)
    assert M == M.transpose()
    n = M.nrows()
    for k in range(1, n + 1):  # leading principal minors positive
        sub = to_fmpq_mat([[M[i, j] for j in range(k)] for i in range(k)])
        assert sub.det() > 0


def test_elevation_preserves_values(rng):
    poly = random_poly(rng, 2)
    lo = monomial_coefficients(TET, 2, poly)
    hi = monomial_coefficients(TET, 4, poly)
    assert as_list(elevate_to(4, 2, 4) * col(lo)) == hi
    assert len(multi_indices(4, 4)) == 35
