import random
from fractions import Fraction

import flint
import pytest

from wfcomplex.rlinalg import (Field, SingularMatrix, column_basis, gram_complement, modular_fields,
                               nullspace, qeye, qmat, rank, solve_square, to_fmpq_mat)


def test_identity_and_zero_rank():
    assert rank(qeye(5)).rank == 5
    assert rank(qmat(7, 3)).rank == 0


def test_vandermonde_rank():
    xs = [Fraction(1, 2), Fraction(-3), Fraction(5, 7), Fraction(2)]
    V = to_fmpq_mat([[x ** k for k in range(4)] for x in xs])
    assert rank(V, "exact").rank == 4
    assert rank(V, "modular").rank == 4


def test_nullspace_of_row_of_ones():
    N = nullspace(to_fmpq_mat([[1, 1]]))
    assert N.ncols() == 1
    assert N[0, 0] == -N[1, 0] != 0


def test_full_column_rank_has_trivial_nullspace():
    assert nullspace(qeye(4)).ncols() == 0


def test_random_rank_deficient_nullspace(rng):
    A = to_fmpq_mat([[rng.randint(-9, 9) for _ in range(10)] for _ in range(10)])
    B = to_fmpq_mat([[rng.randint(-9, 9) for _ in range(20)] for _ in range(10)])
    M = A * B
    r = rank(M, "exact").rank
    N = nullspace(M)
    assert N.ncols() == 20 - r
    assert Field().is_zero(M * N)
    assert rank(M, "modular", seed=3).rank == r


def test_solve_identity():
    b = to_fmpq_mat([[Fraction(1, 3)], [2], [-5]])
    assert solve_square(qeye(3), b) == b


def test_solve_singular_raises():
    with pytest.raises(SingularMatrix):
        Field().solve(qmat(2, 2), to_fmpq_mat([[1], [1]]))


def test_gram_complement():
    A = to_fmpq_mat([[1], [0]])
    C = gram_complement(A, qeye(2), qeye(2))
    assert C.ncols() == 1 and C[0, 0] == 0 and C[1, 0] != 0


def test_column_basis_picks_independent_columns():
    M = to_fmpq_mat([[1, 2, 0], [2, 4, 1]])
    assert column_basis(M) == [0, 2]


def test_modular_fields_are_seeded_and_distinct():
    a = modular_fields(5)
    b = modular_fields(5)
    assert [F.p for F in a] == [F.p for F in b]
    assert a[0].p != a[1].p
    assert all(flint.fmpz(F.p).is_prime() for F in a)


def test_modular_and_exact_agree(rng):
    rows = [[rng.randint(-3, 3) for _ in range(12)] for _ in range(8)]
    rows.append([a + b for a, b in zip(rows[0], rows[1])])
    M = to_fmpq_mat(rows)
    for F in modular_fields(1):
        assert F.rank(F.convert(M)) == Field().rank(M) == 8
