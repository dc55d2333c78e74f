"""Exact linear algebra over Q and fast rank over GF(p).

Matrices are python-flint objects: ``fmpq_mat`` in exact mode and
``nmod_mat`` in modular mode.  A :class:`Field` bundles the mode so the
same pipeline can run once over Q or once per prime.  Nullspaces over Q
are found with a mod-p pivot search followed by an exact solve and an
exact residual check, so no result is ever trusted on a prime alone.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import flint

__all__ = [
    "Field", "RankCertificate", "SingularMatrix",
    "random_prime", "modular_fields", "to_fmpq_mat", "qmat", "qeye", "rank",
    "nullspace", "solve_square", "gram_complement", "column_basis",
]

PRIME_BITS = 62
AUTO_COLUMNS = 500


class SingularMatrix(ArithmeticError):
    """Raised when a square system has no unique solution."""

    def __init__(self, msg, rank=None):
        super().__init__(msg)
        self.rank = rank


def random_prime(rng: random.Random) -> int:
    """A random prime just below 2**62."""
    top = 1 << PRIME_BITS
    while True:
        c = rng.randrange(top - (1 << 40), top) | 1
        if flint.fmpz(c).is_prime():
            return c


def modular_fields(seed: int = 0, count: int = 2) -> list["Field"]:
    rng = random.Random(seed)
    primes = []
    while len(primes) < count:
        p = random_prime(rng)
        if p not in primes:
            primes.append(p)
    return [Field(p) for p in primes]


def _q(x):
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return x


def qmat(rows: int, cols: int, flat=None) -> flint.fmpq_mat:
    """fmpq_mat from a flat row-major list of ints, Fractions or fmpq."""
    if flat is None:
        return flint.fmpq_mat(rows, cols)
    return flint.fmpq_mat(rows, cols, [_q(x) for x in flat])


def qeye(n: int) -> flint.fmpq_mat:
    M = flint.fmpq_mat(n, n)
    for i in range(n):
        M[i, i] = 1
    return M


def to_fmpq_mat(rows) -> flint.fmpq_mat:
    """fmpq_mat from a nested list."""
    rows = [list(r) for r in rows]
    n = len(rows)
    m = len(rows[0]) if n else 0
    return qmat(n, m, [x for r in rows for x in r])


class Field:
    """Q when ``p`` is None, otherwise GF(p)."""

    def __init__(self, p: int | None = None):
        self.p = p

    @property
    def exact(self) -> bool:
        return self.p is None

    def __repr__(self):
        return "Field(Q)" if self.p is None else f"Field(GF({self.p}))"

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(self.p)

    # construction -----------------------------------------------------
    def matrix(self, rows: int, cols: int, flat=None):
        if self.p is None:
            return qmat(rows, cols, flat)
        if flat is None:
            return flint.nmod_mat(rows, cols, self.p)
        return flint.nmod_mat(rows, cols, [self.scalar(x) for x in flat], self.p)

    def scalar(self, x):
        """Reduce an int, Fraction or fmpq into this field (as int mod p)."""
        if self.p is None:
            return _q(x)
        p = self.p
        if isinstance(x, int):
            return x % p
        if isinstance(x, Fraction):
            return x.numerator * pow(x.denominator, -1, p) % p
        if isinstance(x, flint.fmpq):
            return int(x.p) * pow(int(x.q), -1, p) % p
        return int(x) % p

    def zeros(self, rows: int, cols: int):
        return self.matrix(rows, cols)

    def eye(self, n: int):
        flat = [0] * (n * n)
        for i in range(n):
            flat[i * n + i] = 1
        return self.matrix(n, n, flat)

    def convert(self, M):
        """Map an exact fmpq_mat into this field."""
        if self.p is None:
            return M
        if isinstance(M, flint.nmod_mat):
            return M
        N, d = M.numer_denom()
        out = flint.nmod_mat(N, self.p)
        d = int(d)
        if d != 1:
            out = out * flint.nmod(pow(d, -1, self.p), self.p)
        return out

    # structure --------------------------------------------------------
    def vstack(self, mats, cols: int | None = None):
        mats = list(mats)
        if cols is None:
            cols = mats[0].ncols()
        flat = []
        rows = 0
        for M in mats:
            if M.nrows() == 0:
                continue
            flat.extend(M.entries())
            rows += M.nrows()
        return self._raw(rows, cols, flat)

    def hstack(self, mats, rows: int | None = None):
        mats = [M for M in mats if M.ncols() > 0]
        if rows is None:
            rows = mats[0].nrows() if mats else 0
        if not mats:
            return self.zeros(rows, 0)
        ents = [(M.entries(), M.ncols()) for M in mats]
        flat = []
        for r in range(rows):
            for e, c in ents:
                flat.extend(e[r * c:(r + 1) * c])
        return self._raw(rows, sum(c for _, c in ents), flat)

    def block_diag(self, mats):
        """Block diagonal matrix with the given blocks."""
        R = sum(M.nrows() for M in mats)
        C = sum(M.ncols() for M in mats)
        flat = [0] * (R * C)
        r0 = c0 = 0
        for M in mats:
            e, n, m = M.entries(), M.nrows(), M.ncols()
            for r in range(n):
                start = (r0 + r) * C + c0
                flat[start:start + m] = e[r * m:(r + 1) * m]
            r0 += n
            c0 += m
        return self._raw(R, C, flat)

    def _raw(self, rows, cols, flat):
        if self.p is None:
            return flint.fmpq_mat(rows, cols, flat) if flat else flint.fmpq_mat(rows, cols)
        if flat:
            return flint.nmod_mat(rows, cols, flat, self.p)
        return flint.nmod_mat(rows, cols, self.p)

    def take_rows(self, M, idx):
        n = M.ncols()
        ent = M.entries()
        flat = []
        for i in idx:
            flat.extend(ent[i * n:(i + 1) * n])
        return self._raw(len(idx), n, flat)

    def take_cols(self, M, idx):
        return self.take_rows(M.transpose(), idx).transpose()

    def is_zero(self, M) -> bool:
        return all(x == 0 for x in M.entries())

    def equal(self, A, B) -> bool:
        return A.nrows() == B.nrows() and A.ncols() == B.ncols() and A == B

    # algorithms -------------------------------------------------------
    def rank(self, M) -> int:
        if M.nrows() == 0 or M.ncols() == 0:
            return 0
        return M.rank()

    def pivots(self, M) -> list[int]:
        """Pivot columns of the reduced row echelon form."""
        if M.nrows() == 0 or M.ncols() == 0:
            return []
        R, r = M.rref()
        n = M.ncols()
        ent = R.entries()
        piv = []
        j = 0
        for i in range(r):
            row = ent[i * n:(i + 1) * n]
            while row[j] == 0:
                j += 1
            piv.append(j)
            j += 1
        return piv

    def nullspace(self, M):
        """Columns spanning ker M, in the field of M."""
        n = M.ncols()
        if M.nrows() == 0:
            return self.eye(n)
        if self.p is None:
            return _exact_nullspace(M)
        N, k = M.nullspace()
        if k == n:
            return self.eye(n)
        return self.take_cols(N, list(range(k)))

    def solve(self, A, B):
        """Solve A X = B for square nonsingular A."""
        if A.nrows() != A.ncols():
            raise SingularMatrix("matrix is not square")
        r = self.rank(A)
        if r < A.nrows():
            raise SingularMatrix(f"matrix is singular (rank {r} < {A.nrows()})", r)
        return A.solve(B)

    def column_basis(self, M) -> list[int]:
        """Indices of a maximal independent set of columns."""
        if self.p is None:
            p = _pivot_field(M)
            return p.pivots(p.convert(_clear(M)))
        return self.pivots(M)


_AUX_RNG = random.Random(20240611)
_AUX = []


def _pivot_field(M=None, attempt=0) -> Field:
    while len(_AUX) <= attempt:
        _AUX.append(Field(random_prime(_AUX_RNG)))
    return _AUX[attempt]


def _clear(M):
    N, d = M.numer_denom()
    return flint.fmpq_mat(N)


def _exact_nullspace(M):
    """Certified nullspace over Q: mod-p pivots, exact solve, exact residual."""
    n = M.ncols()
    Z = _clear(M)
    for attempt in range(6):
        F = _pivot_field(attempt=attempt)
        Zp = F.convert(Z)
        piv = F.pivots(Zp)
        rows = F.pivots(Zp.transpose())
        r = len(piv)
        free = [j for j in range(n) if j not in set(piv)]
        if r == 0:
            N = Field().eye(n)
        else:
            Q = Field()
            sub = Q.take_rows(Z, rows)
            A = Q.take_cols(sub, piv)
            if not free:
                if A.rank() == r:
                    return flint.fmpq_mat(n, 0)
                continue
            B = Q.take_cols(sub, free)
            try:
                X = Q.solve(A, -B)
            except SingularMatrix:
                continue
            flat = [0] * (n * len(free))
            Xe = X.entries()
            k = len(free)
            for i, j in enumerate(piv):
                flat[j * k:(j + 1) * k] = Xe[i * k:(i + 1) * k]
            for c, j in enumerate(free):
                flat[j * k + c] = 1
            N = flint.fmpq_mat(n, k, flat)
        if Field().is_zero(M * N):
            return N
    raise ArithmeticError("nullspace certification failed")


@dataclass
class RankCertificate:
    rank: int
    mode: str
    primes: list = field(default_factory=list)
    pivots: list = field(default_factory=list)


def _as_exact(M) -> flint.fmpq_mat:
    if isinstance(M, flint.fmpq_mat):
        return M
    if isinstance(M, flint.fmpz_mat):
        return flint.fmpq_mat(M)
    return to_fmpq_mat(M)


def rank(M, mode: str = "auto", seed: int = 0) -> RankCertificate:
    """Rank of an exact matrix.

    ``mode`` is "exact", "modular" (two random primes near 2**62 which must
    agree, escalating to exact otherwise) or "auto" (modular above
    500 columns).
    """
    M = _as_exact(M)
    if mode == "auto":
        mode = "modular" if M.ncols() > AUTO_COLUMNS else "exact"
    if mode == "exact":
        Q = Field()
        return RankCertificate(Q.rank(M), "exact", [], Q.column_basis(M))
    if mode != "modular":
        raise ValueError(f"unknown rank mode {mode!r}")
    fields = modular_fields(seed)
    Z = _clear(M)
    results = []
    for F in fields:
        Zp = F.convert(Z)
        results.append(F.pivots(Zp))
    if all(len(r) == len(results[0]) for r in results):
        return RankCertificate(len(results[0]), "modular", [F.p for F in fields], results[0])
    Q = Field()
    return RankCertificate(Q.rank(M), "exact", [F.p for F in fields], Q.column_basis(M))


def nullspace(M) -> flint.fmpq_mat:
    """Exact nullspace basis (columns) of a rational matrix."""
    return Field().nullspace(_as_exact(M))


def column_basis(M) -> list[int]:
    return Field().column_basis(_as_exact(M))


def solve_square(M, b) -> flint.fmpq_mat:
    return Field().solve(_as_exact(M), _as_exact(b))


def gram_complement(A, B, G, F: Field | None = None):
    """Basis of the G-orthogonal complement of span(A) inside span(B).

    A and B are column bases in the same coordinates, G the Gram matrix in
    those coordinates.  Returns B @ C with (A' G B) C = 0.
    """
    F = F or Field()
    C = F.nullspace(A.transpose() * G * B)
    return B * C
