"""Bernstein-Bezier calculus on simplices of dimension 1 to 3.

A polynomial of degree r on a simplex with vertices v_0..v_d is stored by
its coefficients c_alpha in the basis

    B_alpha = r!/alpha! * prod(lambda_i ** alpha_i),   |alpha| = r,

with multi-indices in the fixed order returned by :func:`multi_indices`.
Everything is exact: coordinates are ``Fraction`` and matrices are
``flint.fmpq_mat``.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, isqrt

import flint

from .rlinalg import qeye, qmat, to_fmpq_mat

__all__ = [
    "multi_indices", "index_map", "dim", "shift_matrix", "bary_gradients",
    "diff_matrix", "partials", "measure", "trace_indices", "trace_matrix",
    "elevate", "mass_matrix", "integral_weights", "product", "evaluate",
    "barycentric", "interpolate", "monomial_coefficients", "Layout",
    "PiecewiseField", "polynomial_field", "random_polynomial", "elevate_to",
]


@lru_cache(maxsize=None)
def multi_indices(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    """All alpha in N^n with |alpha| = r, lexicographically descending."""
    if n == 1:
        return ((r,),)
    out = []
    for a in range(r, -1, -1):
        for rest in multi_indices(n - 1, r - a):
            out.append((a,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def index_map(n: int, r: int) -> dict:
    return {a: i for i, a in enumerate(multi_indices(n, r))}


def dim(d: int, r: int) -> int:
    """dim P_r on a d-simplex (0 for negative degree)."""
    return comb(r + d, d) if r >= 0 else 0


@lru_cache(maxsize=None)
def shift_matrix(n: int, r: int, i: int) -> flint.fmpq_mat:
    """E_i: degree r coefficients -> degree r-1, (E_i c)_beta = c_{beta+e_i}."""
    src = index_map(n, r)
    rows = multi_indices(n, r - 1)
    M = qmat(len(rows), len(src))
    for k, b in enumerate(rows):
        a = list(b)
        a[i] += 1
        M[k, src[tuple(a)]] = 1
    return M


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def measure(verts) -> Fraction:
    """Length, area or volume of a simplex given exact vertex coordinates.

    For triangles in 3-space the area is generally irrational, so the
    squared measure is what callers should rely on there; this returns the
    measure only when it is rational and raises otherwise.
    """
    sq = measure_squared(verts)
    num, den = sq.numerator, sq.denominator
    rn, rd = _isqrt_exact(num), _isqrt_exact(den)
    if rn is None or rd is None:
        raise ValueError("simplex measure is irrational")
    return Fraction(rn, rd)


def _isqrt_exact(n):
    s = isqrt(n)
    return s if s * s == n else None


def measure_squared(verts) -> Fraction:
    """Squared d-volume via the Gram determinant."""
    v0 = verts[0]
    E = [_sub(v, v0) for v in verts[1:]]
    d = len(E)
    G = to_fmpq_mat([[Fraction(_dot(a, b)) for b in E] for a in E])
    det = G.det()
    return Fraction(int(det.p), int(det.q)) / factorial(d) ** 2


@lru_cache(maxsize=None)
def bary_gradients(verts: tuple) -> tuple:
    """Gradients of the barycentric coordinates, tangential to the simplex.

    For a d-simplex in 3-space, the gradient of lambda_i is the unique
    vector in the simplex's tangent space with (grad lambda_i).(v_j - v_0)
    = delta_ij - delta_i0.
    """
    v0 = verts[0]
    E = [tuple(Fraction(x) for x in _sub(v, v0)) for v in verts[1:]]
    d = len(E)
    G = to_fmpq_mat([[_dot(a, b) for b in E] for a in E])
    Ginv = G.inv()
    grads = []
    for i in range(1, d + 1):
        coef = [Fraction(int(Ginv[k, i - 1].p), int(Ginv[k, i - 1].q)) for k in range(d)]
        g = tuple(sum(coef[k] * E[k][c] for k in range(d)) for c in range(3))
        grads.append(g)
    g0 = tuple(-sum(g[c] for g in grads) for c in range(3))
    return (g0,) + tuple(grads)


def diff_matrix(verts: tuple, r: int, direction) -> flint.fmpq_mat:
    """Directional derivative along ``direction``: degree r -> degree r-1.

    For r = 0 the zero map to degree 0 is returned.
    """
    n = len(verts)
    if r == 0:
        return qmat(1, 1)
    g = bary_gradients(verts)
    M = qmat(dim(n - 1, r - 1), dim(n - 1, r))
    for i in range(n):
        a = _dot(g[i], direction)
        if a:
            M += shift_matrix(n, r, i) * flint.fmpq(a.numerator, a.denominator) * r
    return M


@lru_cache(maxsize=None)
def partials(verts: tuple, r: int) -> tuple:
    """The three Cartesian partials (tangential for lower-dim simplices)."""
    return tuple(diff_matrix(verts, r, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def trace_indices(cell: tuple, sub: tuple, r: int) -> list[int]:
    """Cell-local indices of the coefficients living on a sub-simplex.

    ``cell`` and ``sub`` are tuples of vertex labels (sub a subset of cell).
    The i-th entry corresponds to the i-th multi-index of ``sub``.
    """
    pos = []
    for v in sub:
        if v not in cell:
            raise ValueError(f"{sub} is not a face of {cell}")
        pos.append(cell.index(v))
    imap = index_map(len(cell), r)
    out = []
    for b in multi_indices(len(sub), r):
        a = [0] * len(cell)
        for k, p in enumerate(pos):
            a[p] = b[k]
        out.append(imap[tuple(a)])
    return out


def trace_matrix(cell: tuple, sub: tuple, r: int) -> flint.fmpq_mat:
    idx = trace_indices(cell, sub, r)
    M = qmat(len(idx), dim(len(cell) - 1, r))
    for i, j in enumerate(idx):
        M[i, j] = 1
    return M


@lru_cache(maxsize=None)
def elevate(n: int, r: int) -> flint.fmpq_mat:
    """Degree elevation r -> r+1 on a simplex with n vertices."""
    src = index_map(n, r)
    rows = multi_indices(n, r + 1)
    M = qmat(len(rows), len(src))
    for k, b in enumerate(rows):
        for i in range(n):
            if b[i] > 0:
                a = list(b)
                a[i] -= 1
                M[k, src[tuple(a)]] = flint.fmpq(b[i], r + 1)
    return M


def elevate_to(n: int, r: int, s: int) -> flint.fmpq_mat:
    M = qeye(dim(n - 1, r))
    for k in range(r, s):
        M = elevate(n, k) * M
    return M


@lru_cache(maxsize=None)
def mass_matrix(n: int, r: int, s: int) -> flint.fmpq_mat:
    """Relative mass matrix: int B_alpha B_beta / |S| for degrees r and s."""
    d = n - 1
    A = multi_indices(n, r)
    B = multi_indices(n, s)
    scale = comb(r + s, r) * comb(r + s + d, d)
    M = qmat(len(A), len(B))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            w = 1
            for x, y in zip(a, b):
                w *= comb(x + y, x)
            M[i, j] = flint.fmpq(w, scale)
    return M


def _multinom(a) -> int:
    out = factorial(sum(a))
    for x in a:
        out //= factorial(x)
    return out


@lru_cache(maxsize=None)
def integral_weights(n: int, r: int) -> tuple:
    """int B_alpha / |S| = 1 / C(r+d, d) for every alpha."""
    return tuple(Fraction(1, comb(r + n - 1, n - 1)) for _ in multi_indices(n, r))


@lru_cache(maxsize=None)
def _product_table(n: int, r: int, s: int):
    A = multi_indices(n, r)
    B = multi_indices(n, s)
    out = index_map(n, r + s)
    table = []
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            c = tuple(x + y for x, y in zip(a, b))
            w = Fraction(_multinom(a) * _multinom(b), _multinom(c))
            table.append((i, j, out[c], w))
    return table


def product(n: int, r: int, f, s: int, g) -> list:
    """Coefficients of f*g (degrees r and s) in the degree r+s basis."""
    out = [Fraction(0)] * dim(n - 1, r + s)
    for i, j, k, w in _product_table(n, r, s):
        if f[i] and g[j]:
            out[k] += w * f[i] * g[j]
    return out


def evaluate(coeffs, r: int, lam) -> Fraction:
    n = len(lam)
    total = Fraction(0)
    for c, a in zip(coeffs, multi_indices(n, r)):
        if c:
            t = Fraction(_multinom(a))
            for l, e in zip(lam, a):
                t *= Fraction(l) ** e
            total += c * t
    return total


def barycentric(verts, x) -> tuple:
    """Barycentric coordinates of a point in the affine hull of ``verts``."""
    v0 = verts[0]
    E = [tuple(Fraction(c) for c in _sub(v, v0)) for v in verts[1:]]
    y = tuple(Fraction(c) for c in _sub(x, v0))
    d = len(E)
    G = to_fmpq_mat([[_dot(a, b) for b in E] for a in E])
    rhs = to_fmpq_mat([[_dot(a, y)] for a in E])
    sol = G.solve(rhs)
    lam = [Fraction(int(sol[k, 0].p), int(sol[k, 0].q)) for k in range(d)]
    return (1 - sum(lam),) + tuple(lam)


@lru_cache(maxsize=None)
def _coord_coeffs(verts: tuple, r: int):
    """Bernstein coefficients of x, y, z (degree 1) on the simplex."""
    return tuple(tuple(Fraction(v[c]) for v in verts) for c in range(3))


def monomial_coefficients(verts: tuple, r: int, poly: dict) -> list:
    """Bernstein coefficients (degree r) of sum_k c_k x^k0 y^k1 z^k2."""
    n = len(verts)
    X = _coord_coeffs(verts, 1)
    powers = {}

    def power(c, e):
        key = (c, e)
        if key not in powers:
            if e == 0:
                powers[key] = (0, [Fraction(1)])
            else:
                deg, prev = power(c, e - 1)
                powers[key] = (deg + 1, product(n, deg, prev, 1, list(X[c])))
        return powers[key]

    out = [Fraction(0)] * dim(n - 1, r)
    for k, c in poly.items():
        if not c:
            continue
        deg, coeffs = 0, [Fraction(1)]
        for ax in range(3):
            dd, pc = power(ax, k[ax])
            coeffs = product(n, deg, coeffs, dd, pc)
            deg += dd
        if deg > r:
            raise ValueError("polynomial degree exceeds target degree")
        E = elevate_to(n, deg, r)
        col = qmat(len(coeffs), 1, coeffs)
        up = (E * col).entries()
        for i, v in enumerate(up):
            out[i] += c * Fraction(int(v.p), int(v.q))
    return out


def interpolate(verts: tuple, r: int, fn) -> list:
    """Bernstein coefficients of the degree-r interpolant of ``fn``.

    ``fn`` is evaluated at the domain points; exact for polynomials of
    degree at most r.
    """
    n = len(verts)
    A = multi_indices(n, r)
    vals = []
    rows = []
    for a in A:
        lam = [Fraction(x, r) if r else Fraction(1, n) for x in a]
        if r == 0:
            lam = [Fraction(1, n)] * n
        pt = tuple(sum(l * Fraction(v[c]) for l, v in zip(lam, verts)) for c in range(3))
        vals.append(Fraction(fn(pt)))
        row = []
        for b in A:
            t = Fraction(_multinom(b))
            for l, e in zip(lam, b):
                t *= l ** e
            row.append(t)
        rows.append(row)
    V = to_fmpq_mat(rows)
    sol = V.solve(qmat(len(vals), 1, vals))
    return [Fraction(int(x.p), int(x.q)) for x in sol.entries()]


# piecewise fields ----------------------------------------------------------
class Layout:
    """Ambient piecewise space: cells, polynomial degree, value components.

    ``cells`` are sorted tuples of point ids into ``points``; all cells have
    the same dimension.  Coefficients of cell c are stored contiguously as
    (component, multi-index) with the component index major.
    """

    __slots__ = ("points", "cells", "degree", "ncomp", "_index")

    def __init__(self, points, cells, degree: int, ncomp: int = 1):
        self.points = points
        self.cells = tuple(tuple(c) for c in cells)
        self.degree = max(degree, 0)
        self.ncomp = ncomp
        self._index = None

    @property
    def nverts(self) -> int:
        return len(self.cells[0])

    @property
    def nb(self) -> int:
        return dim(self.nverts - 1, self.degree)

    @property
    def block(self) -> int:
        return self.ncomp * self.nb

    @property
    def size(self) -> int:
        return len(self.cells) * self.block

    def coords(self, i: int) -> tuple:
        return tuple(self.points[v] for v in self.cells[i])

    def index(self, cell) -> int:
        if self._index is None:
            self._index = {c: i for i, c in enumerate(self.cells)}
        return self._index[tuple(cell)]

    def with_(self, degree=None, ncomp=None) -> "Layout":
        return Layout(self.points, self.cells,
                      self.degree if degree is None else degree,
                      self.ncomp if ncomp is None else ncomp)

    def _key(self):
        return (id(self.points), self.cells, self.degree, self.ncomp)

    def __eq__(self, other):
        return isinstance(other, Layout) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Layout({len(self.cells)} cells, degree={self.degree}, ncomp={self.ncomp})"


class PiecewiseField:
    """A set of piecewise polynomial fields stored as per-cell column blocks.

    ``blocks[c]`` is a (layout.block x k) matrix over ``field``; column j of
    every block together describes field j.
    """

    def __init__(self, layout: Layout, blocks, field):
        self.layout = layout
        self.blocks = list(blocks)
        self.field = field

    @property
    def ncols(self) -> int:
        return self.blocks[0].ncols() if self.blocks else 0

    @classmethod
    def zeros(cls, layout, k, field):
        return cls(layout, [field.zeros(layout.block, k) for _ in layout.cells], field)

    @classmethod
    def identity(cls, layout, field):
        """Fully discontinuous basis: one column per ambient coefficient."""
        out = []
        n, b = len(layout.cells), layout.block
        for c in range(n):
            flat = [0] * (b * n * b)
            for i in range(b):
                flat[i * n * b + c * b + i] = 1
            out.append(field.matrix(b, n * b, flat))
        return cls(layout, out, field)

    @classmethod
    def from_coefficients(cls, layout, columns, field):
        """``columns`` is a list of fields, each a list (per cell) of coefficient lists."""
        blocks = []
        k = len(columns)
        for c in range(len(layout.cells)):
            flat = [0] * (layout.block * k)
            for j, col in enumerate(columns):
                for i, v in enumerate(col[c]):
                    flat[i * k + j] = v
            blocks.append(field.matrix(layout.block, k, flat))
        return cls(layout, blocks, field)

    def stacked(self):
        return self.field.vstack(self.blocks, self.ncols)

    def __matmul__(self, C):
        return PiecewiseField(self.layout, [B * C for B in self.blocks], self.field)

    def _combine(self, other, sign):
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        if sign > 0:
            return PiecewiseField(self.layout, [a + b for a, b in zip(self.blocks, other.blocks)], self.field)
        return PiecewiseField(self.layout, [a - b for a, b in zip(self.blocks, other.blocks)], self.field)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return PiecewiseField(self.layout, [-B for B in self.blocks], self.field)

    def scale(self, c):
        c = self.field.scalar(c)
        if self.field.exact:
            return PiecewiseField(self.layout, [B * c for B in self.blocks], self.field)
        return PiecewiseField(self.layout, [B * flint.nmod(c, self.field.p) for B in self.blocks], self.field)

    def hcat(self, *others):
        fields = (self,) + others
        blocks = [self.field.hstack([f.blocks[c] for f in fields], self.layout.block)
                  for c in range(len(self.layout.cells))]
        return PiecewiseField(self.layout, blocks, self.field)

    def take(self, cols):
        cols = list(cols)
        return PiecewiseField(self.layout, [self.field.take_cols(B, cols) for B in self.blocks], self.field)

    def convert(self, field):
        return PiecewiseField(self.layout, [field.convert(B) for B in self.blocks], field)

    def is_zero(self) -> bool:
        return all(self.field.is_zero(B) for B in self.blocks)

    def equals(self, other) -> bool:
        return (self.layout == other.layout and self.ncols == other.ncols
                and all(a == b for a, b in zip(self.blocks, other.blocks)))

    def elevate(self, degree: int) -> "PiecewiseField":
        """Same fields expressed in a higher-degree layout."""
        L = self.layout
        if degree == L.degree:
            return self
        E = elevate_to(L.nverts, L.degree, degree)
        M = _kron_eye(L.ncomp, E)
        M = self.field.convert(M)
        return PiecewiseField(L.with_(degree=degree), [M * B for B in self.blocks], self.field)

    def cell_values(self, col: int, cell: int) -> list:
        """Coefficients of one field on one cell (exact fields only)."""
        B = self.blocks[cell]
        k = B.ncols()
        ent = B.entries()
        return [ent[i * k + col] for i in range(B.nrows())]

    def evaluate(self, col: int, cell: int, lam) -> list:
        """Values of all components of field ``col`` at barycentric point ``lam``."""
        L = self.layout
        vals = self.cell_values(col, cell)
        nb = L.nb
        out = []
        for c in range(L.ncomp):
            coeffs = [Fraction(int(v.p), int(v.q)) for v in vals[c * nb:(c + 1) * nb]]
            out.append(evaluate(coeffs, L.degree, lam))
        return out


def _kron_eye(k: int, M) -> flint.fmpq_mat:
    r, c = M.nrows(), M.ncols()
    out = qmat(k * r, k * c)
    ent = M.entries()
    for b in range(k):
        for i in range(r):
            for j in range(c):
                v = ent[i * c + j]
                if v != 0:
                    out[b * r + i, b * c + j] = v
    return out


def polynomial_field(layout: Layout, polys, field=None, cells=None) -> PiecewiseField:
    """Interpolate global polynomials (one dict per component) on every cell.

    ``polys`` may be a list of fields (each a list of ``layout.ncomp``
    monomial dicts) to produce several columns at once.
    """
    from .rlinalg import Field
    field = field or Field()
    if polys and isinstance(polys[0], dict):
        polys = [polys]
    cols = []
    for comps in polys:
        per_cell = []
        for c in range(len(layout.cells)):
            verts = layout.coords(c)
            coeffs = []
            for poly in comps:
                coeffs.extend(monomial_coefficients(verts, layout.degree, poly))
            per_cell.append(coeffs)
        cols.append(per_cell)
    return PiecewiseField.from_coefficients(layout, cols, field)


def random_polynomial(degree: int, rng, lo: int = -3, hi: int = 3) -> dict:
    """Random trivariate polynomial of total degree <= ``degree``."""
    out = {}
    for d in range(degree + 1):
        for a in range(d, -1, -1):
            for b in range(d - a, -1, -1):
                out[(a, b, d - a - b)] = Fraction(rng.randint(lo, hi))
    return out
