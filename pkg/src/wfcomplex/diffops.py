"""Differential and algebraic operators on piecewise Bernstein fields.

Every operator is a :class:`LinearMap` between two :class:`Layout` objects
(or from a layout to a bare list of constraint rows).  Maps are stored as
exact per-cell blocks and converted lazily to GF(p).

Vector fields have 3 components.  Matrix fields have 9, stored row-major,
so entry (i, j) is component 3*i + j.  Matrix differential operators act
row by row.  Surface operators on a face layout take the face normal ``n``
as given (not normalized): rot_F phi = grad_F phi x n, curl_F v = n.curl v
restricted to tangential derivatives, v_perp = v x n.
"""
from __future__ import annotations

from fractions import Fraction

import flint

from .bernstein import Layout, PiecewiseField, elevate_to, partials, trace_matrix
from .rlinalg import Field, qmat

__all__ = [
    "LinearMap", "stencil", "pointwise", "identity_map", "elevation", "restrict",
    "grad", "curl", "div", "sym", "skw", "transpose", "trace", "mskw", "vskw",
    "xi", "xi_inv", "eps", "inc", "grad_f", "curl_f", "div_f", "rot_f", "eps_f",
    "airy_f", "inc_f", "skew_f", "skew_scalar_f", "frame_parts", "dot_vec",
    "cross_vec", "scale_map", "tangential", "direct_sum", "stack_maps", "identity_suite", "cached", "apply",
]

LEVI = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


def _fq(x):
    if isinstance(x, flint.fmpq):
        return x
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


class LinearMap:
    """Block-sparse linear map between piecewise spaces.

    ``terms[i]`` lists ``(j, A)`` pairs: output block i receives A times
    input block j.  When ``dst`` is None the output is a plain list of row
    blocks of sizes ``rows`` (used for constraint functionals).
    """

    def __init__(self, src: Layout, dst: Layout | None, terms, rows=None):
        self.src = src
        self.dst = dst
        self.terms = [list(t) for t in terms]
        if rows is None:
            rows = [dst.block] * len(dst.cells)
        self.rows = list(rows)
        self._conv = {}

    @property
    def nrows(self) -> int:
        return sum(self.rows)

    def _terms(self, F: Field):
        if F.exact:
            return self.terms
        if F.p not in self._conv:
            self._conv[F.p] = [[(j, F.convert(A)) for j, A in t] for t in self.terms]
        return self._conv[F.p]

    def __call__(self, f: PiecewiseField):
        if f.layout != self.src:
            raise ValueError(f"operator expects {self.src}, got {f.layout}")
        F = f.field
        out = []
        for i, ts in enumerate(self._terms(F)):
            acc = None
            for j, A in ts:
                x = A * f.blocks[j]
                acc = x if acc is None else acc + x
            out.append(F.zeros(self.rows[i], f.ncols) if acc is None else acc)
        if self.dst is None:
            return F.vstack(out, f.ncols)
        return PiecewiseField(self.dst, out, F)

    def matrix(self, F: Field | None = None):
        """Dense matrix of the whole map."""
        F = F or Field()
        return self(PiecewiseField.identity(self.src, F)) if self.dst is None else \
            self(PiecewiseField.identity(self.src, F)).stacked()

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        if other.dst != self.src:
            raise ValueError(f"cannot compose: {other.dst} -> {self.src}")
        terms = []
        for ts in self.terms:
            acc = {}
            for j, A in ts:
                for k, B in other.terms[j]:
                    acc[k] = A * B if k not in acc else acc[k] + A * B
            terms.append(sorted(acc.items()))
        return LinearMap(other.src, self.dst, terms, self.rows)

    def _merge(self, other, sign):
        if other.src != self.src or other.dst != self.dst or other.rows != self.rows:
            raise ValueError("cannot add maps with different layouts")
        terms = []
        for a, b in zip(self.terms, other.terms):
            acc = dict(a)
            for k, B in b:
                B = B if sign > 0 else -B
                acc[k] = B if k not in acc else acc[k] + B
            terms.append(sorted(acc.items()))
        return LinearMap(self.src, self.dst, terms, self.rows)

    def __add__(self, other):
        return self._merge(other, 1)

    def __sub__(self, other):
        return self._merge(other, -1)

    def __neg__(self):
        return self.scaled(-1)

    def scaled(self, c) -> "LinearMap":
        c = _fq(c)
        return LinearMap(self.src, self.dst, [[(j, A * c) for j, A in t] for t in self.terms], self.rows)

    def __repr__(self):
        return f"LinearMap({self.src} -> {self.dst if self.dst is not None else sum(self.rows)})"


def _sparse(M):
    n = M.ncols()
    return [(k // n, k % n, v) for k, v in enumerate(M.entries()) if v != 0]


def stencil(src: Layout, nout: int, entries: dict) -> LinearMap:
    """Componentwise operator from ``{(out, in, k): coeff}``.

    ``k`` is 0, 1, 2 for a Cartesian partial or None for the identity.  All
    entries must be of the same kind; derivatives lower the degree by one.
    """
    kinds = {k is None for (_, _, k) in entries}
    if len(kinds) > 1:
        raise ValueError("stencil mixes derivative and identity entries")
    deriv = kinds == {False}
    r = src.degree
    rd = max(r - 1, 0) if deriv else r
    dst = src.with_(degree=rd, ncomp=nout)
    nbi, nbo = src.nb, dst.nb
    rows, cols = nout * nbo, src.ncomp * nbi
    terms = []
    for c in range(len(src.cells)):
        if deriv:
            D = [_sparse(P) for P in partials(src.coords(c), r)]
        flat = [0] * (rows * cols)
        for (o, i, k), coef in entries.items():
            if coef == 0:
                continue
            coef = _fq(coef)
            if k is None:
                for a in range(nbi):
                    flat[(o * nbo + a) * cols + i * nbi + a] += coef
            else:
                for a, b, v in D[k]:
                    flat[(o * nbo + a) * cols + i * nbi + b] += coef * v
        terms.append([(c, qmat(rows, cols, flat))])
    return LinearMap(src, dst, terms)


def pointwise(src: Layout, A) -> LinearMap:
    """Constant matrix ``A`` (nout x ncomp nested list) applied at each point."""
    entries = {}
    for o, row in enumerate(A):
        if len(row) != src.ncomp:
            raise ValueError("pointwise matrix does not match the number of components")
        for i, v in enumerate(row):
            if v != 0:
                entries[(o, i, None)] = v
    return stencil(src, len(A), entries) if entries else _zero_map(src, len(A))


def _zero_map(src, nout):
    dst = src.with_(ncomp=nout)
    return LinearMap(src, dst, [[] for _ in src.cells])


def identity_map(src: Layout) -> LinearMap:
    return pointwise(src, [[int(i == j) for j in range(src.ncomp)] for i in range(src.ncomp)])


def scale_map(src: Layout, c) -> LinearMap:
    return identity_map(src).scaled(c)


def elevation(src: Layout, degree: int) -> LinearMap:
    """Degree elevation to ``degree`` (no-op map when equal)."""
    E = elevate_to(src.nverts, src.degree, degree)
    from .bernstein import _kron_eye
    K = _kron_eye(src.ncomp, E)
    return LinearMap(src, src.with_(degree=degree), [[(c, K)] for c in range(len(src.cells))])


def restrict(src: Layout, dst_cells, choose=None) -> LinearMap:
    """Trace onto lower-dimensional cells.

    ``choose`` optionally maps each target cell to the index of the source
    cell to take the trace from; by default the first containing cell.
    """
    dst = Layout(src.points, dst_cells, src.degree, src.ncomp)
    from .bernstein import _kron_eye
    terms = []
    for i, cell in enumerate(dst.cells):
        if choose is not None:
            j = choose[i] if not callable(choose) else choose(cell)
        else:
            s = set(cell)
            j = next((k for k, c in enumerate(src.cells) if s <= set(c)), None)
            if j is None:
                raise ValueError(f"no source cell contains {cell}")
        T = trace_matrix(src.cells[j], cell, src.degree)
        terms.append([(j, _kron_eye(src.ncomp, T))])
    return LinearMap(src, dst, terms)


def direct_sum(*maps: LinearMap) -> list:
    """Helper kept for symmetry with :func:`stack_maps`; returns the list."""
    return list(maps)


def stack_maps(maps, src: Layout) -> LinearMap:
    """Constraint map with the outputs of several maps stacked per block."""
    terms, rows = [], []
    for m in maps:
        if m.src != src:
            raise ValueError("stacked maps must share the source layout")
        terms.extend(m.terms)
        rows.extend(m.rows)
    return LinearMap(src, None, terms, rows)


# 3D operators ---------------------------------------------------------------
def _check(layout, ncomp, name):
    if layout.ncomp != ncomp:
        raise ValueError(f"{name} expects {ncomp} components, got {layout.ncomp}")


def grad(src: Layout) -> LinearMap:
    """Gradient of a scalar (3 comps) or of a vector (row i = grad v_i)."""
    if src.ncomp == 1:
        return stencil(src, 3, {(k, 0, k): 1 for k in range(3)})
    _check(src, 3, "grad")
    return stencil(src, 9, {(3 * i + k, i, k): 1 for i in range(3) for k in range(3)})


def curl(src: Layout) -> LinearMap:
    """Curl of a vector, or row-wise curl of a matrix."""
    rows = {3: 1, 9: 3}.get(src.ncomp)
    if rows is None:
        raise ValueError("curl expects a vector or matrix field")
    ent = {}
    for i in range(rows):
        for (a, b, c), s in LEVI.items():
            ent[(3 * i + a, 3 * i + c, b)] = s
    return stencil(src, 3 * rows, ent)


def div(src: Layout) -> LinearMap:
    """Divergence of a vector, or row-wise divergence of a matrix."""
    rows = {3: 1, 9: 3}.get(src.ncomp)
    if rows is None:
        raise ValueError("div expects a vector or matrix field")
    return stencil(src, rows, {(i, 3 * i + k, k): 1 for i in range(rows) for k in range(3)})


def _mat(fn):
    return [[fn(i, j, k, l) for k in range(3) for l in range(3)] for i in range(3) for j in range(3)]


def _d(a, b):
    return 1 if a == b else 0


def sym(src: Layout) -> LinearMap:
    _check(src, 9, "sym")
    return pointwise(src, _mat(lambda i, j, k, l: Fraction(_d(i, k) * _d(j, l) + _d(i, l) * _d(j, k), 2)))


def skw(src: Layout) -> LinearMap:
    _check(src, 9, "skw")
    return pointwise(src, _mat(lambda i, j, k, l: Fraction(_d(i, k) * _d(j, l) - _d(i, l) * _d(j, k), 2)))


def transpose(src: Layout) -> LinearMap:
    _check(src, 9, "transpose")
    return pointwise(src, _mat(lambda i, j, k, l: _d(i, l) * _d(j, k)))


def trace(src: Layout) -> LinearMap:
    _check(src, 9, "trace")
    return pointwise(src, [[_d(k, l) for k in range(3) for l in range(3)]])


def xi(src: Layout) -> LinearMap:
    """M -> M' - tr(M) I."""
    _check(src, 9, "xi")
    return pointwise(src, _mat(lambda i, j, k, l: _d(i, l) * _d(j, k) - _d(i, j) * _d(k, l)))


def xi_inv(src: Layout) -> LinearMap:
    """Inverse of :func:`xi`: M -> M' - tr(M) I / 2."""
    _check(src, 9, "xi_inv")
    return pointwise(src, _mat(lambda i, j, k, l: _d(i, l) * _d(j, k) - Fraction(_d(i, j) * _d(k, l), 2)))


def _mskw_rows():
    A = [[0] * 3 for _ in range(9)]
    for (a, b, c), s in LEVI.items():
        # mskw(v)[a][c] = eps_{a b c} v_b, so that mskw(v) w = v x w
        A[3 * a + c][b] += s
    return A


def mskw(src: Layout) -> LinearMap:
    """v -> the skew matrix with mskw(v) w = v x w."""
    _check(src, 3, "mskw")
    return pointwise(src, _mskw_rows())


def vskw(src: Layout) -> LinearMap:
    """Inverse of mskw composed with the skew part."""
    _check(src, 9, "vskw")
    A = [[0] * 9 for _ in range(3)]
    for (a, b, c), s in LEVI.items():
        # vskw(u)_b = 1/2 eps_{a b c} u_{a c}
        A[b][3 * a + c] += Fraction(s, 2)
    return pointwise(src, A)


def eps(src: Layout) -> LinearMap:
    """Symmetric gradient of a vector field."""
    g = grad(src)
    return sym(g.dst) @ g


def inc(src: Layout) -> LinearMap:
    """curl (curl u)' for a matrix field."""
    c1 = curl(src)
    t = transpose(c1.dst)
    c2 = curl(t.dst)
    return c2 @ t @ c1


def dot_vec(src: Layout, w) -> LinearMap:
    """v -> w . v for a constant vector w."""
    _check(src, 3, "dot")
    return pointwise(src, [list(w)])


def cross_vec(src: Layout, w) -> LinearMap:
    """v -> v x w for a constant vector w."""
    _check(src, 3, "cross")
    A = [[0] * 3 for _ in range(3)]
    for (a, b, c), s in LEVI.items():
        A[a][b] += s * w[c]
    return pointwise(src, A)


def tangential(src: Layout, n) -> LinearMap:
    """v -> Q v with Q the projection orthogonal to n."""
    _check(src, 3, "tangential")
    return pointwise(src, _qmat(n))


def _qmat(n):
    nn = sum(Fraction(x) * x for x in n)
    return [[_d(i, j) - Fraction(n[i]) * n[j] / nn for j in range(3)] for i in range(3)]


def frame_parts(src: Layout, n) -> dict:
    """Extractors of a matrix field relative to the plane orthogonal to n.

    Keys: "FF" (Q u Q), "Fn" (Q u n), "nF" (Q u' n), "nn" (n'u n),
    "trF" (tr Q u Q).  The normal is used as given.
    """
    _check(src, 9, "frame_parts")
    Q = _qmat(n)
    n = [Fraction(x) for x in n]
    ff = [[Q[i][k] * Q[l][j] for k in range(3) for l in range(3)] for i in range(3) for j in range(3)]
    fn = [[Q[i][k] * n[l] for k in range(3) for l in range(3)] for i in range(3)]
    nf = [[n[k] * Q[l][i] for k in range(3) for l in range(3)] for i in range(3)]
    nn = [[n[k] * n[l] for k in range(3) for l in range(3)]]
    trf = [[Q[l][k] for k in range(3) for l in range(3)]]
    return {name: pointwise(src, A) for name, A in
            (("FF", ff), ("Fn", fn), ("nF", nf), ("nn", nn), ("trF", trf))}


# surface operators ------------------------------------------------------------
def grad_f(src: Layout) -> LinearMap:
    """Surface gradient (the partials on a triangle layout are tangential)."""
    return grad(src)


def div_f(src: Layout) -> LinearMap:
    return div(src)


def curl_f(src: Layout, n) -> LinearMap:
    """n . curl of a tangential vector, or row-wise for a matrix (giving a vector)."""
    rows = {3: 1, 9: 3}.get(src.ncomp)
    if rows is None:
        raise ValueError("curl_f expects a vector or matrix field")
    ent = {}
    for i in range(rows):
        for (a, b, c), s in LEVI.items():
            key = (i, 3 * i + c, b)
            ent[key] = ent.get(key, 0) + s * Fraction(n[a])
    return stencil(src, rows, ent)


def rot_f(src: Layout, n) -> LinearMap:
    """grad_F phi x n for a scalar, or row-wise for a vector (giving a matrix)."""
    rows = {1: 1, 3: 3}.get(src.ncomp)
    if rows is None:
        raise ValueError("rot_f expects a scalar or vector field")
    ent = {}
    for i in range(rows):
        for (a, b, c), s in LEVI.items():
            key = (3 * i + a if rows == 3 else a, i, b)
            ent[key] = ent.get(key, 0) + s * Fraction(n[c])
    return stencil(src, 3 * rows, ent)


def eps_f(src: Layout) -> LinearMap:
    g = grad_f(src)
    return sym(g.dst) @ g


def airy_f(src: Layout, n) -> LinearMap:
    """rot_F (rot_F phi)' of a scalar field."""
    r1 = rot_f(src, n)
    return rot_f(r1.dst, n) @ r1


def inc_f(src: Layout, n) -> LinearMap:
    """curl_F (curl_F u)' of a matrix field."""
    c1 = curl_f(src, n)
    return curl_f(c1.dst, n) @ c1


def skew_f(src: Layout, n) -> LinearMap:
    """Surface skew part of a matrix: t2'u t1 - t1'u t2 (= 2 n.vskw u for unit n)."""
    v = vskw(src)
    return dot_vec(v.dst, [2 * Fraction(x) for x in n]) @ v


def skew_scalar_f(src: Layout, n) -> LinearMap:
    """phi -> phi (t1 t2' - t2 t1') = -phi mskw(n)."""
    _check(src, 1, "skew_scalar_f")
    A = [[0] for _ in range(9)]
    for (a, b, c), s in LEVI.items():
        A[3 * a + c][0] -= s * Fraction(n[b])
    return pointwise(src, A)


_CACHE = {}


def cached(op, src: Layout, *args) -> LinearMap:
    """``op(src, *args)`` memoized on the layout and hashable arguments."""
    key = (op, src, args)
    if key not in _CACHE:
        _CACHE[key] = op(src, *args)
    return _CACHE[key]


def apply(f: PiecewiseField, op, *args):
    """Apply the operator ``op(f.layout, *args)`` to ``f`` (maps are memoized)."""
    return cached(op, f.layout, *args)(f)


def identity_suite(trials: int = 20, seed: int = 0, names=None) -> list:
    """Randomized exact identity checks; see :mod:`wfcomplex.identities`."""
    from .identities import identity_suite as run
    return run(trials, seed, names)
