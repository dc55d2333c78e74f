"""Constrained piecewise polynomial spaces on Clough-Tocher and Worsey-Farin splits.

A space is an ambient :class:`Layout` plus a basis (a :class:`PiecewiseField`
whose columns are the basis elements).  Bases are produced either
explicitly (continuous Lagrange gluing, tensor products) or as the
nullspace of a stack of linear constraints applied to a coarser basis.

Domains
-------
:class:`Domain` collects the cells a space lives on together with the
facet adjacency needed for jump and boundary constraints.  Three kinds are
used: the 12 sub-tets of one macro tet, all sub-tets of a macro mesh, and
the three Clough-Tocher triangles of one macro face (tangential fields on a
face are stored with 3 ambient components).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations

import flint

from . import diffops as D
from .bernstein import (Layout, PiecewiseField, dim as bdim, integral_weights,
                        mass_matrix, monomial_coefficients, trace_matrix)
from .rlinalg import Field, qmat
from .wfmesh import SplitComplex, cross, dot, signed_volume, sub

__all__ = [
    "Domain", "FESpace", "tet_domain", "global_domain", "face_domain", "space",
    "lagrange", "power", "frame_power", "constrain", "image", "intersect",
    "rigid_field", "linear_field", "gram", "q_perp", "u_space", "u_catalog",
    "TABLE1", "TABLE2", "U_DIMS", "dims_table", "characterization_check",
    "proj_rigid_check", "contains", "span_equal",
]


# domains ---------------------------------------------------------------------
class Domain:
    """Cells of one dimension with facet adjacency.

    ``normal`` is set for face domains (the raw normal of the macro face).
    ``ct_pairs`` lists (edge, cell_a, cell_b, normal) for Clough-Tocher
    edges on macro faces of a local tet domain; ``theta`` lists the signed
    trace slots of the global jump functionals.
    """

    def __init__(self, points, cells, name="", normal=None, split=None, tets=None):
        self.points = points
        self.cells = tuple(tuple(sorted(c)) for c in cells)
        self.name = name
        self.normal = normal
        self.split = split
        self.tets = tets
        self.index = {c: i for i, c in enumerate(self.cells)}
        count = {}
        for i, c in enumerate(self.cells):
            for f in combinations(c, len(c) - 1):
                count.setdefault(f, []).append(i)
        self.interior_facets = sorted((f, ids[0], ids[1]) for f, ids in count.items() if len(ids) == 2)
        self.boundary_facets = sorted((f, ids[0]) for f, ids in count.items() if len(ids) == 1)
        self.ct_pairs = []
        self.theta = []
        if normal is not None:
            self.frame = _face_frame(self, normal)
        self._cache = {}

    @property
    def dim(self) -> int:
        return len(self.cells[0]) - 1

    def coords(self, simplex):
        return tuple(self.points[i] for i in simplex)

    def measure(self, i: int) -> Fraction:
        """Cell volume, or area relative to |normal| for face domains."""
        c = self.coords(self.cells[i])
        if self.dim == 3:
            return abs(signed_volume(c))
        n = self.normal
        return abs(dot(cross(sub(c[1], c[0]), sub(c[2], c[0])), n)) / dot(n, n)

    def layout(self, degree: int, ncomp: int = 1) -> Layout:
        return Layout(self.points, self.cells, degree, ncomp)

    def facet_normal(self, facet):
        p = self.coords(facet)
        if self.dim == 3:
            return cross(sub(p[1], p[0]), sub(p[2], p[0]))
        return cross(self.normal, sub(p[1], p[0]))

    def __repr__(self):
        return f"Domain({self.name}, {len(self.cells)} cells)"


def _face_frame(dom, n):
    a, b = dom.points[dom.cells[0][0]], dom.points[dom.cells[0][1]]
    t1 = sub(b, a)
    return (t1, cross(n, t1))


def tet_domain(S: SplitComplex, t: int = 0) -> Domain:
    """The 12 sub-tets of macro tet ``t``."""
    cells = [S.cells[c] for c in S.tet_cells[t]]
    dom = Domain(S.points, cells, name=f"T{t}", split=S, tets=(t,))
    for f in combinations(S.macro.tets[t], 3):
        n = S.face_normal(f, t)
        mF = S.m[f]
        for e in S.ct_edges[f]:
            (a,) = set(e) - {mF}
            b, c = sorted(set(f) - {a})
            q1 = tuple(sorted((mF, a, b)))
            q2 = tuple(sorted((mF, a, c)))
            ca = dom.index[tuple(sorted(q1 + (S.z[t],)))]
            cb = dom.index[tuple(sorted(q2 + (S.z[t],)))]
            dom.ct_pairs.append((e, ca, cb, n))
    return dom


def global_domain(S: SplitComplex) -> Domain:
    """All sub-tets of a macro mesh, with the global jump functionals."""
    dom = Domain(S.points, S.cells, name="global", split=S, tets=tuple(range(len(S.macro.tets))))
    for f, e in S.interior_ct_edges:
        jp = S.theta_slots(f, e)
        dom.theta.append((e, tuple(jp.slots), jp.tangent))
    return dom


def face_domain(S: SplitComplex, f, tet: int | None = None) -> Domain:
    """Clough-Tocher split of macro face ``f`` (normal outward from ``tet``)."""
    if tet is None:
        tet = S.macro.face_tets[f][0]
    return Domain(S.points, S.ct[f], name=f"F{f}", normal=S.face_normal(f, tet), split=S, tets=(tet,))


# spaces ----------------------------------------------------------------------
@dataclass
class FESpace:
    """A discrete space: ambient layout plus basis columns."""
    name: str
    layout: Layout
    basis: PiecewiseField
    degree: int
    meta: dict = dc_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.ncols

    @property
    def field(self) -> Field:
        return self.basis.field

    def matrix(self):
        return self.basis.stacked()

    def __repr__(self):
        return f"FESpace({self.name}, degree={self.degree}, dim={self.dim})"


def _block_matrix(F, rows, cols, entries):
    """Matrix from {(i, j): value} in field F."""
    flat = [0] * (rows * cols)
    for (i, j), v in entries.items():
        flat[i * cols + j] = v
    return F.matrix(rows, cols, flat)


def discontinuous(dom: Domain, r: int, ncomp: int, F: Field, name="P") -> FESpace:
    L = dom.layout(r, ncomp)
    return FESpace(name, L, PiecewiseField.identity(L, F), L.degree)


def lagrange(dom: Domain, r: int, F: Field, ring: bool = False, name=None) -> FESpace:
    """Continuous scalar piecewise polynomials by gluing Bernstein coefficients.

    Coefficients are identified by the support simplex of their multi-index
    and the exponents on it; ring spaces drop every coefficient whose support
    lies in a boundary facet.
    """
    from .bernstein import multi_indices
    L = dom.layout(r, 1)
    bd = set()
    if ring:
        for f, _ in dom.boundary_facets:
            bd.add(frozenset(f))
    keys = {}
    per_cell = []
    for cell in dom.cells:
        ks = []
        for a in multi_indices(len(cell), L.degree):
            key = tuple(sorted((cell[i], ai) for i, ai in enumerate(a) if ai > 0))
            support = frozenset(v for v, _ in key)
            if ring and any(support <= b for b in bd):
                ks.append(None)
                continue
            if key not in keys:
                keys[key] = None
            ks.append(key)
        per_cell.append(ks)
    order = {k: j for j, k in enumerate(sorted(keys))}
    n = len(order)
    blocks = []
    for ks in per_cell:
        blocks.append(_block_matrix(F, len(ks), n, {(i, order[k]): 1 for i, k in enumerate(ks) if k is not None}))
    return FESpace(name or ("L0_ring" if ring else "L0"), L, PiecewiseField(L, blocks, F), L.degree)


def _scaled(F, B, c):
    c = Fraction(c)
    if F.exact:
        return B * flint.fmpq(c.numerator, c.denominator)
    return B * flint.nmod(F.scalar(c), F.p)


def power(sp: FESpace, k: int = 3, name=None) -> FESpace:
    """[X]^k (a vector of k independent copies); matrices use k=3 on vector spaces."""
    F = sp.field
    L = sp.layout
    nL = L.with_(ncomp=L.ncomp * k)
    blocks = [F.block_diag([B] * k) for B in sp.basis.blocks]
    return FESpace(name or f"{sp.name}^{k}", nL, PiecewiseField(nL, blocks, F), sp.degree)


def frame_power(sp: FESpace, vectors, name=None) -> FESpace:
    """Span of {v_a x : x in X} for constant vectors v_a.

    For scalar X and two tangent vectors this gives [X]^2 on a face; for a
    tangential vector space X it gives the matrices with rows in X.
    """
    F = sp.field
    L = sp.layout
    nL = L.with_(ncomp=3 * L.ncomp)
    blocks = []
    for B in sp.basis.blocks:
        cols = []
        for v in vectors:
            cols.append(F.vstack([_scaled(F, B, v[i]) for i in range(3)], B.ncols()))
        blocks.append(F.hstack(cols, 3 * B.nrows()))
    return FESpace(name or f"{sp.name}(x)V", nL, PiecewiseField(nL, blocks, F), sp.degree)


def constrain(sp: FESpace, cmap, name=None) -> FESpace:
    """Subspace where the constraint map vanishes.

    ``cmap`` is a :class:`LinearMap` (or a list of them) on ``sp.layout``.
    """
    maps = cmap if isinstance(cmap, (list, tuple)) else [cmap]
    F = sp.field
    rows = [m(sp.basis) for m in maps]
    rows = [M if not isinstance(M, PiecewiseField) else M.stacked() for M in rows]
    M = F.vstack(rows, sp.dim)
    N = F.nullspace(M)
    return FESpace(name or sp.name, sp.layout, sp.basis @ N, sp.degree, dict(sp.meta))


def image(sp: FESpace, op, name=None) -> FESpace:
    """Column space of op(basis), reduced to an independent set."""
    f = op(sp.basis)
    F = sp.field
    piv = F.column_basis(f.stacked())
    return FESpace(name or f"op({sp.name})", f.layout, f.take(piv), f.layout.degree)


def intersect(a: FESpace, b: FESpace, name=None) -> FESpace:
    """Intersection of two spaces in the same ambient layout."""
    F = a.field
    M = F.hstack([a.matrix(), -b.matrix()], a.layout.size)
    N = F.nullspace(M)
    top = F.take_rows(N, list(range(a.dim)))
    return FESpace(name or f"{a.name}&{b.name}", a.layout, a.basis @ top, a.degree)


def contains(big: FESpace, f: PiecewiseField) -> bool:
    """Whether every column of f lies in big (rank test in the common field)."""
    F = big.field
    if f.layout != big.layout:
        f = f.elevate(big.layout.degree) if f.layout.degree < big.layout.degree else f
    M = F.hstack([big.matrix(), f.stacked()], big.layout.size)
    return F.rank(M) == big.dim


def span_equal(a: FESpace, b: FESpace) -> bool:
    F = a.field
    if a.dim != b.dim:
        return False
    M = F.hstack([a.matrix(), b.matrix()], a.layout.size)
    return F.rank(M) == a.dim == F.rank(b.matrix())


# constraint builders ---------------------------------------------------------
def _kron(P, T):
    """kron(P, T) with P a nested list of rationals and T an fmpq_mat."""
    k, c = len(P), len(P[0])
    tr, tc = T.nrows(), T.ncols()
    nz = [(i // tc, i % tc, v) for i, v in enumerate(T.entries()) if v != 0]
    flat = [0] * (k * tr * c * tc)
    cols = c * tc
    for a in range(k):
        for b in range(c):
            p = P[a][b]
            if p == 0:
                continue
            p = flint.fmpq(Fraction(p).numerator, Fraction(p).denominator)
            for i, j, v in nz:
                flat[(a * tr + i) * cols + b * tc + j] = p * v
    return qmat(k * tr, cols, flat)


def _ident(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def jump_map(L: Layout, dom: Domain, extract=None, facets=None) -> D.LinearMap:
    """Differences of (extracted) traces across interior facets.

    ``extract(facet)`` returns a k x ncomp matrix applied to the trace;
    default is the identity (full continuity).
    """
    facets = dom.interior_facets if facets is None else facets
    terms, rows = [], []
    for f, a, b in facets:
        P = _ident(L.ncomp) if extract is None else extract(f)
        Ta = _kron(P, trace_matrix(L.cells[a], f, L.degree))
        Tb = _kron(P, trace_matrix(L.cells[b], f, L.degree))
        terms.append([(a, Ta), (b, -Tb)])
        rows.append(Ta.nrows())
    return D.LinearMap(L, None, terms, rows)


def boundary_map(L: Layout, dom: Domain, extract=None) -> D.LinearMap:
    """(Extracted) traces on boundary facets."""
    terms, rows = [], []
    for f, a in dom.boundary_facets:
        P = _ident(L.ncomp) if extract is None else extract(f)
        Ta = _kron(P, trace_matrix(L.cells[a], f, L.degree))
        terms.append([(a, Ta)])
        rows.append(Ta.nrows())
    return D.LinearMap(L, None, terms, rows)


def tangential_extract(dom):
    def ext(f):
        p = dom.coords(f)
        if dom.dim == 3:
            return [list(sub(p[1], p[0])), list(sub(p[2], p[0]))]
        return [list(sub(p[1], p[0]))]
    return ext


def normal_extract(dom):
    return lambda f: [list(dom.facet_normal(f))]


def moment_map(L: Layout, dom: Domain, tests: PiecewiseField) -> D.LinearMap:
    """Rows int v . kappa over the domain for exact test fields kappa."""
    if not tests.field.exact:
        raise ValueError("moment tests must be exact")
    terms = []
    for c in range(len(L.cells)):
        M = mass_matrix(L.nverts, L.degree, tests.layout.degree)
        K = tests.blocks[c]
        G = qmat(L.block, tests.layout.block)
        nb, mb = L.nb, tests.layout.nb
        from .bernstein import _kron_eye
        G = _kron_eye(L.ncomp, M)
        m = dom.measure(c)
        row = (G * K).transpose() * flint.fmpq(m.numerator, m.denominator)
        terms.append((c, row))
    return D.LinearMap(L, None, [terms], [tests.ncols])


def mean_map(L: Layout, dom: Domain) -> D.LinearMap:
    """Integral of each component."""
    terms = []
    for c in range(len(L.cells)):
        w = integral_weights(L.nverts, L.degree)
        m = dom.measure(c)
        flat = [0] * (L.ncomp * L.block)
        for k in range(L.ncomp):
            for a in range(L.nb):
                flat[k * L.block + k * L.nb + a] = w[a] * m
        terms.append((c, qmat(L.ncomp, L.block, flat)))
    return D.LinearMap(L, None, [terms], [L.ncomp])


def theta_map(L: Layout, dom: Domain, vector: bool) -> D.LinearMap:
    """Global jump functionals theta_e (of w . t_e for vector fields)."""
    terms, rows = [], []
    for e, slots, t in dom.theta:
        P = [list(t)] if vector else [[1]]
        acc = {}
        for cell, sign in slots:
            T = _kron(P, trace_matrix(L.cells[cell], e, L.degree)) * sign
            acc[cell] = T if cell not in acc else acc[cell] + T
        terms.append(sorted(acc.items()))
        rows.append(L.nb and bdim(1, L.degree))
    return D.LinearMap(L, None, terms, rows)


def ct_face_map(L: Layout, dom: Domain, extract) -> D.LinearMap:
    """Continuity across Clough-Tocher edges on the macro faces of one tet."""
    terms, rows = [], []
    for e, a, b, n in dom.ct_pairs:
        P = extract(n)
        Ta = _kron(P, trace_matrix(L.cells[a], e, L.degree))
        Tb = _kron(P, trace_matrix(L.cells[b], e, L.degree))
        terms.append([(a, Ta), (b, -Tb)])
        rows.append(Ta.nrows())
    return D.LinearMap(L, None, terms, rows)


def _tangents(n):
    """Two rational vectors spanning the plane orthogonal to n."""
    n = tuple(Fraction(x) for x in n)
    e = min(range(3), key=lambda i: abs(n[i]))
    a = tuple(Fraction(int(i == e)) for i in range(3))
    t1 = cross(n, a)
    return t1, cross(n, t1)


# polynomial test fields ---------------------------------------------------------
def _poly_field(L: Layout, polys) -> PiecewiseField:
    from .bernstein import polynomial_field
    return polynomial_field(L, polys)


def rigid_field(L: Layout) -> PiecewiseField:
    """The six rigid motions a + b x x (exact, degree >= 1 layout)."""
    cols = []
    for k in range(3):
        cols.append([{(0, 0, 0): int(i == k)} for i in range(3)])
    X = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    for k in range(3):
        b = [int(i == k) for i in range(3)]
        comps = []
        for i in range(3):
            # (b x x)_i = sum eps_{ijl} b_j x_l
            poly = {}
            for (a_, j, l), s in D.LEVI.items():
                if a_ == i and b[j]:
                    poly[X[l]] = poly.get(X[l], 0) + s * b[j]
            comps.append(poly)
        cols.append(comps)
    return _poly_field(L, cols)


def linear_field(L: Layout) -> PiecewiseField:
    """Scalar polynomials 1, x, y, z."""
    return _poly_field(L, [[{m: 1}] for m in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))])


def gram(dom: Domain, a: PiecewiseField, b: PiecewiseField):
    """L2 Gram matrix a' M b over the domain in the fields' common field."""
    F = a.field
    La, Lb = a.layout, b.layout
    from .bernstein import _kron_eye
    out = None
    M = _kron_eye(La.ncomp, mass_matrix(La.nverts, La.degree, Lb.degree))
    for c in range(len(La.cells)):
        m = dom.measure(c)
        G = F.convert(M * flint.fmpq(m.numerator, m.denominator))
        term = a.blocks[c].transpose() * G * b.blocks[c]
        out = term if out is None else out + term
    return out


# catalog -------------------------------------------------------------------------
def space(name: str, dom: Domain, r: int, F: Field | None = None) -> FESpace:
    """Named space of degree ``r`` on a domain (cached per domain and field)."""
    F = F or Field()
    key = (name, r, F.p)
    if key in dom._cache:
        return dom._cache[key]
    builders = _BUILD2 if dom.dim == 2 else _BUILD3
    if name not in builders:
        raise KeyError(f"unknown space {name!r} for a {dom.dim}D domain")
    if r < 0:
        raise ValueError(f"degree {r} is negative")
    sp = builders[name](dom, r, F)
    sp.name = name
    sp.meta.setdefault("degree", r)
    dom._cache[key] = sp
    return sp


def _grad_jump(dom, L):
    g = D.grad(L)
    return jump_map(g.dst, dom) @ g


def _op_jump(dom, L, op):
    m = op(L)
    return jump_map(m.dst, dom) @ m


def _op_bdry(dom, L, op):
    m = op(L)
    return boundary_map(m.dst, dom) @ m


# 3D builders
def _L0(dom, r, F):
    return lagrange(dom, r, F)


def _L0o(dom, r, F):
    return lagrange(dom, r, F, ring=True)


def _mean0(sp, dom):
    return constrain(sp, mean_map(sp.layout, dom))


def _V1(dom, r, F, ring=False):
    sp = discontinuous(dom, r, 3, F)
    cons = [jump_map(sp.layout, dom, tangential_extract(dom))]
    if ring:
        cons.append(boundary_map(sp.layout, dom, tangential_extract(dom)))
    return constrain(sp, cons)


def _V2(dom, r, F, ring=False):
    sp = discontinuous(dom, r, 3, F)
    cons = [jump_map(sp.layout, dom, normal_extract(dom))]
    if ring:
        cons.append(boundary_map(sp.layout, dom, normal_extract(dom)))
    return constrain(sp, cons)


def _face_tangential(n):
    t1, t2 = _tangents(n)
    return [list(t1), list(t2)]


def _Vc2(dom, r, F, ring=False):
    sp = space("V2", dom, r, F)
    cons = [ct_face_map(sp.layout, dom, _face_tangential)]
    if ring:
        cons.append(boundary_map(sp.layout, dom, normal_extract(dom)))
    return constrain(sp, cons)


def _Vc3(dom, r, F, ring=False):
    sp = discontinuous(dom, r, 1, F)
    sp = constrain(sp, ct_face_map(sp.layout, dom, lambda n: [[1]]))
    return _mean0(sp, dom) if ring else sp


def _S(dom, r, F, base, op, ring):
    sp = space(base, dom, r, F)
    L = sp.layout
    cons = [_op_jump(dom, L, op)]
    if ring:
        cons.append(_op_bdry(dom, L, op))
    return constrain(sp, cons)


def _Vs2(dom, r, F):
    sp = space("V2", dom, r, F)
    return constrain(sp, theta_map(sp.layout, dom, True))


def _Vs3(dom, r, F):
    sp = discontinuous(dom, r, 1, F)
    return constrain(sp, theta_map(sp.layout, dom, False))


_BUILD3 = {
    "L0": _L0, "L0_ring": _L0o,
    "V0": _L0, "V0_ring": _L0o,
    "L1": lambda d, r, F: power(space("L0", d, r, F), 3),
    "L1_ring": lambda d, r, F: power(space("L0_ring", d, r, F), 3),
    "L2": lambda d, r, F: space("L1", d, r, F),
    "L2_ring": lambda d, r, F: space("L1_ring", d, r, F),
    "L3": lambda d, r, F: space("L0", d, r, F),
    "L3_ring": lambda d, r, F: _mean0(space("L0_ring", d, r, F), d),
    "V1": _V1, "V1_ring": lambda d, r, F: _V1(d, r, F, True),
    "V2": _V2, "V2_ring": lambda d, r, F: _V2(d, r, F, True),
    "V3": lambda d, r, F: discontinuous(d, r, 1, F),
    "V3_ring": lambda d, r, F: _mean0(discontinuous(d, r, 1, F), d),
    "Vc2": _Vc2, "Vc2_ring": lambda d, r, F: _Vc2(d, r, F, True),
    "Vc3": _Vc3, "Vc3_ring": lambda d, r, F: _Vc3(d, r, F, True),
    "S0": lambda d, r, F: _S(d, r, F, "L0", D.grad, False),
    "S0_ring": lambda d, r, F: _S(d, r, F, "L0_ring", D.grad, True),
    "S1": lambda d, r, F: _S(d, r, F, "L1", D.curl, False),
    "S1_ring": lambda d, r, F: _S(d, r, F, "L1_ring", D.curl, True),
    "S2": lambda d, r, F: _S(d, r, F, "L2", D.div, False),
    "S2_ring": lambda d, r, F: _S(d, r, F, "L2_ring", D.div, True),
    "S3": lambda d, r, F: space("L0", d, r, F),
    "S3_ring": lambda d, r, F: space("L3_ring", d, r, F),
    # global spaces (theta conditions); on a local domain theta is empty
    "Vs2": _Vs2, "Vs3": _Vs3,
}


# 2D builders (tangential fields stored with 3 components)
def _tan_disc(dom, r, F):
    return frame_power(discontinuous(dom, r, 1, F), dom.frame)


def _edge_extract(dom, kind):
    n = dom.normal

    def ext(f):
        p = dom.coords(f)
        t = sub(p[1], p[0])
        return [list(t)] if kind == "curl" else [list(cross(n, t))]
    return ext


def _V1f(dom, r, F, kind, ring):
    sp = _tan_disc(dom, r, F)
    ext = _edge_extract(dom, kind)
    cons = [jump_map(sp.layout, dom, ext)]
    if ring:
        cons.append(boundary_map(sp.layout, dom, ext))
    return constrain(sp, cons)


def _S0f(dom, r, F, ring=False):
    sp = space("L0_ring" if ring else "L0", dom, r, F)
    L = sp.layout
    cons = [_op_jump(dom, L, D.grad_f)]
    if ring:
        cons.append(_op_bdry(dom, L, D.grad_f))
    return constrain(sp, cons)


def _R0f(dom, r, F):
    sp = space("S0", dom, r, F)
    return constrain(sp, boundary_map(sp.layout, dom))


def _S1f(dom, r, F):
    sp = space("L1", dom, r, F)
    n = dom.normal
    return constrain(sp, _op_jump(dom, sp.layout, lambda L: D.curl_f(L, n)))


def _skew_free(sp, dom):
    return constrain(sp, D.skew_f(sp.layout, dom.normal))


def _Q1(dom, r, F):
    return _skew_free(frame_power(space("V1div", dom, r, F), dom.frame), dom)


def _Q1t(dom, r, F):
    return _skew_free(frame_power(space("L1", dom, r, F), dom.frame), dom)


def _Q2o(dom, r, F):
    sp = space("V2", dom, r, F)
    lin = linear_field(dom.layout(max(r, 1), 1))
    return constrain(sp, moment_map(sp.layout, dom, lin if r >= 1 else lin.elevate(1)))


def _Qinc(dom, r, F):
    """Matrices with rows in the ring L1 whose row-wise curl_F is in the ring V1curl."""
    sp = frame_power(space("L1_ring", dom, r, F), dom.frame)
    c = D.curl_f(sp.layout, dom.normal)
    ext = _edge_extract(dom, "curl")
    cons = [jump_map(c.dst, dom, ext) @ c, boundary_map(c.dst, dom, ext) @ c]
    return constrain(sp, cons)


def _Qinc_sym(dom, r, F):
    sp = space("Qinc_ring", dom, r, F)
    return image(sp, D.sym(sp.layout))


def _qperp(dom, r, F):
    return q_perp(dom, r, F)


_BUILD2 = {
    "L0": _L0, "L0_ring": _L0o, "V0": _L0, "V0_ring": _L0o,
    "L1": lambda d, r, F: frame_power(space("L0", d, r, F), d.frame),
    "L1_ring": lambda d, r, F: frame_power(space("L0_ring", d, r, F), d.frame),
    "L2": lambda d, r, F: space("L0", d, r, F),
    "L2_ring": lambda d, r, F: _mean0(space("L0_ring", d, r, F), d),
    "V1curl": lambda d, r, F: _V1f(d, r, F, "curl", False),
    "V1curl_ring": lambda d, r, F: _V1f(d, r, F, "curl", True),
    "V1div": lambda d, r, F: _V1f(d, r, F, "div", False),
    "V1div_ring": lambda d, r, F: _V1f(d, r, F, "div", True),
    "V1": lambda d, r, F: space("V1curl", d, r, F),
    "V1_ring": lambda d, r, F: space("V1curl_ring", d, r, F),
    "V2": lambda d, r, F: discontinuous(d, r, 1, F),
    "V2_ring": lambda d, r, F: _mean0(discontinuous(d, r, 1, F), d),
    "S0": _S0f, "S0_ring": lambda d, r, F: _S0f(d, r, F, True),
    "S1": _S1f, "S2": lambda d, r, F: space("L0", d, r, F),
    "R0": _R0f,
    "Q1": _Q1, "Q1_tilde": _Q1t, "Q2_ring": _Q2o, "Q_perp": _qperp,
    "Qinc_ring": _Qinc, "Qinc_sym_ring": _Qinc_sym,
}


def q_perp(dom: Domain, r: int, F: Field | None = None) -> FESpace:
    """Mass-orthogonal complement of Q1_tilde inside Q1 on one face."""
    F = F or Field()
    Q1 = space("Q1", dom, r, F)
    Qt = space("Q1_tilde", dom, r, F)
    G = gram(dom, Qt.basis, Q1.basis)
    N = F.nullspace(G)
    return FESpace("Q_perp", Q1.layout, Q1.basis @ N, r)


# U spaces ---------------------------------------------------------------------------
def u_space(k: int, dom: Domain, r: int, F: Field | None = None, ring: bool = False) -> FESpace:
    """U^k in the degree convention U0_{r+1}, U1_r, U2_{r-2}, U3_{r-3}."""
    F = F or Field()
    if r < 3:
        raise ValueError("U spaces need r >= 3")
    key = ("U", k, r, ring, F.p)
    if key in dom._cache:
        return dom._cache[key]
    o = "_ring" if ring else ""
    name = f"U{k}{o}"
    if k == 0:
        sp = power(space("S0" + o, dom, r + 1, F), 3, name)
    elif k == 1:
        base = power(space("S1" + o, dom, r, F), 3)
        sp = image(base, D.sym(base.layout), name)
    elif k == 2:
        base = power(space("Vc2_ring" if ring else ("V2" if not dom.theta else "Vs2"), dom, r - 2, F), 3)
        sp = constrain(base, D.skw(base.layout), name)
    elif k == 3:
        sp = power(space("V3", dom, r - 3, F), 3, name)
        if ring:
            L = sp.layout
            R = rigid_field(L.with_(degree=max(L.degree, 1)))
            sp = constrain(sp, moment_map(L, dom, R), name)
    else:
        raise ValueError("k must be 0..3")
    sp.name = name
    sp.degree = sp.layout.degree
    dom._cache[key] = sp
    return sp


def u_catalog(k: int, r: int, dom: Domain, ring: bool = False, F: Field | None = None) -> FESpace:
    return u_space(k, dom, r, F, ring)


# dimension tables --------------------------------------------------------------------
def _pos(x):
    return max(x, 0)


TABLE1 = {
    # name: (row, k, formula, validity range)
    "V0": ("V", 0, lambda r: (3 * r * r + 3 * r + 2) // 2, (1, 5)),
    "V1": ("V", 1, lambda r: 3 * (r + 1) ** 2, (1, 5)),
    "V1div": ("V", 1, lambda r: 3 * (r + 1) ** 2, (1, 5)),
    "V2": ("V", 2, lambda r: 3 * (r + 1) * (r + 2) // 2, (1, 5)),
    "V0_ring": ("Vo", 0, lambda r: (3 * r * r - 3 * r + 2) // 2, (1, 5)),
    "V1_ring": ("Vo", 1, lambda r: 3 * r * (r + 1), (1, 5)),
    "V1div_ring": ("Vo", 1, lambda r: 3 * r * (r + 1), (1, 5)),
    "V2_ring": ("Vo", 2, lambda r: 3 * (r + 1) * (r + 2) // 2 - 1, (1, 5)),
    "L0": ("L", 0, lambda r: (3 * r * r + 3 * r + 2) // 2, (1, 5)),
    "L1": ("L", 1, lambda r: 3 * r * r + 3 * r + 2, (1, 5)),
    "L2": ("L", 2, lambda r: (3 * r * r + 3 * r + 2) // 2, (1, 5)),
    "L0_ring": ("Lo", 0, lambda r: (3 * r * r - 3 * r + 2) // 2, (1, 5)),
    "L1_ring": ("Lo", 1, lambda r: 3 * r * r - 3 * r + 2, (1, 5)),
    "L2_ring": ("Lo", 2, lambda r: 3 * r * (r - 1) // 2, (1, 5)),
    "S0": ("S", 0, lambda r: 3 * (r * r - r + 2) // 2, (1, 5)),
    "S1": ("S", 1, lambda r: 3 * r * r + 3, (1, 5)),
    "S2": ("S", 2, lambda r: (3 * r * r + 3 * r + 2) // 2, (1, 5)),
    "R0": ("R", 0, lambda r: 3 * (r - 1) * (r - 2) // 2, (1, 5)),
    "Q1": ("Q", 1, lambda r: 3 * (3 * r * r + 5 * r + 2) // 2, (1, 5)),
}

TABLE2 = {
    "V0": (lambda r: (2 * r + 1) * (r * r + r + 1), (1, 4)),
    "V1": (lambda r: 2 * (r + 1) * (3 * r * r + 6 * r + 4), (1, 4)),
    "V2": (lambda r: 3 * (r + 1) * (r + 2) * (2 * r + 3), (1, 4)),
    "V3": (lambda r: 2 * (r + 1) * (r + 2) * (r + 3), (1, 4)),
    "V0_ring": (lambda r: (2 * r - 1) * (r * r - r + 1), (1, 4)),
    "V1_ring": (lambda r: 2 * (r + 1) * (3 * r * r + 1), (1, 4)),
    "V2_ring": (lambda r: 3 * (r + 1) * (r + 2) * (2 * r + 1), (1, 4)),
    "V3_ring": (lambda r: 2 * r ** 3 + 12 * r * r + 22 * r + 11, (1, 4)),
    "L0": (lambda r: (2 * r + 1) * (r * r + r + 1), (1, 4)),
    "L1": (lambda r: 3 * (2 * r + 1) * (r * r + r + 1), (1, 4)),
    "L2": (lambda r: 3 * (2 * r + 1) * (r * r + r + 1), (1, 4)),
    "L3": (lambda r: (2 * r + 1) * (r * r + r + 1), (1, 4)),
    "L0_ring": (lambda r: (2 * r - 1) * (r * r - r + 1), (1, 4)),
    "L1_ring": (lambda r: 3 * (2 * r - 1) * (r * r - r + 1), (1, 4)),
    "L2_ring": (lambda r: 3 * (2 * r - 1) * (r * r - r + 1), (1, 4)),
    "L3_ring": (lambda r: (r - 1) * (2 * r * r - r + 2), (1, 4)),
    "Vc2_ring": (lambda r: 6 * r ** 3 + 21 * r * r + 9 * r + 2, (1, 4)),
    "Vc3_ring": (lambda r: 2 * r ** 3 + 12 * r * r + 10 * r + 3, (1, 4)),
    "S0": (lambda r: 2 * r ** 3 - 6 * r * r + 10 * r - 2, (2, 4)),
    "S1": (lambda r: 3 * r * (2 * r * r - 3 * r + 5), (2, 4)),
    "S2": (lambda r: 6 * r ** 3 + 8 * r + 2, (2, 4)),
    "S3": (lambda r: (2 * r + 1) * (r * r + r + 1), (2, 4)),
    "S0_ring": (lambda r: _pos(2 * (r - 2) * (r - 3) * (r - 4)), (2, 4)),
    "S1_ring": (lambda r: _pos(3 * (2 * r - 3) * (r - 2) * (r - 3)), (2, 4)),
    "S2_ring": (lambda r: _pos(2 * (r - 2) * (3 * r * r - 6 * r + 4)), (2, 4)),
    "S3_ring": (lambda r: (r - 1) * (2 * r * r - r + 2), (2, 4)),
}

U_DIMS = {
    (0, False): lambda r: 6 * r ** 3 + 12 * r + 12,
    (1, False): lambda r: 12 * r ** 3 - 9 * r * r + 15 * r + 6,
    (2, False): lambda r: 12 * r ** 3 - 27 * r * r + 15 * r,
    (3, False): lambda r: 6 * r ** 3 - 18 * r * r + 12 * r,
    (0, True): lambda r: 6 * r ** 3 - 36 * r * r + 66 * r - 36,
    (1, True): lambda r: 12 * r ** 3 - 63 * r * r + 87 * r - 18,
    (2, True): lambda r: 12 * r ** 3 - 45 * r * r + 33 * r + 12,
    (3, True): lambda r: 6 * r ** 3 - 18 * r * r + 12 * r - 6,
}


@dataclass
class DimRow:
    space: str
    r: int
    expected: int | None
    computed: int | None
    status: str  # "pass", "fail" or "skipped"

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def dims_table(table: str, r: int, dom: Domain, F: Field | None = None, names=None) -> list[DimRow]:
    """Expected-vs-computed dimension rows for table "1", "2" or "U"."""
    F = F or Field()
    rows = []
    if table == "U":
        for ring in (False, True):
            for k in range(4):
                name = f"U{k}{'_ring' if ring else ''}"
                if names and name not in names:
                    continue
                if r < 3:
                    rows.append(DimRow(name, r, None, None, "skipped"))
                    continue
                exp = U_DIMS[(k, ring)](r)
                got = u_space(k, dom, r, F, ring).dim
                rows.append(DimRow(name, r, exp, got, "pass" if exp == got else "fail"))
        return rows
    tab = {"1": {k: (v[2], v[3]) for k, v in TABLE1.items()}, "2": TABLE2}[str(table)]
    for name, (formula, (lo, hi)) in tab.items():
        if names and name not in names:
            continue
        if not lo <= r <= hi:
            rows.append(DimRow(name, r, None, None, "skipped"))
            continue
        exp = formula(r)
        got = space(name, dom, r, F).dim
        rows.append(DimRow(name, r, exp, got, "pass" if exp == got else "fail"))
    return rows


# characterization and rigid projection ------------------------------------------------
def characterization_check(dom: Domain, r: int, F: Field | None = None, ring: bool = False) -> dict:
    """Compare the sym-image U1 with its constraint description.

    The constraint space is {u symmetric, continuous (vanishing on the
    boundary for the ring version), (curl u)' in V1_{r-1} (x) V}, plus
    inc u in Vc2_ring_{r-2} (x) V for the ring version.
    """
    F = F or Field()
    U1 = u_space(1, dom, r, F, ring)
    L0 = space("L0_ring" if ring else "L0", dom, r, F)
    base = power(power(L0, 3), 3)
    base = image(base, D.sym(base.layout))
    L = base.layout
    c = D.curl(L)
    t = D.transpose(c.dst)
    ct = t @ c
    ext = tangential_extract(dom)
    rowext = lambda f: _rows_kron(ext(f))
    cons = [jump_map(ct.dst, dom, rowext) @ ct]
    if ring:
        cons.append(boundary_map(ct.dst, dom, rowext) @ ct)
    M = constrain(base, cons)
    if ring:
        inc = D.inc(L)
        target = power(space("Vc2_ring", dom, r - 2, F), 3)
        # membership of inc u in the target: u' = columns of inc(M) in span(target)
        img = inc(M.basis)
        P = F.hstack([target.matrix(), img.stacked()], target.layout.size)
        N = F.nullspace(P)
        coeff = F.take_rows(N, list(range(target.dim, target.dim + M.dim)))
        M = FESpace(M.name, M.layout, M.basis @ coeff, M.degree)
        piv = F.column_basis(M.matrix())
        M = FESpace("U1_constraint", M.layout, M.basis.take(piv), M.degree)
    ok_inclusion = contains(M, U1.basis) if U1.dim else True
    both = F.rank(F.hstack([U1.matrix(), M.matrix()], L.size)) if (U1.dim or M.dim) else 0
    return {
        "r": r, "ring": ring, "dim_image": U1.dim, "dim_constraint": M.dim,
        "expected": U_DIMS[(1, ring)](r), "image_in_constraint": ok_inclusion,
        "equal": U1.dim == M.dim == both,
    }


def _rows_kron(P):
    """Apply a k x 3 extraction to each row of a matrix field (3k x 9)."""
    k = len(P)
    out = [[0] * 9 for _ in range(3 * k)]
    for i in range(3):
        for a in range(k):
            for j in range(3):
                out[i * k + a][3 * i + j] = P[a][j]
    return out


def proj_rigid_check(dom: Domain, F: Field | None = None) -> dict:
    """L2 projection of the rigid motions onto piecewise constants (U3 at r=3)."""
    F = F or Field()
    U3 = u_space(3, dom, 3, F)
    U3o = u_space(3, dom, 3, F, ring=True)
    L1 = U3.layout.with_(degree=1)
    R = rigid_field(L1).convert(F)
    # per cell, the projection onto constants is the cell average
    G = gram(dom, U3.basis, U3.basis)
    b = gram(dom, U3.basis, R)
    coef = F.solve(G, b)
    PR = U3.basis @ coef
    const = F.hstack([PR.stacked()], U3.layout.size)
    dim_pr = F.rank(const)
    both = F.rank(F.hstack([PR.stacked(), U3o.matrix()], U3.layout.size))
    # constants are reproduced
    consts = R.take([0, 1, 2])
    cproj = U3.basis @ F.solve(G, gram(dom, U3.basis, consts))
    const_ok = cproj.elevate(1).equals(consts)
    return {"dim_PR": dim_pr, "rank_sum": both, "dim_U3": U3.dim, "dim_U3_ring": U3o.dim,
            "constants_reproduced": const_ok,
            "pass": dim_pr == 6 and both == U3.dim and U3o.dim == U3.dim - 6 and const_ok}
