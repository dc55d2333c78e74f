"""Degrees of freedom for U0..U3 on one Worsey-Farin macro tetrahedron.

Each family is an evaluator: it maps a piecewise field of any degree (a
space element or an interpolated smooth input) to the column of its DOF
values, computed in the field's own arithmetic.  The DOF matrix of a space
is the evaluation of its basis; projections solve against that matrix.

Integrals are taken relative to fixed per-entity scalings (edge length,
face area over |n|, raw normals), which rescales whole families and leaves
their span, unisolvence and the projections unchanged.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Callable

from . import diffops as D
from . import fespaces as FS
from .bernstein import PiecewiseField, _kron_eye, mass_matrix, polynomial_field, random_polynomial
from .rlinalg import AUTO_COLUMNS, Field, SingularMatrix, modular_fields
from .wfmesh import SplitComplex, builtin, cross, sub, wf_split_global

__all__ = [
    "DofFunctional", "DofFamily", "DofSet", "Projection", "dofs_u0", "dofs_u1", "dofs_u2",
    "dofs_u3", "dofs", "build", "project", "commuting_suite", "CommutingReport", "EXPECTED_COUNTS",
]

# family count formulas: space -> [(tag, entity kind, count(r))]
EXPECTED_COUNTS = {
    "U0": [
        ("U0:dofa", "vertex", lambda r: 12),
        ("U0:dofb", "vertex", lambda r: 36),
        ("U0:dofc", "edge", lambda r: 18 * (r - 2)),
        ("U0:dofd", "edge", lambda r: 36 * (r - 1)),
        ("U0:dofe", "face", lambda r: 12 * r * r - 36 * r + 24),
        ("U0:doff", "face", lambda r: 6 * r * r - 18 * r + 12),
        ("U0:dofg", "face", lambda r: 6 * r * r - 18 * r + 12),
        ("U0:dofh", "face", lambda r: 12 * r * r - 36 * r + 24),
        ("U0:dofi", "interior", lambda r: 6 * (r - 1) * (r - 2) * (r - 3)),
    ],
    "U1": [
        ("U1:dofa", "vertex", lambda r: 24),
        ("U1:dofb", "edge", lambda r: 36 * (r - 1)),
        ("U1:dofc", "edge", lambda r: 18 * r),
        ("U1:dofd", "face", lambda r: 12 * (r - 2)),
        ("U1:dofe", "face", lambda r: 6 * r * r - 6 * r - 12),
        ("U1:doff", "face", lambda r: 12 * r * r - 24 * r),
        ("U1:dofg", "face", lambda r: 12 * (r * r - 3 * r + 2)),
        ("U1:dofh", "face", lambda r: 12 * (r * r - 3 * r + 2)),
        ("U1:dofi", "face", lambda r: 6 * (r * r - 3 * r + 2)),
        ("U1:dofj", "face", lambda r: 6 * (r * r - 3 * r + 2)),
        ("U1:dofk", "interior", lambda r: 6 * r ** 3 - 27 * r * r + 21 * r + 18),
        ("U1:dofl", "interior", lambda r: 6 * (r - 1) * (r - 2) * (r - 3)),
    ],
    "U2": [
        ("U2:dofa", "face", lambda r: 12 * (r - 2)),
        ("U2:dofb", "face", lambda r: 6 * r * r - 6 * r),
        ("U2:dofc", "face", lambda r: 12 * r * r - 24 * r + 12),
        ("U2:dofd", "interior", lambda r: 6 * r ** 3 - 18 * r * r + 12 * r - 6),
        ("U2:dofe", "interior", lambda r: 6 * r ** 3 - 27 * r * r + 21 * r + 18),
    ],
    "U3": [
        ("U3:dofa", "interior", lambda r: 6),
        ("U3:dofb", "interior", lambda r: 6 * r ** 3 - 18 * r * r + 12 * r - 6),
    ],
}


@dataclass
class DofFunctional:
    """One row of a DOF set: family tag, supporting entity, test index."""
    tag: str
    entity_kind: str
    entity: tuple
    index: int


@dataclass
class DofFamily:
    """Functionals of one family on one entity.

    ``evaluate(f)`` returns a (count x f.ncols) matrix in ``f.field``.
    """
    tag: str
    entity_kind: str
    entity: tuple
    evaluate: Callable
    count: int


@dataclass
class DofSet:
    space: str
    r: int
    target: FS.FESpace
    families: list

    def __len__(self):
        return sum(f.count for f in self.families)

    def functionals(self) -> list[DofFunctional]:
        return [DofFunctional(f.tag, f.entity_kind, f.entity, i)
                for f in self.families for i in range(f.count)]

    def evaluate(self, g: PiecewiseField):
        """DOF values of every column of ``g`` (rows ordered by family)."""
        F = g.field
        blocks = [fam.evaluate(g) for fam in self.families if fam.count]
        return F.vstack(blocks, g.ncols)

    def matrix(self):
        return self.evaluate(self.target.basis)

    @cached_property
    def projection(self) -> "Projection":
        return Projection(self)

    def family_counts(self) -> dict:
        out = {}
        for fam in self.families:
            out[fam.tag] = out.get(fam.tag, 0) + fam.count
        return out

    def entity_counts(self) -> dict:
        out = {"vertex": 0, "edge": 0, "face": 0, "interior": 0}
        for fam in self.families:
            out[fam.entity_kind] += fam.count
        return out

    def count_check(self) -> list[dict]:
        got = self.family_counts()
        return [{"tag": tag, "entity": kind, "expected": fn(self.r), "count": got.get(tag, 0),
                 "pass": got.get(tag, 0) == fn(self.r)}
                for tag, kind, fn in EXPECTED_COUNTS[self.space]]

    def unisolvent(self, mode: str = "auto", seed: int = 0) -> tuple[bool, str]:
        """Square and nonsingular DOF matrix.  Returns (result, mode used)."""
        n = len(self)
        if n != self.target.dim:
            return False, "count"
        if mode == "auto":
            mode = "modular" if n > AUTO_COLUMNS else "exact"
        if mode == "exact":
            return Field().rank(self.matrix()) == n, "exact"
        ok = []
        for F in modular_fields(seed):
            ds = build(self.space, self.r, self.target.meta.get("split"), F)
            ok.append(F.rank(ds.matrix()) == n)
        if all(ok):
            return True, "modular"
        return Field().rank(self.matrix()) == n, "exact"

    def audit(self, mode: str = "auto", seed: int = 0) -> dict:
        uni, used = self.unisolvent(mode, seed)
        fams = {}
        for fam in self.families:
            key = fam.tag
            if key not in fams:
                fams[key] = {"tag": fam.tag, "entity": fam.entity_kind, "count": 0}
            fams[key]["count"] += fam.count
        ents = self.entity_counts()
        return {"space": self.space, "r": self.r, "families": list(fams.values()),
                "dim": self.target.dim, "unisolvent": uni, "mode": used,
                "vertex_dofs": ents["vertex"], "edge_dofs": ents["edge"]}


# geometry context ----------------------------------------------------------------
class _Context:
    """Macro tet, its split, the tet domain and per-face domains."""

    def __init__(self, sc: SplitComplex, F: Field, t: int = 0):
        self.S = sc
        self.F = F
        self.tet = sc.macro.tets[t]
        self.dom = FS.tet_domain(sc, t)
        self.vertices = list(self.tet)
        self.edges = [tuple(sorted(e)) for e in combinations(self.tet, 2)]
        self.faces = [tuple(sorted(f)) for f in combinations(self.tet, 3)]
        self.fdom = {f: FS.face_domain(sc, f, t) for f in self.faces}
        self._tests = {}

    def tests(self, key, build):
        if key not in self._tests:
            self._tests[key] = build()
        return self._tests[key]


def _split(sc):
    if sc is None:
        return wf_split_global(builtin("disphenoid"))
    if isinstance(sc, str):
        from .complexes import get_split
        return get_split(sc)
    return sc


# evaluator building blocks -----------------------------------------------------------
def _vertex_values(ctx, a, rows=None):
    def ev(g):
        v = D.apply(g, D.restrict, ((a,),)).stacked()
        return v if rows is None else g.field.take_rows(v, rows)
    return ev


def _edge_moments(g, e, k):
    """Moments of every component of g on macro edge e against P_k(e)."""
    h = D.apply(g, D.restrict, (e,))
    L = h.layout
    K = _kron_eye(L.ncomp, mass_matrix(2, L.degree, k).transpose())
    return g.field.convert(K) * h.blocks[0]


def _face_gram(ctx, f, tests, g):
    """int_F g . kappa for the test columns ``tests`` (on the face layout)."""
    fd = ctx.fdom[f]
    h = D.apply(g, D.restrict, fd.cells)
    return FS.gram(fd, tests.convert(g.field), h)


def _tet_gram(ctx, tests, g):
    if tests is None:
        return g.field.zeros(0, g.ncols)
    return FS.gram(ctx.dom, tests.convert(g.field), g)


def _edge_frame(ctx, e):
    p, q = (ctx.S.points[i] for i in e)
    t = sub(q, p)
    for axis in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        n1 = cross(t, axis)
        if any(n1):
            return t, n1, cross(t, n1)


def _normal(ctx, f):
    return tuple(Fraction(x) for x in ctx.fdom[f].normal)


def _sym_rows():
    return [3 * i + j for i in range(3) for j in range(i, 3)]


def _dir(L, t):
    return D.stencil(L, L.ncomp, {(c, c, k): t[k] for c in range(L.ncomp) for k in range(3)})


def _pick(L, rows):
    return D.pointwise(L, [[int(j == i) for j in range(L.ncomp)] for i in rows])


def _times_row(L, t):
    """M -> M t for a constant vector t."""
    return D.pointwise(L, [[t[j] if i == r_ else 0 for i in range(3) for j in range(3)] for r_ in range(3)])


def _face_space(ctx, f, name, k, F):
    return FS.space(name, ctx.fdom[f], k, F)


def _vec_face(ctx, f, sp):
    """[sp]^2 as tangential vector fields in the face frame."""
    return FS.frame_power(sp, ctx.fdom[f].frame)


def _rigid_face(ctx, f, L):
    """R(F): constants t1, t2 and the in-plane rotation n x x."""
    fd = ctx.fdom[f]
    t1, t2 = fd.frame
    n = fd.normal
    X = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    rot = []
    for a in range(3):
        poly = {}
        for (i, j, k), s in D.LEVI.items():
            if i == a and n[j]:
                poly[X[k]] = poly.get(X[k], 0) + s * n[j]
        rot.append(poly)
    const = lambda t: [{(0, 0, 0): x} for x in t]
    return polynomial_field(L, [const(t1), const(t2), rot])


def _grad_f(sp_basis):
    return D.apply(sp_basis, D.grad_f)


def _eps_f(sp_basis):
    return D.apply(D.apply(sp_basis, D.grad_f), D.sym)


# U0 ---------------------------------------------------------------------------------
def dofs_u0(r: int, sc=None, F: Field | None = None) -> DofSet:
    """DOFs of U0_{r+1}: vector fields of degree r+1."""
    _require(r)
    F = F or Field()
    ctx = _Context(_split(sc), F)
    fams = []
    for a in ctx.vertices:
        fams.append(DofFamily("U0:dofa", "vertex", (a,), _vertex_values(ctx, a), 3))
    for a in ctx.vertices:
        fams.append(DofFamily("U0:dofb", "vertex", (a,),
                              lambda g, a=a: _vertex_values(ctx, a)(D.apply(g, D.grad)), 9))
    for e in ctx.edges:
        fams.append(DofFamily("U0:dofc", "edge", e, lambda g, e=e: _edge_moments(g, e, r - 3),
                              3 * (r - 2)))
    for e in ctx.edges:
        _, n1, n2 = _edge_frame(ctx, e)
        for nv in (n1, n2):
            fams.append(DofFamily("U0:dofd", "edge", e,
                                  lambda g, e=e, nv=nv: _edge_moments(D.apply(g, _dir, nv), e, r - 2),
                                  3 * (r - 1)))
    for f in ctx.faces:
        n = _normal(ctx, f)
        fd = ctx.fdom[f]
        s0 = _face_space(ctx, f, "S0_ring", r + 1, F)
        r0 = _face_space(ctx, f, "R0", r, F)
        tests_e = _eps_f(_vec_face(ctx, f, s0).basis)
        tests_f = _grad_f(s0.basis)
        tests_g = r0.basis
        tests_h = _grad_f(_vec_face(ctx, f, r0).basis)

        def ev_e(g, f=f, n=n, tests=tests_e, fd=fd):
            h = D.apply(D.apply(g, D.tangential, n), D.restrict, fd.cells)
            return FS.gram(fd, tests.convert(g.field), _eps_f(h))

        def ev_f(g, f=f, n=n, tests=tests_f):
            h = D.cached(D.frame_parts, D.apply(g, D.eps).layout, n)["Fn"](D.apply(g, D.eps))
            return _face_gram(ctx, f, tests, h)

        def ev_g(g, f=f, n=n, tests=tests_g):
            h = D.apply(D.apply(g, D.dot_vec, n), _dir, n)
            return _face_gram(ctx, f, tests, h)

        def ev_h(g, f=f, n=n, tests=tests_h, fd=fd):
            # H1-seminorm pairing, so that U1:dofh commutes with eps
            h = D.apply(D.apply(g, D.tangential, n), _dir, n)
            h = D.apply(h, D.restrict, fd.cells)
            return FS.gram(fd, tests.convert(g.field), _grad_f(h))

        fams.append(DofFamily("U0:dofe", "face", f, ev_e, tests_e.ncols))
        fams.append(DofFamily("U0:doff", "face", f, ev_f, tests_f.ncols))
        fams.append(DofFamily("U0:dofg", "face", f, ev_g, tests_g.ncols))
        fams.append(DofFamily("U0:dofh", "face", f, ev_h, tests_h.ncols))
    u0o = FS.u_space(0, ctx.dom, r, F, ring=True)
    tests_i = D.apply(u0o.basis, D.eps) if u0o.dim else None
    fams.append(DofFamily("U0:dofi", "interior", (),
                          lambda g: _tet_gram(ctx, tests_i, D.apply(g, D.eps)), u0o.dim))
    return _dofset("U0", r, ctx, fams)


# U1 ---------------------------------------------------------------------------------
def _inc(g):
    return D.apply(g, D.inc)


def _curl_t(g):
    return D.apply(D.apply(g, D.curl), D.transpose)


def _parts(g, n):
    return D.cached(D.frame_parts, g.layout, n)


def _inc_images(ctx, r, F):
    """Independent columns of inc applied to the ring U1_r."""
    u1o = FS.u_space(1, ctx.dom, r, F, ring=True)
    if u1o.dim == 0:
        return None
    im = FS.image(u1o, lambda b: D.apply(b, D.inc))
    return im.basis if im.dim else None


def _uperp(g, n):
    """u_Fn x n / (n.n) for a matrix field (u_Fn = Q u n)."""
    nn = sum(x * x for x in n)
    h = _parts(g, n)["Fn"](g)
    return D.apply(h, D.cross_vec, n).scale(1 / nn)


def dofs_u1(r: int, sc=None, F: Field | None = None) -> DofSet:
    """DOFs of U1_r: symmetric matrix fields of degree r."""
    _require(r)
    F = F or Field()
    ctx = _Context(_split(sc), F)
    sym = _sym_rows()
    fams = []
    for a in ctx.vertices:
        fams.append(DofFamily("U1:dofa", "vertex", (a,), _vertex_values(ctx, a, sym), 6))
    for e in ctx.edges:
        fams.append(DofFamily("U1:dofb", "edge", e,
                              lambda g, e=e: _edge_moments(D.apply(g, _pick, tuple(sym)), e, r - 2),
                              6 * (r - 1)))
    for e in ctx.edges:
        t, _, _ = _edge_frame(ctx, e)
        fams.append(DofFamily("U1:dofc", "edge", e,
                              lambda g, e=e, t=t: _edge_moments(D.apply(_curl_t(g), _times_row, t), e, r - 1),
                              3 * r))
    for f in ctx.faces:
        n = _normal(ctx, f)
        fd = ctx.fdom[f]
        qp = FS.q_perp(fd, r - 2, F).basis
        q2 = _face_space(ctx, f, "Q2_ring", r - 2, F).basis
        v1 = _face_space(ctx, f, "V1div", r - 2, F)
        R = _rigid_face(ctx, f, v1.layout).convert(F)
        G = FS.gram(fd, R, v1.basis)
        vq = v1.basis @ F.nullspace(G)
        s0 = _face_space(ctx, f, "S0_ring", r + 1, F)
        r0 = _face_space(ctx, f, "R0", r, F)
        eps_s0 = _eps_f(_vec_face(ctx, f, s0).basis)
        grad_r0 = _grad_f(_vec_face(ctx, f, r0).basis)
        grad_s0 = _grad_f(s0.basis)

        def part(name, n=n):
            return lambda g: _parts(g, n)[name](g)

        def mk(tests, fn, f=f):
            return lambda g: _face_gram(ctx, f, tests, fn(g))

        def ev_h(g, f=f, n=n, fd=fd, tests=grad_r0):
            w = _parts(_curl_t(g), n)["FF"](_curl_t(g))
            w = D.apply(w, D.restrict, fd.cells)
            p = D.apply(_uperp(g, n), D.restrict, fd.cells)
            gp = D.apply(p, D.grad_f)
            d = max(w.layout.degree, gp.layout.degree)
            h = w.elevate(d) - gp.elevate(d)
            return FS.gram(fd, tests.convert(g.field), h)

        fams.append(DofFamily("U1:dofd", "face", f, mk(qp, lambda g, p=part("FF"): p(_inc(g))), qp.ncols))
        fams.append(DofFamily("U1:dofe", "face", f, mk(q2, lambda g, p=part("nn"): p(_inc(g))), q2.ncols))
        fams.append(DofFamily("U1:doff", "face", f, mk(vq, lambda g, p=part("Fn"): p(_inc(g))), vq.ncols))
        fams.append(DofFamily("U1:dofg", "face", f, mk(eps_s0, part("FF")), eps_s0.ncols))
        fams.append(DofFamily("U1:dofh", "face", f, ev_h, grad_r0.ncols))
        fams.append(DofFamily("U1:dofi", "face", f, mk(grad_s0, part("Fn")), grad_s0.ncols))
        fams.append(DofFamily("U1:dofj", "face", f, mk(r0.basis, part("nn")), r0.dim))
    tk = _inc_images(ctx, r, F)
    fams.append(DofFamily("U1:dofk", "interior", (),
                          lambda g: _tet_gram(ctx, tk, _inc(g)), tk.ncols if tk else 0))
    u0o = FS.u_space(0, ctx.dom, r, F, ring=True)
    tl = D.apply(u0o.basis, D.eps) if u0o.dim else None
    fams.append(DofFamily("U1:dofl", "interior", (),
                          lambda g: _tet_gram(ctx, tl, g), u0o.dim))
    return _dofset("U1", r, ctx, fams)


# U2, U3 -------------------------------------------------------------------------------
def dofs_u2(r: int, sc=None, F: Field | None = None) -> DofSet:
    """DOFs of U2_{r-2}: symmetric matrix fields of degree r-2."""
    _require(r)
    F = F or Field()
    ctx = _Context(_split(sc), F)
    fams = []
    for f in ctx.faces:
        n = _normal(ctx, f)
        fd = ctx.fdom[f]
        qp = FS.q_perp(fd, r - 2, F).basis
        v2 = _face_space(ctx, f, "V2", r - 2, F).basis
        v1 = _face_space(ctx, f, "V1div", r - 2, F).basis

        def mk(tests, name, f=f, n=n):
            return lambda g: _face_gram(ctx, f, tests, _parts(g, n)[name](g))

        fams.append(DofFamily("U2:dofa", "face", f, mk(qp, "FF"), qp.ncols))
        fams.append(DofFamily("U2:dofb", "face", f, mk(v2, "nn"), v2.ncols))
        fams.append(DofFamily("U2:dofc", "face", f, mk(v1, "nF"), v1.ncols))
    u3o = FS.u_space(3, ctx.dom, r, F, ring=True)
    fams.append(DofFamily("U2:dofd", "interior", (),
                          lambda g: _tet_gram(ctx, u3o.basis, D.apply(g, D.div)), u3o.dim))
    tk = _inc_images(ctx, r, F)
    fams.append(DofFamily("U2:dofe", "interior", (),
                          lambda g: _tet_gram(ctx, tk, g), tk.ncols if tk else 0))
    return _dofset("U2", r, ctx, fams)


def dofs_u3(r: int, sc=None, F: Field | None = None) -> DofSet:
    """DOFs of U3_{r-3}: vector fields of degree r-3."""
    _require(r)
    F = F or Field()
    ctx = _Context(_split(sc), F)
    R = FS.rigid_field(ctx.dom.layout(1, 3)).convert(F)
    u3o = FS.u_space(3, ctx.dom, r, F, ring=True)
    fams = [
        DofFamily("U3:dofa", "interior", (), lambda g: _tet_gram(ctx, R, g), 6),
        DofFamily("U3:dofb", "interior", (), lambda g: _tet_gram(ctx, u3o.basis, g), u3o.dim),
    ]
    return _dofset("U3", r, ctx, fams)


_BUILDERS = {"U0": dofs_u0, "U1": dofs_u1, "U2": dofs_u2, "U3": dofs_u3}


def build(space: str, r: int, sc=None, F: Field | None = None) -> DofSet:
    return _BUILDERS[space](r, sc, F)


dofs = build


def _require(r):
    if r < 3:
        raise ValueError("DOF sets need r >= 3")


def _dofset(name, r, ctx, fams):
    k = int(name[1])
    target = FS.u_space(k, ctx.dom, r, ctx.F)
    target.meta["split"] = ctx.S
    return DofSet(name, r, target, fams)


# projections --------------------------------------------------------------------------
class Projection:
    """Projection onto a DOF set's target space (exact arithmetic)."""

    def __init__(self, dofset: DofSet):
        if not dofset.target.field.exact:
            raise ValueError("projections are computed over Q")
        self.dofset = dofset
        A = dofset.matrix()
        Q = Field()
        if A.nrows() != A.ncols():
            raise SingularMatrix(f"{dofset.space}: {A.nrows()} DOFs for dimension {A.ncols()}")
        r = Q.rank(A)
        if r < A.nrows():
            w = Q.nullspace(A)
            raise SingularMatrix(f"{dofset.space}: DOF matrix is singular; witness column {list(w.entries())[:8]}", r)
        self.A = A

    def coefficients(self, g: PiecewiseField):
        return self.A.solve(self.dofset.evaluate(g))

    def __call__(self, g: PiecewiseField) -> PiecewiseField:
        return self.dofset.target.basis @ self.coefficients(g)


def project(dofset: DofSet, g) -> PiecewiseField:
    """Element of the target space with the same DOF values as ``g``.

    ``g`` is a PiecewiseField on the tet layout, or a list of monomial
    dicts (one per component) interpolated at a degree high enough to be
    exact.
    """
    P = dofset.projection
    if not isinstance(g, PiecewiseField):
        deg = max((sum(k) for comp in g for k in comp), default=0)
        L = dofset.target.layout.with_(degree=max(deg, 1), ncomp=len(g))
        g = polynomial_field(L, [dict(c) for c in g])
    return P(g)


# commuting diagram ----------------------------------------------------------------------
@dataclass
class CommutingReport:
    r: int
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _random_field(L, rng, ncomp, degree, symmetric=False):
    polys = [random_polynomial(degree, rng) for _ in range(ncomp)]
    if symmetric:
        for i in range(3):
            for j in range(i):
                polys[3 * i + j] = polys[3 * j + i]
    return polynomial_field(L.with_(degree=degree, ncomp=ncomp), polys)


def _same(a: PiecewiseField, b: PiecewiseField) -> bool:
    d = max(a.layout.degree, b.layout.degree)
    a = a.elevate(d) if a.layout.degree < d else a
    b = b.elevate(d) if b.layout.degree < d else b
    return a.equals(b)


def _fingerprint(g: PiecewiseField) -> list:
    """First coefficients of a field, serialized as p/q strings."""
    vals = g.cell_values(0, 0)[:6]
    return [f"{v.p}/{v.q}" for v in vals]


def commuting_suite(r: int = 3, sc=None, trials: int = 5, seed: int = 0,
                    sets=None) -> CommutingReport:
    """eps(P0 u) = P1 eps(u), inc(P1 v) = P2 inc(v), div(P2 w) = P3 div(w)."""
    S = _split(sc)
    sets = sets or {k: build(k, r, S) for k in ("U0", "U1", "U2", "U3")}
    P = {k: Projection(v) for k, v in sets.items()}
    rng = random.Random(seed)
    L = sets["U0"].target.layout
    rep = CommutingReport(r, seed)
    deg = r + 2
    for k in range(trials):
        u = _random_field(L, rng, 3, deg)
        v = _random_field(L, rng, 9, deg, symmetric=True)
        w = _random_field(L, rng, 9, deg, symmetric=True)
        cases = [
            ("eps", D.apply(P["U0"](u), D.eps), P["U1"](D.apply(u, D.eps)), u),
            ("inc", D.apply(P["U1"](v), D.inc), P["U2"](D.apply(v, D.inc)), v),
            ("div", D.apply(P["U2"](w), D.div), P["U3"](D.apply(w, D.div)), w),
        ]
        for name, lhs, rhs, inp in cases:
            ok = _same(lhs, rhs)
            row = {"name": f"commute_{name}[{k}]", "expected": "equal", "got": "equal" if ok else "differ",
                   "pass": ok}
            if not ok:
                row["counterexample"] = _fingerprint(inp)
            rep.checks.append(row)
    return rep
