"""Randomized exact checks of the vector calculus identities used by the
elasticity complexes.

Every identity is tested on random piecewise polynomial fields over the
Worsey-Farin split of one tetrahedron.  Surface operators in 3D are taken
with respect to a fixed rational orthonormal frame (t1, t2, n); the
tangential gradient and divergence are built from directional derivatives
along t1 and t2.  Identities that need boundary hypotheses sample their
inputs from the corresponding constrained spaces.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import diffops as D
from .bernstein import Layout, PiecewiseField, mass_matrix, _kron_eye
from .rlinalg import Field

__all__ = ["IdentityResult", "IDENTITIES", "identity_suite", "run_identity", "FRAME"]

_F = Fraction
T1 = (_F(2, 3), _F(1, 3), _F(2, 3))
T2 = (_F(-2, 3), _F(2, 3), _F(1, 3))
N = (_F(-1, 3), _F(-2, 3), _F(2, 3))
FRAME = (T1, T2, N)
# unit in-plane pair for the rotated-frame identities: l = a1 t1 + a2 t2, m = n x l
A1, A2 = _F(3, 5), _F(4, 5)
ELL = tuple(A1 * x + A2 * y for x, y in zip(T1, T2))
EM = tuple(A1 * y - A2 * x for x, y in zip(T1, T2))
Q = tuple(tuple(int(i == j) - N[i] * N[j] for j in range(3)) for i in range(3))


@dataclass
class IdentityResult:
    identity: str
    trials: int
    failures: int
    seed: int
    expected: str = "holds"
    counterexample: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        held = self.failures == 0
        return held if self.expected == "holds" else not held

    def to_dict(self) -> dict:
        return {"identity": self.identity, "trials": self.trials, "failures": self.failures,
                "seed": self.seed, "expected": self.expected, "pass": self.passed,
                "counterexample": self.counterexample}


# field helpers ---------------------------------------------------------------
_op = D.cached
_ap = D.apply


def _lift(f, degree):
    return f.elevate(degree) if f.layout.degree < degree else f


def _add(*fs):
    d = max(f.layout.degree for f in fs)
    out = _lift(fs[0], d)
    for f in fs[1:]:
        out = out + _lift(f, d)
    return out


def _same(a, b) -> bool:
    if a.layout.ncomp != b.layout.ncomp:
        raise ValueError("compared fields have different shapes")
    d = max(a.layout.degree, b.layout.degree)
    return _lift(a, d).equals(_lift(b, d))


def _zero(a) -> bool:
    return a.is_zero()


def _random(L: Layout, rng, lo=-5, hi=5) -> PiecewiseField:
    col = [[rng.randint(lo, hi) for _ in range(L.block)] for _ in L.cells]
    return PiecewiseField.from_coefficients(L, [col], Field())


def _pw(f, A):
    A = tuple(tuple(row) for row in A)
    return _op(D.pointwise, f.layout, A)(f)


def _stencil_map(L, nout, items):
    return D.stencil(L, nout, dict(items))


def _stencil(f, nout, ent):
    return _op(_stencil_map, f.layout, nout, tuple(sorted(ent.items())))(f)


def _dir(f, t):
    """Componentwise directional derivative along t."""
    return _stencil(f, f.layout.ncomp, {(c, c, k): t[k] for c in range(f.layout.ncomp) for k in range(3)})


def grad_t(f):
    """Tangential gradient (row-wise for vectors) in ambient coordinates."""
    rows = f.layout.ncomp
    return _stencil(f, 3 * rows, {(3 * i + a, i, k): Q[a][k]
                                  for i in range(rows) for a in range(3) for k in range(3)})


def div_t(f):
    """Tangential divergence (row-wise for matrices)."""
    rows = f.layout.ncomp // 3
    return _stencil(f, rows, {(i, 3 * i + c, k): Q[c][k]
                              for i in range(rows) for c in range(3) for k in range(3)})


def _row(f, s):
    """s' u as a vector (for a matrix field u)."""
    A = [[0] * 9 for _ in range(3)]
    for a in range(3):
        for c in range(3):
            A[c][3 * a + c] = s[a]
    return _pw(f, A)


def _bilinear(f, a, b):
    """a' u b as a scalar."""
    return _pw(f, [[a[i] * b[j] for i in range(3) for j in range(3)]])


def _times(f, w):
    """scalar phi -> phi w."""
    return _pw(f, [[x] for x in w])


def _ncross(f):
    """v -> n x v."""
    return _ap(f, D.cross_vec, N).scale(-1)


def _parts(f):
    return {k: m(f) for k, m in _op(D.frame_parts, f.layout, N).items()}


# sample spaces ---------------------------------------------------------------
_LAYOUT = {}


def _layout(ncomp: int, degree: int) -> Layout:
    if "tet" not in _LAYOUT:
        from .wfmesh import builtin, wf_split_global
        S = wf_split_global(builtin("disphenoid"))
        _LAYOUT["tet"] = (S.points, [S.cells[c] for c in S.tet_cells[0]])
    pts, cells = _LAYOUT["tet"]
    return Layout(pts, cells, degree, ncomp)


# identity bodies ---------------------------------------------------------------
# each takes (rng, degree) and returns a bool
def _u(rng, deg):
    return _random(_layout(9, deg), rng)


def _v(rng, deg):
    return _random(_layout(3, deg), rng)


def _phi(rng, deg):
    return _random(_layout(1, deg), rng)


def _iden1(rng, deg):
    u = _u(rng, deg)
    return _same(_ap(_ap(u, D.xi), D.div), _ap(_ap(u, D.curl), D.vskw).scale(2))


def _iden2(rng, deg):
    v = _v(rng, deg)
    return _same(_ap(_ap(v, D.grad), D.xi), -_ap(_ap(v, D.mskw), D.curl))


def _iden3(rng, deg):
    v = _v(rng, deg)
    w = _ap(_ap(_ap(v, D.mskw), D.curl), D.xi_inv)
    return _zero(_ap(w, D.curl))


def _iden4(rng, deg):
    u = _u(rng, deg)
    w = _ap(_ap(_ap(u, D.curl), D.xi_inv), D.curl)
    return _zero(_ap(w, D.vskw))


def _iden5(rng, deg):
    s = _ap(_u(rng, deg), D.sym)
    c = _ap(s, D.curl)
    lhs = _ap(_ap(c, D.xi_inv), D.curl)
    return _zero(_ap(c, D.trace)) and _same(lhs, _ap(s, D.inc))


def _ela1(rng, deg):
    return _zero(div_t(_ap(_phi(rng, deg), D.airy_f, N)))


def _ela2(rng, deg):
    uff = _parts(_u(rng, deg))["FF"]
    a = _same(_ap(_ap(uff, D.sym), D.inc_f, N), _ap(uff, D.inc_f, N))
    vf = _ap(_v(rng, deg), D.tangential, N)
    b = _zero(_ap(_ap(grad_t(vf), D.sym), D.inc_f, N))
    return a and b


def _ela3(rng, deg):
    phi = _phi(rng, deg)
    return _same(_ap(_ap(phi, D.skew_scalar_f, N), D.curl_f, N), grad_t(phi))


def _surf_curl(rng, deg):
    v = _v(rng, deg)
    vf = _ap(v, D.tangential, N)
    return _same(_ap(_ap(v, D.curl), D.dot_vec, N), _ap(vf, D.curl_f, N))


def _surf_grad(rng, deg):
    v = _v(rng, deg)
    vf = _ap(v, D.tangential, N)
    return _same(_parts(_ap(v, D.grad))["FF"], grad_t(vf))


def _surf_rot(rng, deg):
    phi = _phi(rng, deg)
    return _same(_ncross(_ap(phi, D.rot_f, N)), grad_t(phi))


def _surf_div(rng, deg):
    vf = _ap(_v(rng, deg), D.tangential, N)
    return _same(_ap(vf, D.div), div_t(vf))


def _perp(rng, deg):
    vf = _ap(_v(rng, deg), D.tangential, N)
    perp = _ap(vf, D.cross_vec, N)
    return _same(div_t(perp), _ap(vf, D.curl_f, N))


def _curlid(rng, deg):
    u = _u(rng, deg)
    s = (_F(1), _F(-2), _F(3, 2))
    return _same(_bilinear(_ap(u, D.curl), s, N), _ap(_row(u, s), D.curl_f, N))


def _id4(rng, deg):
    u = _u(rng, deg)
    return _same(_parts(_ap(u, D.curl))["Fn"], _ap(_parts(u)["FF"], D.curl_f, N))


def _id1(rng, deg):
    u = _ap(_u(rng, deg), D.sym)
    return _same(_parts(_ap(u, D.inc))["nn"], _ap(_parts(u)["FF"], D.inc_f, N))


def _id2(rng, deg):
    u = _ap(_u(rng, deg), D.sym)
    w = _ap(_ap(u, D.curl), D.transpose)
    return _same(_parts(_ap(u, D.inc))["nF"], _ap(_parts(w)["FF"], D.curl_f, N))


def _id3(rng, deg):
    u = _ap(_u(rng, deg), D.sym)
    return _same(_parts(_ap(u, D.curl))["trF"], -_ap(_parts(u)["nF"], D.curl_f, N))


def _more1(rng, deg):
    v = _v(rng, deg)
    lhs = _ap(_ap(_ap(v, D.eps), D.curl), D.transpose).scale(2)
    return _same(lhs, _ap(_ap(v, D.curl), D.grad))


def _more2(rng, deg):
    v = _v(rng, deg)
    w = _ap(_ap(_ap(v, D.eps), D.curl), D.transpose).scale(2)
    return _same(_parts(w)["FF"], grad_t(_ap(_ap(v, D.curl), D.tangential, N)))


def _more3(rng, deg):
    v = _v(rng, deg)
    vf = _ap(v, D.tangential, N)
    rhs = _add(_times(_ap(vf, D.curl_f, N), N), _ap(_ap(v, D.dot_vec, N), D.rot_f, N),
               _ncross(_dir(v, N)))
    return _same(_ap(v, D.curl), rhs)


def _more4(rng, deg):
    v = _v(rng, deg)
    lhs = _parts(_ap(v, D.eps))["Fn"].scale(2)
    rhs = _add(grad_t(_ap(v, D.dot_vec, N)), _dir(_ap(v, D.tangential, N), N))
    return _same(lhs, rhs)


def _more5(rng, deg, sign=-1):
    vf = _ap(_v(rng, deg), D.tangential, N)
    return _same(_parts(_ap(vf, D.rot_f, N))["trF"], _ap(vf, D.curl_f, N).scale(sign))


def _more5_plus(rng, deg):
    return _more5(rng, deg, 1)


def _rot1(rng, deg):
    u = _u(rng, deg)
    lhs = _bilinear(_ap(u, D.curl), ELL, EM)
    rhs = _add(_dir(_bilinear(u, ELL, ELL), N), -_dir(_bilinear(u, ELL, N), ELL))
    return _same(lhs, rhs)


def _rot2(rng, deg, pair=(ELL, EM), symmetric=False):
    u = _u(rng, deg)
    if symmetric:
        u = _ap(u, D.sym)
    lhs = _bilinear(_ap(u, D.curl), ELL, ELL)
    rhs = _add(-_dir(_bilinear(u, *pair), N), _dir(_bilinear(u, ELL, N), EM))
    return _same(lhs, rhs)


def _rot2_swapped(rng, deg):
    # m' u l in place of l' u m: agrees only for symmetric u
    return _rot2(rng, deg, (EM, ELL))


def _rot2_swapped_sym(rng, deg):
    return _rot2(rng, deg, (EM, ELL), True)


def _rot3(rng, deg):
    u = _u(rng, deg)
    lhs = _bilinear(_ap(u, D.curl), N, ELL)
    rhs = _add(_dir(_bilinear(u, N, N), EM), -_dir(_bilinear(u, N, EM), N))
    return _same(lhs, rhs)


def _curlff_terms(rng, deg):
    v = _v(rng, deg)
    u = _ap(v, D.eps)
    w = _ap(_ap(u, D.curl), D.transpose)
    uperp = _ap(_parts(u)["Fn"], D.cross_vec, N)
    b = _ap(_dir(_ap(v, D.tangential, N), N), D.cross_vec, N)
    return _parts(w)["FF"], grad_t(uperp), grad_t(b)


def _curlff(rng, deg):
    wff, gu, gb = _curlff_terms(rng, deg)
    return _same(wff, gu - gb)


def _curlff_plus(rng, deg):
    wff, gu, gb = _curlff_terms(rng, deg)
    return _same(wff, gu + gb)


# boundary-conditioned identities ---------------------------------------------------
def _integrate(f: PiecewiseField, g: PiecewiseField, measure=1) -> Fraction:
    """sum over cells of measure * int f.g / |cell| for one-column exact fields."""
    L, K = f.layout, g.layout
    M = _kron_eye(L.ncomp, mass_matrix(L.nverts, L.degree, K.degree))
    total = 0
    for c in range(len(L.cells)):
        x = f.blocks[c].transpose() * M * g.blocks[c]
        total += x[0, 0]
    total = Fraction(int(total.p), int(total.q)) if hasattr(total, "p") else Fraction(total)
    return total * measure


_TRI = ((0, 0, 0), (2, 1, 2), (-2, 2, 1), (-1, -2, 2))  # 0, 3t1, 3t2, 3n


def _ibp_inc(rng, deg):
    """int_F inc_F(u) phi = int_F u : airy_F(phi) + boundary terms, on one triangle."""
    L9 = Layout(_TRI, [(0, 1, 2)], deg, 9)
    u = _parts(_random(L9, rng))["FF"]
    phi = _random(Layout(_TRI, [(0, 1, 2)], deg, 1), rng)
    area = Fraction(9, 2)
    lhs = _integrate(_ap(u, D.inc_f, N), phi, area)
    rhs = _integrate(u, _ap(phi, D.airy_f, N), area)
    w = _ap(u, D.curl_f, N)
    rphi = _ap(phi, D.rot_f, N)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        t = tuple(x - y for x, y in zip(_TRI[b], _TRI[a]))
        e = [tuple(sorted((a, b)))]
        res = lambda f: D.restrict(f.layout, e)(f)
        rhs += _integrate(res(_ap(w, D.dot_vec, t)), res(phi))
        ut = _pw(u, [[t[j] if i == r_ else 0 for i in range(3) for j in range(3)] for r_ in range(3)])
        rhs += _integrate(res(ut), res(rphi))
    return lhs == rhs


_SAMPLERS = {}


def _combo(sp, rng):
    if sp.dim == 0:
        raise ValueError(f"sample space {sp.name} is trivial")
    c = Field().matrix(sp.dim, 1, [rng.randint(-5, 5) for _ in range(sp.dim)])
    return sp.basis @ c


def _sample(key, build, rng):
    if key not in _SAMPLERS:
        _SAMPLERS[key] = build()
    return _combo(_SAMPLERS[key], rng)


def _inc_face_space(r):
    from . import fespaces as FS
    from .wfmesh import builtin, wf_split_global
    S = wf_split_global(builtin("disphenoid"))
    f = S.macro.faces[0]
    dom = FS.face_domain(S, f, S.macro.face_tets[f][0])
    sp = FS.space("Qinc_ring", dom, r)
    sym = FS.constrain(sp, D.skw(sp.layout), "Qinc_ring&sym")
    return dom, sym


def _inc_face(rng, deg):
    """int_F inc_F u phi = 0 for symmetric u in the ring Q_inc and linear phi."""
    from . import fespaces as FS
    key = ("incF", deg)
    if key not in _SAMPLERS:
        _SAMPLERS[key] = _inc_face_space(deg)
    dom, sp = _SAMPLERS[key]
    u = _combo(sp, rng)
    g = _ap(u, D.inc_f, dom.normal)
    lin = FS.linear_field(dom.layout(1))
    return Field().is_zero(FS.moment_map(g.layout, dom, lin)(g))


def _incfn_space(deg):
    """Symmetric polynomials on one tet with u = 0 and [(curl u)']_FF t = 0 on the edges of F."""
    from . import fespaces as FS
    L = Layout(_TRI, [(0, 1, 2, 3)], deg, 9)
    sp = FS.FESpace("P", L, PiecewiseField.identity(L, Field()), deg)
    cons = [D.skw(L)]
    c = D.curl(L)
    t_ = D.transpose(c.dst)
    ff = D.frame_parts(t_.dst, N)["FF"]
    for a, b in ((0, 1), (1, 2), (0, 2)):
        e = [(a, b)]
        t = tuple(x - y for x, y in zip(_TRI[b], _TRI[a]))
        cons.append(D.restrict(L, e))
        wt = D.pointwise(ff.dst, [[t[j] if i == r_ else 0 for i in range(3) for j in range(3)]
                                  for r_ in range(3)])
        cons.append(D.restrict(wt.dst, e) @ wt @ ff @ t_ @ c)
    return FS.constrain(sp, cons)


def _rigid_face_tests():
    L = Layout(_TRI, [(0, 1, 2)], 1, 3)
    from .bernstein import polynomial_field
    X = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    rot = []
    for a in range(3):
        poly = {}
        for k in range(3):
            c = T1[k] * T2[a] - T2[k] * T1[a]
            if c:
                poly[X[k]] = c
        rot.append(poly)
    const = lambda t: [{(0, 0, 0): x} for x in t]
    return [polynomial_field(L, comps) for comps in (const(T1), const(T2), rot)]


def _inc_fn(rng, deg):
    """int_F (inc u)_Fn . q = 0 for q in R(F) under the edge hypotheses."""
    u = _sample(("incfn", deg), lambda: _incfn_space(deg), rng)
    g = _parts(_ap(u, D.inc))["Fn"]
    g = D.restrict(g.layout, [(0, 1, 2)])(g)
    return all(_integrate(g, q) == 0 for q in _rigid_face_tests())


# registry ----------------------------------------------------------------------------
# name -> (body, field degree, expected)
IDENTITIES = {
    "div_xi": (_iden1, 4, "holds"),
    "xi_grad": (_iden2, 4, "holds"),
    "curl_xiinv_curl_mskw": (_iden3, 4, "holds"),
    "vskw_curl_xiinv_curl": (_iden4, 4, "holds"),
    "curl_sym_trace_and_inc": (_iden5, 4, "holds"),
    "div_airy_f": (_ela1, 4, "holds"),
    "inc_f_sym_and_eps": (_ela2, 4, "holds"),
    "curl_f_skew": (_ela3, 4, "holds"),
    "normal_curl": (_surf_curl, 4, "holds"),
    "tangential_grad": (_surf_grad, 4, "holds"),
    "n_cross_rot_f": (_surf_rot, 4, "holds"),
    "tangential_div": (_surf_div, 4, "holds"),
    "perp_div": (_perp, 4, "holds"),
    "row_curl_normal": (_curlid, 4, "holds"),
    "curl_fn": (_id4, 4, "holds"),
    "inc_nn": (_id1, 4, "holds"),
    "inc_fn_curl": (_id2, 4, "holds"),
    "trace_f_curl": (_id3, 4, "holds"),
    "curl_eps_transpose": (_more1, 4, "holds"),
    "curl_eps_ff": (_more2, 4, "holds"),
    "curl_split": (_more3, 4, "holds"),
    "eps_fn": (_more4, 4, "holds"),
    "trace_rot_f": (_more5, 4, "holds"),
    "trace_rot_f_plus_sign": (_more5_plus, 4, "fails"),
    "rotated_curl_lm": (_rot1, 4, "holds"),
    "rotated_curl_ll": (_rot2, 4, "holds"),
    "rotated_curl_ll_swapped": (_rot2_swapped, 4, "fails"),
    "rotated_curl_ll_swapped_sym": (_rot2_swapped_sym, 4, "holds"),
    "rotated_curl_nl": (_rot3, 4, "holds"),
    "curl_eps_ff_perp": (_curlff, 5, "holds"),
    "curl_eps_ff_perp_plus_sign": (_curlff_plus, 5, "fails"),
    "inc_f_parts": (_ibp_inc, 4, "holds"),
    "inc_f_ring_p1": (_inc_face, 3, "holds"),
    "inc_fn_rigid": (_inc_fn, 5, "holds"),
}


def run_identity(name: str, trials: int = 20, seed: int = 0) -> IdentityResult:
    body, deg, expected = IDENTITIES[name]
    rng = random.Random(f"{seed}:{name}")
    failures, bad = 0, []
    for k in range(trials):
        if not body(rng, deg):
            failures += 1
            if not bad:
                bad = [k]
    return IdentityResult(name, trials, failures, seed, expected, bad)


def identity_suite(trials: int = 20, seed: int = 0, names=None) -> list[IdentityResult]:
    """Run each identity on ``trials`` random exact inputs."""
    return [run_identity(n, trials, seed) for n in (names or IDENTITIES)]
