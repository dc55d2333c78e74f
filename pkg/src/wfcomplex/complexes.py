"""Sequences of discrete spaces: complex and exactness checks, derived complexes.

A :class:`ComplexSpec` is a list of slots (each a direct sum of spaces or of
finite-dimensional functional targets) joined by block arrows.  Exactness
is checked by rank-nullity at every slot; maps are applied to basis
columns so each check is a statement about the actual discrete spaces.

Sequences are registered in :data:`CATALOG` as builders
``build(geometry_split, r, field) -> ComplexSpec``.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

from . import diffops as D
from . import fespaces as FS
from .bernstein import PiecewiseField, polynomial_field
from .fespaces import FESpace, power, space, u_space, frame_power
from .rlinalg import AUTO_COLUMNS, Field, modular_fields
from .wfmesh import BUILTINS, InvalidMesh, builtin, cross, load_mesh, wf_split_global

__all__ = [
    "Functionals", "Slot", "Arrow", "ComplexSpec", "MembershipError",
    "check_complex", "check_exact", "derive_bgg", "CATALOG", "catalog_run",
    "get_split", "domains", "run_bgg", "vskw_surjectivity", "LOCAL_SEQUENCES", "GLOBAL_SEQUENCES",
]


class MembershipError(ValueError):
    """A map sends a basis column outside the next space."""


@dataclass
class Functionals:
    """Finite-dimensional target reached through a row functional map."""
    name: str
    dim: int


@dataclass
class Slot:
    label: str
    parts: list

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)


@dataclass
class Arrow:
    """Block map: ``blocks[(i, j)]`` sends part j of the source to part i of the target."""
    label: str
    blocks: dict


@dataclass
class ComplexSpec:
    name: str
    r: int
    slots: list
    arrows: list
    head: int = 0
    head_fields: object = None  # callable(slot0 part layouts) -> list of fields per part
    tail: str = "none"  # "surjective", "report" or "none"
    field: Field = dc_field(default_factory=Field)

    def ambient(self) -> int:
        return max((p.layout.size for s in self.slots for p in s.parts if isinstance(p, FESpace)), default=0)


def _cols(x):
    return x.ncols if isinstance(x, PiecewiseField) else x.ncols()


def slot_basis(slot: Slot, F: Field) -> list:
    """Basis of a direct sum as one zero-padded field per part."""
    n = slot.dim
    out, off = [], 0
    for p in slot.parts:
        if isinstance(p, Functionals):
            raise ValueError("functional slots have no field basis")
        L = p.layout
        blocks = []
        for B in p.basis.blocks:
            parts = []
            if off:
                parts.append(F.zeros(L.block, off))
            parts.append(B)
            if n - off - p.dim:
                parts.append(F.zeros(L.block, n - off - p.dim))
            blocks.append(F.hstack(parts, L.block))
        out.append(PiecewiseField(L, blocks, F))
        off += p.dim
    return out


def apply_arrow(arrow: Arrow, src: list, dst: Slot, F: Field) -> list:
    """Apply a block arrow to per-part fields; returns per-target-part outputs."""
    k = _cols(src[0])
    out = []
    for i, part in enumerate(dst.parts):
        acc = None
        for (a, j), m in arrow.blocks.items():
            if a != i:
                continue
            y = m(src[j])
            if acc is None:
                acc = y
            elif isinstance(y, PiecewiseField):
                acc = acc + y
            else:
                acc = acc + y
        if acc is None:
            acc = F.zeros(part.dim, k) if isinstance(part, Functionals) else PiecewiseField.zeros(part.layout, k, F)
        out.append(acc)
    return out


def _stack(fields, F, k):
    mats = [f.stacked() if isinstance(f, PiecewiseField) else f for f in fields]
    return F.vstack(mats, k)


def _all_zero(fields, F):
    return all(f.is_zero() if isinstance(f, PiecewiseField) else F.is_zero(f) for f in fields)


def _membership(img: list, slot: Slot, F: Field) -> list:
    """Per part: whether the image columns lie in the part's span."""
    ok = []
    for f, part in zip(img, slot.parts):
        if isinstance(part, Functionals):
            ok.append(True)
            continue
        if f.layout != part.layout:
            ok.append(False)
            continue
        if f.ncols == 0 or f.is_zero():
            ok.append(True)
            continue
        M = F.hstack([part.matrix(), f.stacked()], part.layout.size)
        ok.append(F.rank(M) == part.dim)
    return ok


@dataclass
class SlotReport:
    label: str
    dim: int
    in_rank: int | None
    out_kernel: int | None
    passed: bool

    def to_dict(self):
        return {"slot": self.label, "dim": self.dim, "in_rank": self.in_rank,
                "out_kernel": self.out_kernel, "pass": self.passed}


@dataclass
class ExactnessReport:
    name: str
    r: int
    mode: str
    slots: list
    head_expected: int
    head_kernel: int
    head_fields_ok: bool | None
    tail: str
    tail_rank: int | None
    tail_target: int | None
    complex_ok: bool
    membership_ok: bool
    primes: list = dc_field(default_factory=list)
    elapsed_ms: int = 0

    @property
    def tail_ok(self) -> bool:
        if self.tail != "surjective":
            return True
        return self.tail_rank == self.tail_target

    @property
    def passed(self) -> bool:
        return (self.complex_ok and self.membership_ok and all(s.passed for s in self.slots)
                and self.head_kernel == self.head_expected and self.head_fields_ok is not False
                and self.tail_ok)

    def checks(self) -> list:
        """Flat check rows {name, expected, got, pass}."""
        rows = [
            {"name": f"{self.name}:membership", "expected": True, "got": self.membership_ok, "pass": self.membership_ok},
            {"name": f"{self.name}:composition_zero", "expected": True, "got": self.complex_ok, "pass": self.complex_ok},
            {"name": f"{self.name}:head_kernel", "expected": self.head_expected, "got": self.head_kernel,
             "pass": self.head_kernel == self.head_expected},
        ]
        if self.head_fields_ok is not None:
            rows.append({"name": f"{self.name}:head_fields", "expected": True, "got": self.head_fields_ok,
                         "pass": self.head_fields_ok})
        for s in self.slots:
            if s.in_rank is None or s.out_kernel is None:
                continue
            rows.append({"name": f"{self.name}:exact_at:{s.label}", "expected": s.in_rank, "got": s.out_kernel,
                         "pass": s.passed})
        if self.tail != "none":
            rows.append({"name": f"{self.name}:tail_{'surjective' if self.tail == 'surjective' else 'rank'}",
                         "expected": self.tail_target if self.tail == "surjective" else None,
                         "got": self.tail_rank, "pass": self.tail_ok})
        return rows

    def to_dict(self):
        return {"name": self.name, "r": self.r, "mode": self.mode, "primes": self.primes,
                "slots": [s.to_dict() for s in self.slots], "head": {"expected": self.head_expected,
                                                                     "kernel": self.head_kernel},
                "tail": {"kind": self.tail, "rank": self.tail_rank, "target": self.tail_target},
                "complex": self.complex_ok, "membership": self.membership_ok, "pass": self.passed}


def check_complex(cs: ComplexSpec) -> dict:
    """Membership of every image and composition-zero of consecutive maps."""
    F = cs.field
    imgs = []
    member = True
    for k, arrow in enumerate(cs.arrows):
        src = slot_basis(cs.slots[k], F) if cs.slots[k].dim else None
        if src is None:
            imgs.append(None)
            continue
        img = apply_arrow(arrow, src, cs.slots[k + 1], F)
        imgs.append(img)
        member &= all(_membership(img, cs.slots[k + 1], F))
    zero = True
    for k in range(len(cs.arrows) - 1):
        if imgs[k] is None:
            continue
        nxt = apply_arrow(cs.arrows[k + 1], imgs[k], cs.slots[k + 2], F)
        zero &= _all_zero(nxt, F)
    return {"membership": member, "complex": zero, "images": imgs}


def check_exact(cs: ComplexSpec) -> ExactnessReport:
    """Rank-nullity at every slot plus head kernel and tail surjectivity."""
    t0 = time.perf_counter()
    F = cs.field
    cc = check_complex(cs)
    ranks = []
    for k, img in enumerate(cc["images"]):
        if img is None:
            ranks.append(0)
            continue
        ranks.append(F.rank(_stack(img, F, _cols(img[0]))))
    n = len(cs.slots)
    slots = []
    for k, s in enumerate(cs.slots):
        in_rank = ranks[k - 1] if k > 0 else None
        out_kernel = s.dim - ranks[k] if k < n - 1 else None
        ok = True if in_rank is None or out_kernel is None else in_rank == out_kernel
        slots.append(SlotReport(s.label, s.dim, in_rank, out_kernel, ok))
    head_kernel = cs.slots[0].dim - ranks[0]
    hf = None
    if cs.head_fields is not None:
        hf = _check_head_fields(cs, F)
    tail_rank = ranks[-1] if cs.tail != "none" else None
    return ExactnessReport(cs.name, cs.r, "exact" if F.exact else "modular", slots, cs.head, head_kernel, hf,
                           cs.tail, tail_rank, cs.slots[-1].dim if cs.tail != "none" else None,
                           cc["complex"], cc["membership"], [] if F.exact else [F.p],
                           int(1000 * (time.perf_counter() - t0)))


def _check_head_fields(cs, F):
    """Augmentation fields: independent, inside the first slot, killed by the first map."""
    parts = cs.slots[0].parts
    fields = [f.convert(F) for f in cs.head_fields([p.layout for p in parts])]
    k = fields[0].ncols
    if F.rank(_stack(fields, F, k)) != cs.head:
        return False
    if not all(_membership(fields, cs.slots[0], F)):
        return False
    return _all_zero(apply_arrow(cs.arrows[0], fields, cs.slots[1], F), F)


# derived complexes ------------------------------------------------------------------
def _solve_in(S, R, F):
    """Coordinates c with S c = R for S of full column rank, or None."""
    m = S.ncols()
    if m == 0:
        return F.zeros(0, R.ncols()) if F.is_zero(R) else None
    rows = F.column_basis(S.transpose())
    if len(rows) != m:
        return None
    c = F.solve(F.take_rows(S, rows), F.take_rows(R, rows))
    return c if F.equal(S * c, R) else None


@dataclass
class BGGResult:
    derived: ComplexSpec
    checks: list

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def derive_bgg(top: ComplexSpec, bottom: ComplexSpec, s: list, name: str = "derived",
               head: int = 0, tail: str = "report") -> BGGResult:
    """Derived sequence of two 4-term complexes linked by s0, s1, s2.

    Verifies the hypotheses (both rows are complexes, each s_i maps into
    the next top space, both squares commute, s1 is a bijection) and
    returns [A0; B0] -> A1 -> B2 -> [A3; B3] with maps [r0 s0],
    t1 s1^{-1} r1 and [s2; t2].
    """
    F = top.field
    A = [sl.parts[0] for sl in top.slots]
    B = [sl.parts[0] for sl in bottom.slots]
    r = [a.blocks[(0, 0)] for a in top.arrows]
    t = [a.blocks[(0, 0)] for a in bottom.arrows]
    checks = []

    def add(nm, expected, got):
        checks.append({"name": f"{name}:{nm}", "expected": expected, "got": got, "pass": expected == got})

    for lab, cs in (("top", top), ("bottom", bottom)):
        cc = check_complex(cs)
        add(f"{lab}_membership", True, cc["membership"])
        add(f"{lab}_complex", True, cc["complex"])
    for i in range(3):
        img = s[i](B[i].basis) if B[i].dim else None
        ok = True if img is None else all(_membership([img], Slot("", [A[i + 1]]), F))
        add(f"s{i}_into_A{i + 1}", True, ok)
    # commuting squares: s_{i+1} t_i = r_{i+1} s_i on B_i
    for i in range(2):
        if B[i].dim == 0:
            add(f"square_{i}", True, True)
            continue
        lhs = s[i + 1](t[i](B[i].basis))
        rhs = r[i + 1](s[i](B[i].basis))
        add(f"square_{i}", True, lhs.equals(rhs))
    S1 = s[1](B[1].basis).stacked()
    rk = F.rank(S1)
    add("s1_injective", B[1].dim, rk)
    add("s1_onto_A2", A[2].dim, rk)

    def mid(a: PiecewiseField):
        R = r[1](a).stacked()
        c = _solve_in(S1, R, F)
        if c is None:
            raise MembershipError("r1 image is not in the range of s1")
        return t[1](B[1].basis @ c)

    slots = [Slot(f"[{top.slots[0].label};{bottom.slots[0].label}]", [A[0], B[0]]),
             Slot(top.slots[1].label, [A[1]]), Slot(bottom.slots[2].label, [B[2]]),
             Slot(f"[{top.slots[3].label};{bottom.slots[3].label}]", [A[3], B[3]])]
    arrows = [Arrow("[r0 s0]", {(0, 0): r[0], (0, 1): s[0]}),
              Arrow("t1 s1^-1 r1", {(0, 0): mid}),
              Arrow("[s2; t2]", {(0, 0): s[2], (1, 0): t[2]})]
    derived = ComplexSpec(name, top.r, slots, arrows, head=head, tail=tail, field=F)
    return BGGResult(derived, checks)


def compare_arrows(a: ComplexSpec, b: ComplexSpec) -> list:
    """Map-for-map equality of two sequences on the same slots."""
    F = a.field
    out = []
    for k, (x, y) in enumerate(zip(a.arrows, b.arrows)):
        if a.slots[k].dim == 0:
            out.append(True)
            continue
        src = slot_basis(a.slots[k], F)
        fx = apply_arrow(x, src, a.slots[k + 1], F)
        fy = apply_arrow(y, src, b.slots[k + 1], F)
        out.append(all(u.equals(v) if isinstance(u, PiecewiseField) else F.equal(u, v) for u, v in zip(fx, fy)))
    return out


# geometry helpers ---------------------------------------------------------------------
@lru_cache(maxsize=None)
def get_split(geometry: str):
    """Worsey-Farin split of a builtin geometry name or a mesh JSON path."""
    if geometry in BUILTINS:
        mesh = builtin(geometry)
    elif os.path.exists(geometry):
        mesh = load_mesh(geometry)
    else:
        raise InvalidMesh(f"{geometry!r} is neither a builtin ({', '.join(sorted(BUILTINS))}) nor a mesh file")
    return wf_split_global(mesh)


@lru_cache(maxsize=None)
def domains(geometry: str, kind: str):
    S = get_split(geometry)
    if kind == "tet":
        return FS.tet_domain(S, 0)
    if kind == "face":
        return FS.face_domain(S, S.macro.faces[0], 0)
    if kind == "global":
        return FS.global_domain(S)
    raise ValueError(kind)


# sequence builders --------------------------------------------------------------------
def _seq(name, r, F, spaces, ops, head=0, head_fields=None, tail="surjective"):
    slots = [sp if isinstance(sp, Slot) else Slot(sp.name, [sp]) for sp in spaces]
    arrows = [op if isinstance(op, Arrow) else Arrow(getattr(op, "__name__", "map"), {(0, 0): op}) for op in ops]
    return ComplexSpec(name, r, slots, arrows, head, head_fields, tail, F)


def _op(fn, *args):
    """Lazy operator: build the LinearMap on the layout of the input field."""
    cache = {}

    def apply(f):
        key = f.layout
        if key not in cache:
            cache[key] = fn(f.layout, *args)
        return cache[key](f)
    apply.__name__ = fn.__name__
    return apply


def _const(layouts):
    return [polynomial_field(layouts[0], [{(0, 0, 0): 1}])]


def _p1(layouts):
    return [FS.linear_field(layouts[0])]


def _rigid(layouts):
    return [FS.rigid_field(layouts[0])]


def _neg(m):
    def f(x):
        return -m(x)
    return f


def _scaled(m, c):
    def f(x):
        return m(x).scale(c)
    return f


def _compose(*ms):
    def f(x):
        for m in reversed(ms):
            x = m(x)
        return x
    return f


def _tensor(sp, F=None, name=None):
    return power(sp, 3, name or f"{sp.name}(x)V")


def _seq2d(dom, r, F, names, kind, ring):
    ops = [_op(D.grad_f), _op(D.curl_f, dom.normal)] if kind == "gc" else \
        [_op(D.rot_f, dom.normal), _op(D.div_f)]
    spaces = [space(n, dom, d, F) for n, d in zip(names, (r, r - 1, r - 2))]
    return spaces, ops


def _build_2d(name, names, kind, ring):
    def build(geometry, r, F):
        dom = domains(geometry, "face")
        spaces, ops = _seq2d(dom, r, F, names, kind, ring)
        return _seq(name, r, F, spaces, ops, head=0 if ring else 1,
                    head_fields=None if ring else _const)
    return build


def _frame_vec(sp, dom, name):
    return frame_power(sp, dom.frame, name)


def _build_elaseqsvenb(geometry, r, F):
    dom = domains(geometry, "face")
    S = _frame_vec(space("S0_ring", dom, r + 1, F), dom, "S0_ring(x)V2")
    Q1 = space("Qinc_sym_ring", dom, r, F)
    Q2 = space("Q2_ring", dom, r - 2, F)
    return _seq("elaseqsvenb", r, F, [S, Q1, Q2], [_op(D.eps_f), _op(D.inc_f, dom.normal)])


def _build_elaseqairy(geometry, r, F):
    dom = domains(geometry, "face")
    S = space("S0", dom, r, F)
    Q1 = space("Q1", dom, r - 2, F)
    V = _frame_vec(space("V2", dom, r - 3, F), dom, "V2(x)V2")
    return _seq("elaseqairy", r, F, [S, Q1, V], [_op(D.airy_f, dom.normal), _op(D.div_f)], head=3,
                head_fields=_p1)


def _curl_ring_mean0(dom, r, F):
    sp = space("V1curl_ring", dom, r, F)
    return FS.constrain(sp, FS.mean_map(sp.layout, dom), "V1curl_ring&V2_ring(x)V2")


def _build_gradcurl(geometry, r, F):
    dom = domains(geometry, "face")
    S = _frame_vec(space("S0_ring", dom, r, F), dom, "S0_ring(x)V2")
    Q = space("Qinc_ring", dom, r - 1, F)
    V = _curl_ring_mean0(dom, r - 2, F)
    return _seq("gradcurl_sven", r, F, [S, Q, V], [_op(D.grad_f), _op(D.curl_f, dom.normal)])


def _perp_tests(dom, L):
    """Scalar fields x_perp . t1, x_perp . t2 and 1 on a degree >= 1 layout."""
    n = dom.normal
    polys = []
    for t in dom.frame:
        # (x cross n) . t = x . (n cross t)
        w = cross(n, t)
        polys.append([{(1, 0, 0): w[0], (0, 1, 0): w[1], (0, 0, 1): w[2]}])
    polys.append([{(0, 0, 0): 1}])
    return polynomial_field(L, polys)


def _build_2dpreelasvenb(geometry, r, F):
    dom = domains(geometry, "face")
    S = _frame_vec(space("S0_ring", dom, r + 1, F), dom, "S0_ring(x)V2")
    L0 = space("L0_ring", dom, r, F)
    Q = space("Qinc_ring", dom, r, F)
    V = space("V2", dom, r - 2, F)
    tgt = Functionals("[V2;R]", 3)
    cache = {}

    def tail(f):
        L = f.layout
        if L not in cache:
            tl = L.with_(degree=max(L.degree, 1))
            cache[L] = FS.moment_map(L, dom, _perp_tests(dom, tl))
        return cache[L](f)
    slots = [Slot("[S0_ring(x)V2;L0_ring]", [S, L0]), Slot(Q.name, [Q]), Slot(V.name, [V]), Slot(tgt.name, [tgt])]
    arrows = [Arrow("[grad_F, skew]", {(0, 0): _op(D.grad_f), (0, 1): _op(D.skew_scalar_f, dom.normal)}),
              Arrow("inc_F", {(0, 0): _op(D.inc_f, dom.normal)}),
              Arrow("[int perp; int]", {(0, 0): tail})]
    return ComplexSpec("2dpreelasvenb", r, slots, arrows, 0, None, "surjective", F)


def _build_2dpreelaairy(geometry, r, F):
    dom = domains(geometry, "face")
    S = space("S0", dom, r + 1, F)
    Q = _frame_vec(space("V1div", dom, r - 1, F), dom, "V1div(x)V2")
    V1 = space("V2", dom, r - 1, F)
    V2 = _frame_vec(space("V2", dom, r - 2, F), dom, "V2(x)V2")
    slots = [Slot(S.name, [S]), Slot(Q.name, [Q]), Slot("[V2;V2(x)V2]", [V1, V2])]
    arrows = [Arrow("airy_F", {(0, 0): _op(D.airy_f, dom.normal)}),
              Arrow("[skew; div_F]", {(0, 0): _op(D.skew_f, dom.normal), (1, 0): _op(D.div_f)})]
    return ComplexSpec("2dpreelaairy", r, slots, arrows, 3, _p1, "report", F)


def _build_3d(name, names, degrees, ring):
    def build(geometry, r, F):
        dom = domains(geometry, "tet")
        spaces = [space(n, dom, r + d, F) for n, d in zip(names, degrees)]
        return _seq(name, r, F, spaces, [_op(D.grad), _op(D.curl), _op(D.div)],
                    head=0 if ring else 1, head_fields=None if ring else _const)
    return build


def _diagram(dom, r, F, ring):
    """Top and bottom rows of the weak-symmetry diagram, plus connecting maps."""
    o = "_ring" if ring else ""
    A = [_tensor(space("S0" + o, dom, r + 1, F)), _tensor(space("S1" + o, dom, r, F)),
         _tensor(space("L2" + o, dom, r - 1, F)),
         _tensor(space("Vc3" if ring else "V3", dom, r - 2, F))]
    B = [_tensor(space("S0" + o, dom, r, F)), _tensor(space("L1" + o, dom, r - 1, F)),
         _tensor(space("Vc2_ring" if ring else "V2", dom, r - 2, F)),
         _tensor(space("V3_ring" if ring else "V3", dom, r - 3, F))]
    ops = [_op(D.grad), _op(D.curl), _op(D.div)]
    top = _seq("top", r, F, A, ops, tail="none")
    bottom = _seq("bottom", r, F, B, ops, tail="none")
    s = [_neg(_op(D.mskw)), _op(D.xi), _scaled(_op(D.vskw), 2)]
    return top, bottom, s


def _direct_preseq(dom, r, F, ring, name, head, tail, global_=False):
    o = "_ring" if ring else ""
    if global_:
        A0, B0 = _tensor(space("S0", dom, r + 1, F)), _tensor(space("S0", dom, r, F))
        A1 = _tensor(space("S1", dom, r, F))
        B2 = _tensor(space("Vs2", dom, r - 2, F))
        A3, B3 = _tensor(space("Vs3", dom, r - 2, F)), _tensor(space("V3", dom, r - 3, F))
    else:
        A0, B0 = _tensor(space("S0" + o, dom, r + 1, F)), _tensor(space("S0" + o, dom, r, F))
        A1 = _tensor(space("S1" + o, dom, r, F))
        B2 = _tensor(space("Vc2_ring" if ring else "V2", dom, r - 2, F))
        A3 = _tensor(space("Vc3" if ring else "V3", dom, r - 2, F))
        B3 = _tensor(space("V3_ring" if ring else "V3", dom, r - 3, F))
    slots = [Slot("[S0(x)V;S0(x)V]", [A0, B0]), Slot(A1.name, [A1]), Slot(B2.name, [B2]),
             Slot("[V3(x)V;V3(x)V]", [A3, B3])]
    cxc = lambda L: D.curl(D.xi_inv(D.curl(L).dst).dst) @ D.xi_inv(D.curl(L).dst) @ D.curl(L)
    arrows = [Arrow("[grad, -mskw]", {(0, 0): _op(D.grad), (0, 1): _neg(_op(D.mskw))}),
              Arrow("curl xi^-1 curl", {(0, 0): _op(cxc)}),
              Arrow("[2vskw; div]", {(0, 0): _scaled(_op(D.vskw), 2), (1, 0): _op(D.div)})]
    return ComplexSpec(name, r, slots, arrows, head, None, tail, F)


def _build_preseq(ring):
    def build(geometry, r, F):
        dom = domains(geometry, "tet")
        return _direct_preseq(dom, r, F, ring, "preseqb" if ring else "preseq", 0 if ring else 6,
                              "report" if ring else "surjective")
    return build


def _u_seq(dom, r, F, ring, name, head, head_fields):
    U = [u_space(k, dom, r, F, ring) for k in range(4)]
    return _seq(name, r, F, U, [_op(D.eps), _op(D.inc), _op(D.div)], head=head, head_fields=head_fields)


def _build_elseq(ring):
    def build(geometry, r, F):
        dom = domains(geometry, "tet")
        return _u_seq(dom, r, F, ring, "elseqb" if ring else "elseq", 0 if ring else 6,
                      None if ring else _rigid)
    return build


def _build_global(kind):
    def build(geometry, r, F):
        dom = domains(geometry, "global")
        if kind == "seq1":
            spaces = [space("S0", dom, r, F), space("L1", dom, r - 1, F), space("Vs2", dom, r - 2, F),
                      space("V3", dom, r - 3, F)]
            return _seq("global_seq1", r, F, spaces, [_op(D.grad), _op(D.curl), _op(D.div)], 1, _const)
        if kind == "seq2":
            spaces = [space("S0", dom, r, F), space("S1", dom, r - 1, F), space("L2", dom, r - 2, F),
                      space("Vs3", dom, r - 3, F)]
            return _seq("global_seq2", r, F, spaces, [_op(D.grad), _op(D.curl), _op(D.div)], 1, _const)
        if kind == "preseq":
            return _direct_preseq(dom, r, F, False, "global_preseq", 6, "surjective", global_=True)
        U = [_tensor(space("S0", dom, r + 1, F), name="U0")]
        base = _tensor(space("S1", dom, r, F))
        U.append(FS.image(base, D.sym(base.layout), "U1"))
        base = _tensor(space("Vs2", dom, r - 2, F))
        U.append(FS.constrain(base, D.skw(base.layout), "U2"))
        U.append(_tensor(space("V3", dom, r - 3, F), name="U3"))
        return _seq("global_elseq", r, F, U, [_op(D.eps), _op(D.inc), _op(D.div)], 6, _rigid)
    return build


@dataclass
class CatalogEntry:
    build: object
    min_r: int
    level: str  # "face", "tet" or "global"


CATALOG = {
    "alfseq1": CatalogEntry(_build_2d("alfseq1", ("L0", "V1curl", "V2"), "gc", False), 1, "face"),
    "alfseq2": CatalogEntry(_build_2d("alfseq2", ("S0", "L1", "V2"), "gc", False), 1, "face"),
    "2dbdryseq1": CatalogEntry(_build_2d("2dbdryseq1", ("L0_ring", "V1curl_ring", "V2_ring"), "gc", True), 1, "face"),
    "2dbdryseq2": CatalogEntry(_build_2d("2dbdryseq2", ("S0_ring", "L1_ring", "V2_ring"), "gc", True), 1, "face"),
    "altalfseq1": CatalogEntry(_build_2d("altalfseq1", ("L0", "V1div", "V2"), "rd", False), 1, "face"),
    "altalfseq2": CatalogEntry(_build_2d("altalfseq2", ("S0", "L1", "V2"), "rd", False), 1, "face"),
    "alt2dbdryseq1": CatalogEntry(_build_2d("alt2dbdryseq1", ("L0_ring", "V1div_ring", "V2_ring"), "rd", True), 1, "face"),
    "alt2dbdryseq2": CatalogEntry(_build_2d("alt2dbdryseq2", ("S0_ring", "L1_ring", "V2_ring"), "rd", True), 1, "face"),
    "elaseqsvenb": CatalogEntry(_build_elaseqsvenb, 3, "face"),
    "elaseqairy": CatalogEntry(_build_elaseqairy, 3, "face"),
    "gradcurl_sven": CatalogEntry(_build_gradcurl, 2, "face"),
    "2dpreelasvenb": CatalogEntry(_build_2dpreelasvenb, 2, "face"),
    "2dpreelaairy": CatalogEntry(_build_2dpreelaairy, 2, "face"),
    "seq0": CatalogEntry(_build_3d("seq0", ("L0", "V1", "V2", "V3"), (0, -1, -2, -3), False), 3, "tet"),
    "seq0b": CatalogEntry(_build_3d("seq0b", ("L0_ring", "V1_ring", "V2_ring", "V3_ring"), (0, -1, -2, -3), True), 3, "tet"),
    "seq1": CatalogEntry(_build_3d("seq1", ("S0", "L1", "V2", "V3"), (0, -1, -2, -3), False), 3, "tet"),
    "seq1b": CatalogEntry(_build_3d("seq1b", ("S0_ring", "L1_ring", "Vc2_ring", "V3_ring"), (0, -1, -2, -3), True), 3, "tet"),
    "seq2": CatalogEntry(_build_3d("seq2", ("S0", "S1", "L2", "V3"), (0, -1, -2, -3), False), 3, "tet"),
    "seq2b": CatalogEntry(_build_3d("seq2b", ("S0_ring", "S1_ring", "L2_ring", "Vc3_ring"), (0, -1, -2, -3), True), 3, "tet"),
    "preseq": CatalogEntry(_build_preseq(False), 3, "tet"),
    "preseqb": CatalogEntry(_build_preseq(True), 3, "tet"),
    "elseq": CatalogEntry(_build_elseq(False), 3, "tet"),
    "elseqb": CatalogEntry(_build_elseq(True), 3, "tet"),
    "global_seq1": CatalogEntry(_build_global("seq1"), 3, "global"),
    "global_seq2": CatalogEntry(_build_global("seq2"), 3, "global"),
    "global_preseq": CatalogEntry(_build_global("preseq"), 3, "global"),
    "global_elseq": CatalogEntry(_build_global("elseq"), 3, "global"),
}

LOCAL_SEQUENCES = [k for k, v in CATALOG.items() if v.level != "global"]
GLOBAL_SEQUENCES = [k for k, v in CATALOG.items() if v.level == "global"]


def _fields_for(mode, seed, probe=None):
    if mode == "exact":
        return [Field()]
    if mode == "modular":
        return modular_fields(seed)
    if mode == "auto":
        if probe is not None and probe() <= AUTO_COLUMNS:
            return [Field()]
        return modular_fields(seed)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class RunResult:
    name: str
    r: int
    mode: str
    reports: list

    @property
    def passed(self) -> bool:
        if not self.reports:
            return False
        base = [(s.in_rank, s.out_kernel) for s in self.reports[0].slots]
        agree = all([(s.in_rank, s.out_kernel) for s in rep.slots] == base for rep in self.reports)
        return agree and all(rep.passed for rep in self.reports)

    def checks(self) -> list:
        rows = []
        for rep in self.reports:
            tag = "" if not rep.primes else f"@p{rep.primes[0]}"
            for c in rep.checks():
                rows.append(dict(c, name=c["name"] + tag))
        if len(self.reports) > 1:
            base = [(s.in_rank, s.out_kernel) for s in self.reports[0].slots]
            agree = all([(s.in_rank, s.out_kernel) for s in rep.slots] == base for rep in self.reports)
            rows.append({"name": f"{self.name}:primes_agree", "expected": True, "got": agree, "pass": agree})
        return rows


def catalog_run(name: str, r: int, geometry: str = "disphenoid", mode: str = "auto", seed: int = 0) -> RunResult:
    """Build and check one cataloged sequence."""
    if name not in CATALOG:
        raise KeyError(f"unknown sequence {name!r}; choose from {sorted(CATALOG)}")
    entry = CATALOG[name]
    if r < entry.min_r:
        raise ValueError(f"{name} needs r >= {entry.min_r}")
    probe = None
    if mode == "auto":
        probe = lambda: entry.build(geometry, r, modular_fields(seed)[0]).ambient()
    fields = _fields_for(mode, seed, probe)
    reports = [check_exact(entry.build(geometry, r, F)) for F in fields]
    return RunResult(name, r, "exact" if fields[0].exact else "modular", reports)


# BGG runs -------------------------------------------------------------------------------
def vskw_surjectivity(dom, r, F) -> list:
    """2 vskw maps V2_{r-2}(x)V onto V3_{r-2}(x)V, and the ring Vc2 onto Vc3."""
    out = []
    for src, dst, tag in (("V2", "V3", "plain"), ("Vc2_ring", "Vc3", "ring")):
        X = _tensor(space(src, dom, r - 2, F))
        Y = _tensor(space(dst, dom, r - 2, F))
        img = D.vskw(X.layout)(X.basis)
        member = all(_membership([img], Slot("", [Y]), F))
        rk = F.rank(img.stacked())
        out.append({"name": f"vskw_onto_{dst}:{tag}", "expected": Y.dim, "got": rk, "pass": member and rk == Y.dim})
    return out


def run_bgg(r: int = 3, geometry: str = "disphenoid", ring: bool = False, field: Field | None = None) -> dict:
    """Derived sequence from the diagram versus the directly assembled one."""
    F = field or Field()
    dom = domains(geometry, "tet")
    top, bottom, s = _diagram(dom, r, F, ring)
    name = "preseqb" if ring else "preseq"
    res = derive_bgg(top, bottom, s, name=f"bgg_{name}", head=0 if ring else 6,
                     tail="report" if ring else "surjective")
    direct = _direct_preseq(dom, r, F, ring, name, 0 if ring else 6, "report" if ring else "surjective")
    same = compare_arrows(res.derived, direct)
    checks = list(res.checks)
    for k, ok in enumerate(same):
        checks.append({"name": f"bgg_{name}:map{k}_equal", "expected": True, "got": ok, "pass": ok})
    rep = check_exact(res.derived)
    checks.extend(rep.checks())
    if not ring:
        checks.extend(vskw_surjectivity(dom, r, F))
    return {"name": name, "r": r, "checks": checks, "pass": all(c["pass"] for c in checks)}
