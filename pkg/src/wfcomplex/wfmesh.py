"""Macro meshes and their Worsey-Farin refinements.

Each macro tetrahedron T is split about an interior point z_T and one point
m_F per face F into 12 sub-tetrahedra (z_T, m_F, a, b), one for every face
F and every edge [a, b] of F.  Each face therefore carries a Clough-Tocher
split into three triangles about m_F.  On an interior face the point m_F
is where the segment between the two interior points meets the face, which
keeps the face splits conforming.

Split-level points are numbered: macro vertices first, then one interior
point per tet, then one point per macro face.  All simplices are stored as
sorted tuples of point ids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, permutations
from math import isqrt

__all__ = [
    "InvalidMesh", "MacroMesh", "SplitComplex", "Frame", "JumpPairing",
    "incenter", "signed_volume", "wf_split_local", "wf_split_global",
    "disphenoid", "unit_tet", "two_tets", "kuhn_cube", "builtin", "BUILTINS",
    "load_mesh", "mesh_from_dict", "cross", "dot", "sub",
]


class InvalidMesh(ValueError):
    """Raised for degenerate or non-conforming input geometry."""


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def point(p) -> tuple:
    return tuple(_frac(x) for x in p)


def sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def scale(c, a):
    return tuple(c * x for x in a)


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def cross(a, b):
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def signed_volume(verts) -> Fraction:
    a, b, c, d = verts
    return dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6


def _sqrt_rational(q: Fraction):
    n, d = isqrt(q.numerator), isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def incenter(verts):
    """Incenter of a tetrahedron and whether it is exactly representable.

    The incenter is the face-area weighted average of the opposite
    vertices.  Areas are square roots; the result is rational exactly when
    all area ratios are rational.  Otherwise the centroid is returned as a
    rational stand-in and the flag is False.
    """
    verts = [point(v) for v in verts]
    if signed_volume(verts) == 0:
        raise InvalidMesh("degenerate tetrahedron")
    sq = []
    for i in range(4):
        a, b, c = [verts[j] for j in range(4) if j != i]
        n = cross(sub(b, a), sub(c, a))
        sq.append(dot(n, n))
    ratios = [_sqrt_rational(q / sq[0]) for q in sq]
    if any(r is None for r in ratios):
        return tuple(sum(v[c] for v in verts) / 4 for c in range(3)), False
    tot = sum(ratios)
    return tuple(sum(w * v[c] for w, v in zip(ratios, verts)) / tot for c in range(3)), True


def _face_key(f):
    return tuple(sorted(f))


@dataclass(frozen=True)
class MacroMesh:
    vertices: tuple
    tets: tuple
    interior_points: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(point(v) for v in self.vertices))
        object.__setattr__(self, "tets", tuple(tuple(sorted(t)) for t in self.tets))
        if self.interior_points is not None:
            ip = tuple(point(p) for p in self.interior_points)
            if len(ip) != len(self.tets):
                raise InvalidMesh("one interior point per tet is required")
            object.__setattr__(self, "interior_points", ip)
        nv = len(self.vertices)
        for t in self.tets:
            if len(set(t)) != 4 or any(not 0 <= i < nv for i in t):
                raise InvalidMesh(f"bad tet {t}")
            if signed_volume([self.vertices[i] for i in t]) == 0:
                raise InvalidMesh(f"degenerate tet {t}")
        for f, ts in self.face_tets.items():
            if len(ts) > 2:
                raise InvalidMesh(f"face {f} shared by more than two tets")
            if len(ts) == 2:
                a, b, c = (self.vertices[i] for i in f)
                n = cross(sub(b, a), sub(c, a))
                s = [dot(n, sub(self.vertices[self._opposite(t, f)], a)) for t in ts]
                if s[0] * s[1] >= 0:
                    raise InvalidMesh(f"tets sharing face {f} overlap")
        if not self._connected():
            raise InvalidMesh("mesh is not face-connected")

    def _opposite(self, t, f):
        (o,) = set(self.tets[t]) - set(f)
        return o

    def _connected(self):
        seen = {0}
        stack = [0]
        adj = {i: [] for i in range(len(self.tets))}
        for ts in self.face_tets.values():
            if len(ts) == 2:
                adj[ts[0]].append(ts[1])
                adj[ts[1]].append(ts[0])
        while stack:
            t = stack.pop()
            for u in adj[t]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(self.tets)

    @cached_property
    def face_tets(self) -> dict:
        out = {}
        for i, t in enumerate(self.tets):
            for f in combinations(t, 3):
                out.setdefault(f, []).append(i)
        return {f: tuple(v) for f, v in sorted(out.items())}

    @property
    def faces(self) -> list:
        return list(self.face_tets)

    @property
    def interior_faces(self) -> list:
        return [f for f, ts in self.face_tets.items() if len(ts) == 2]

    @property
    def boundary_faces(self) -> list:
        return [f for f, ts in self.face_tets.items() if len(ts) == 1]

    @cached_property
    def edges(self) -> list:
        return sorted({e for t in self.tets for e in combinations(t, 2)})

    def volume(self, t: int) -> Fraction:
        return abs(signed_volume([self.vertices[i] for i in self.tets[t]]))

    def to_dict(self) -> dict:
        d = {"vertices": [[_fmt(x) for x in v] for v in self.vertices],
             "tets": [list(t) for t in self.tets]}
        if self.interior_points is not None:
            d["interior_points"] = [[_fmt(x) for x in p] for p in self.interior_points]
        return d


def _fmt(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def mesh_from_dict(d: dict) -> MacroMesh:
    try:
        return MacroMesh(d["vertices"], d["tets"], d.get("interior_points"))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidMesh):
            raise
        raise InvalidMesh(f"malformed mesh description: {exc}") from exc


def load_mesh(path) -> MacroMesh:
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))


# builtin geometries ----------------------------------------------------
def disphenoid() -> MacroMesh:
    """Tetrahedron with congruent faces of area 6 and incenter at 0."""
    return MacroMesh([(2, 1, 1), (2, -1, -1), (-2, 1, -1), (-2, -1, 1)], [(0, 1, 2, 3)])


def unit_tet() -> MacroMesh:
    return MacroMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], [(0, 1, 2, 3)])


def two_tets() -> MacroMesh:
    return MacroMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)],
                     [(0, 1, 2, 3), (1, 2, 3, 4)],
                     [(Fraction(1, 4),) * 3, (Fraction(1, 2),) * 3])


def kuhn_cube() -> MacroMesh:
    """Unit cube cut into six tets around the main diagonal."""
    verts = [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    idx = {v: n for n, v in enumerate(verts)}
    tets = []
    for perm in permutations(range(3)):
        p = [0, 0, 0]
        path = [idx[tuple(p)]]
        for ax in perm:
            p[ax] = 1
            path.append(idx[tuple(p)])
        tets.append(tuple(path))
    return MacroMesh(verts, tets)


BUILTINS = {
    "disphenoid": disphenoid,
    "unit": unit_tet,
    "two-tet": two_tets,
    "cube": kuhn_cube,
}


def builtin(name: str) -> MacroMesh:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise InvalidMesh(f"unknown builtin geometry {name!r}; choose from {sorted(BUILTINS)}") from None


# frames -------------------------------------------------------------------
@dataclass(frozen=True)
class Frame:
    """Raw (unnormalized) frame attached to a face or a Clough-Tocher edge."""
    n: tuple
    nn: Fraction
    t: tuple | None = None
    s: tuple | None = None

    @property
    def P(self):
        return tuple(tuple(self.n[i] * self.n[j] / self.nn for j in range(3)) for i in range(3))

    @property
    def Q(self):
        P = self.P
        return tuple(tuple((1 if i == j else 0) - P[i][j] for j in range(3)) for i in range(3))


@dataclass(frozen=True)
class JumpPairing:
    """Trace slots of the four-term functional on an interior CT edge.

    ``slots`` lists (cell, sign) for the sub-tets of T1 and T2 adjacent to
    the two Clough-Tocher triangles q1, q2 that share the edge.
    """
    face: tuple
    edge: tuple
    q1: tuple
    q2: tuple
    tets: tuple
    slots: tuple
    tangent: tuple


def _in_open_triangle(p, a, b, c) -> bool:
    n = cross(sub(b, a), sub(c, a))
    if dot(n, sub(p, a)) != 0:
        return False
    for u, v in ((a, b), (b, c), (c, a)):
        if dot(cross(sub(v, u), sub(p, u)), n) <= 0:
            return False
    return True


def _strictly_inside(p, verts) -> bool:
    vol = signed_volume(verts)
    for i in range(4):
        w = list(verts)
        w[i] = p
        if signed_volume(w) * vol <= 0:
            return False
    return True


class SplitComplex:
    """Worsey-Farin refinement of a macro mesh (immutable after build)."""

    def __init__(self, macro: MacroMesh, centers, face_points: dict, exact_centers):
        self.macro = macro
        nv = len(macro.vertices)
        pts = list(macro.vertices)
        self.z = tuple(range(nv, nv + len(macro.tets)))
        pts.extend(centers)
        self.m = {}
        self.point_parent = [(i,) for i in range(nv)] + [macro.tets[t] for t in range(len(macro.tets))]
        for f in macro.faces:
            self.m[f] = len(pts)
            pts.append(face_points[f])
            self.point_parent.append(f)
        self.points = tuple(pts)
        self.exact_centers = tuple(exact_centers)
        cells, cell_tet = [], []
        self.tet_cells = []
        for ti, t in enumerate(macro.tets):
            own = []
            for f in combinations(t, 3):
                for a, b in combinations(f, 2):
                    own.append(len(cells))
                    cells.append(tuple(sorted((self.z[ti], self.m[f], a, b))))
                    cell_tet.append(ti)
            self.tet_cells.append(tuple(own))
        self.cells = tuple(cells)
        self.cell_tet = tuple(cell_tet)
        self.cell_index = {c: i for i, c in enumerate(self.cells)}
        self.ct = {f: tuple(tuple(sorted((self.m[f], a, b))) for a, b in combinations(f, 2))
                   for f in macro.faces}
        self.ct_edges = {f: tuple(tuple(sorted((self.m[f], a))) for a in f) for f in macro.faces}
        self._validate()

    # basic geometry ---------------------------------------------------------
    def coords(self, simplex) -> tuple:
        return tuple(self.points[i] for i in simplex)

    def _validate(self):
        for ti, t in enumerate(self.macro.tets):
            verts = [self.macro.vertices[i] for i in t]
            if not _strictly_inside(self.points[self.z[ti]], verts):
                raise InvalidMesh(f"interior point of tet {ti} is not strictly inside")
            vol = sum(abs(signed_volume(self.coords(self.cells[c]))) for c in self.tet_cells[ti])
            if vol != self.macro.volume(ti):
                raise InvalidMesh(f"sub-tet volumes of tet {ti} do not add up")
            for c in self.tet_cells[ti]:
                if signed_volume(self.coords(self.cells[c])) == 0:
                    raise InvalidMesh(f"degenerate sub-tet in tet {ti}")
        for f in self.macro.faces:
            a, b, c = (self.macro.vertices[i] for i in f)
            if not _in_open_triangle(self.points[self.m[f]], a, b, c):
                raise InvalidMesh(f"face point of face {f} is not strictly inside the face")

    def volume(self, cell: int) -> Fraction:
        return abs(signed_volume(self.coords(self.cells[cell])))

    # skeleton ----------------------------------------------------------------
    def region_cells(self, tets=None) -> list:
        if tets is None:
            return list(range(len(self.cells)))
        return [c for t in tets for c in self.tet_cells[t]]

    def skeleton(self, s: int, interior_only: bool = False, tets=None, level: str = "split") -> list:
        """s-simplices of the split (or macro) complex over a set of tets.

        ``interior_only`` drops simplices lying in the boundary of the
        region.  Ordering is lexicographic in sorted vertex ids.
        """
        if level == "macro":
            tl = range(len(self.macro.tets)) if tets is None else tets
            simp = {f for t in tl for f in combinations(self.macro.tets[t], s + 1)}
            if interior_only:
                bd = {g for f in self._macro_boundary(tl) for g in _faces_of(f)}
                simp -= bd
            return sorted(simp)
        cells = [self.cells[c] for c in self.region_cells(tets)]
        simp = {f for c in cells for f in combinations(c, s + 1)}
        if interior_only:
            bd = set()
            for f in boundary_facets(cells):
                bd.update(_faces_of(f))
            simp -= bd
        return sorted(simp)

    def _macro_boundary(self, tets):
        count = {}
        for t in tets:
            for f in combinations(self.macro.tets[t], 3):
                count[f] = count.get(f, 0) + 1
        return [f for f, k in count.items() if k == 1]

    def parent(self, simplex) -> tuple:
        """Smallest macro simplex (sorted macro vertex ids) containing ``simplex``."""
        verts = set()
        for i in simplex:
            verts.update(self.point_parent[i])
        return tuple(sorted(verts))

    @property
    def interior_ct_edges(self) -> list:
        """E(T_h^wf): Clough-Tocher edges of interior macro faces."""
        return [(f, e) for f in self.macro.interior_faces for e in self.ct_edges[f]]

    # frames ------------------------------------------------------------------
    def face_normal(self, f, tet: int | None = None) -> tuple:
        """Raw normal of macro face f, outward from ``tet`` when given."""
        a, b, c = (self.macro.vertices[i] for i in f)
        n = cross(sub(b, a), sub(c, a))
        if tet is not None:
            (o,) = set(self.macro.tets[tet]) - set(f)
            if dot(n, sub(self.macro.vertices[o], a)) > 0:
                n = scale(-1, n)
        return n

    def frame(self, entity, tet: int | None = None) -> Frame:
        """Frame for a macro face (3 macro vertex ids), a CT edge (m_F, a)
        given as ``(face, edge)``, or a split-level triangle."""
        if isinstance(entity, tuple) and len(entity) == 2 and isinstance(entity[0], tuple):
            f, e = entity
            if e not in self.ct_edges.get(f, ()):
                raise KeyError(f"{e} is not a Clough-Tocher edge of face {f}")
            n = self.face_normal(f, tet)
            mF = self.m[f]
            (a,) = set(e) - {mF}
            t = sub(self.points[a], self.points[mF])
            return Frame(n, dot(n, n), t, cross(n, t))
        if entity in self.macro.face_tets:
            n = self.face_normal(entity, tet)
            return Frame(n, dot(n, n))
        tri = tuple(sorted(entity))
        if len(tri) == 3 and all(0 <= i < len(self.points) for i in tri):
            a, b, c = self.coords(tri)
            n = cross(sub(b, a), sub(c, a))
            if dot(n, n) == 0:
                raise KeyError(f"{entity} is not a triangle")
            return Frame(n, dot(n, n))
        raise KeyError(f"unknown entity {entity}")

    def theta_slots(self, f, e) -> JumpPairing:
        ts = self.macro.face_tets.get(f)
        if ts is None or len(ts) != 2 or e not in self.ct_edges[f]:
            raise KeyError(f"{e} is not an interior Clough-Tocher edge of an interior face")
        mF = self.m[f]
        (a,) = set(e) - {mF}
        others = sorted(set(f) - {a})
        q1 = tuple(sorted((mF, a, others[0])))
        q2 = tuple(sorted((mF, a, others[1])))
        t1, t2 = ts

        def cell(t, q):
            return self.cell_index[tuple(sorted(q + (self.z[t],)))]

        slots = ((cell(t1, q1), 1), (cell(t1, q2), -1), (cell(t2, q2), 1), (cell(t2, q1), -1))
        return JumpPairing(f, e, q1, q2, (t1, t2), slots, sub(self.points[a], self.points[mF]))

    # io ----------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "macro": self.macro.to_dict(),
            "points": [[_fmt(x) for x in p] for p in self.points],
            "interior_points": list(self.z),
            "exact_incenter": list(self.exact_centers),
            "face_points": {",".join(map(str, f)): self.m[f] for f in self.macro.faces},
            "sub_tets": [list(c) for c in self.cells],
            "sub_tet_parent": list(self.cell_tet),
            "ct_triangles": {",".join(map(str, f)): [list(q) for q in self.ct[f]] for f in self.macro.faces},
            "interior_ct_edges": [{"face": list(f), "edge": list(e)} for f, e in self.interior_ct_edges],
            "skeleton": {str(s): len(self.skeleton(s)) for s in range(4)},
        }


def _faces_of(f):
    out = []
    for k in range(1, len(f) + 1):
        out.extend(combinations(f, k))
    return out


def boundary_facets(cells) -> list:
    """Facets belonging to exactly one of the given simplices."""
    count = {}
    for c in cells:
        for f in combinations(c, len(c) - 1):
            count[f] = count.get(f, 0) + 1
    return sorted(f for f, k in count.items() if k == 1)


def _segment_face(p, q, a, b, c):
    n = cross(sub(b, a), sub(c, a))
    den = dot(n, sub(q, p))
    if den == 0:
        return None
    s = dot(n, sub(a, p)) / den
    if not 0 < s < 1:
        return None
    return add(p, scale(s, sub(q, p)))


def _centers(mesh: MacroMesh, z=None):
    if z is not None:
        return [point(p) for p in z], [False] * len(z)
    if mesh.interior_points is not None:
        return list(mesh.interior_points), [False] * len(mesh.tets)
    out, flags = [], []
    for t in mesh.tets:
        p, ok = incenter([mesh.vertices[i] for i in t])
        out.append(p)
        flags.append(ok)
    return out, flags


def wf_split_global(mesh: MacroMesh, z=None) -> SplitComplex:
    centers, flags = _centers(mesh, z)
    for ti, t in enumerate(mesh.tets):
        if not _strictly_inside(centers[ti], [mesh.vertices[i] for i in t]):
            raise InvalidMesh(f"interior point of tet {ti} is not strictly inside")
    fp = {}
    for f, ts in mesh.face_tets.items():
        a, b, c = (mesh.vertices[i] for i in f)
        if len(ts) == 1:
            fp[f] = tuple((a[k] + b[k] + c[k]) / 3 for k in range(3))
            continue
        m = _segment_face(centers[ts[0]], centers[ts[1]], a, b, c)
        if m is None or not _in_open_triangle(m, a, b, c):
            raise InvalidMesh(f"segment between the interior points of tets {ts} misses the interior of face {f}")
        fp[f] = m
    return SplitComplex(mesh, centers, fp, flags)


def wf_split_local(tet, z=None, m=None) -> SplitComplex:
    """Split a single tetrahedron; ``m`` maps local face index i (the face
    opposite vertex i) to a face point."""
    mesh = MacroMesh(tet, [(0, 1, 2, 3)])
    centers, flags = _centers(mesh, None if z is None else [z])
    if m is None:
        return wf_split_global(mesh, None if z is None else [z])
    fp = {}
    for i, p in (m.items() if isinstance(m, dict) else enumerate(m)):
        f = tuple(j for j in range(4) if j != i)
        fp[f] = point(p)
    for f in mesh.faces:
        if f not in fp:
            a, b, c = (mesh.vertices[i] for i in f)
            fp[f] = tuple((a[k] + b[k] + c[k]) / 3 for k in range(3))
    return SplitComplex(mesh, centers, fp, flags)
