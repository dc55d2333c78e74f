from fractions import Fraction

import pytest

from wfcomplex.bernstein import Layout, PiecewiseField
from wfcomplex.fespaces import global_domain, theta_map
from wfcomplex.rlinalg import Field
from wfcomplex.wfmesh import (Frame, InvalidMesh, MacroMesh, builtin, incenter, mesh_from_dict, two_tets,
                              wf_split_global, wf_split_local)

F3 = Fraction(1, 3)


def test_disphenoid_incenter_is_exact_origin():
    p, exact = incenter(builtin("disphenoid").vertices)
    assert exact and p == (0, 0, 0)


def test_unit_tet_incenter_falls_back_to_centroid():
    p, exact = incenter(builtin("unit").vertices)
    assert not exact
    assert p == (Fraction(1, 4),) * 3


def test_scaled_to_zero_is_degenerate():
    with pytest.raises(InvalidMesh):
        incenter([(0, 0, 0)] * 4)
    with pytest.raises(InvalidMesh):
        MacroMesh([(0, 0, 0)] * 4, [(0, 1, 2, 3)])


def test_unit_tet_split_volumes():
    S = wf_split_global(builtin("unit"))
    assert len(S.cells) == 12
    assert sum(S.volume(c) for c in range(12)) == Fraction(1, 6)


@pytest.mark.parametrize("name", ["disphenoid", "unit", "two-tet", "cube"])
def test_each_face_has_three_ct_triangles(name):
    S = wf_split_global(builtin(name))
    for f in S.macro.faces:
        assert len(S.ct[f]) == 3
        assert len(S.ct_edges[f]) == 3
    assert len(S.cells) == 12 * len(S.macro.tets)


def test_interior_point_on_face_is_rejected():
    with pytest.raises(InvalidMesh):
        wf_split_local(builtin("unit").vertices, z=(Fraction(1, 2), Fraction(1, 2), 0))


def test_two_tet_shared_face_point():
    S = wf_split_global(two_tets())
    (f,) = S.macro.interior_faces
    assert S.points[S.m[f]] == (F3, F3, F3)
    assert len(S.interior_ct_edges) == 3


def test_single_tet_matches_local_split():
    g = wf_split_global(builtin("unit"))
    l = wf_split_local(builtin("unit").vertices)
    assert g.points == l.points and g.cells == l.cells


def test_skeleton_counts():
    S = wf_split_global(builtin("unit"))
    assert len(S.skeleton(0, level="macro")) == 4
    assert len(S.skeleton(0)) == 9
    assert len(S.skeleton(3)) == 12
    f = S.macro.faces[0]
    tri = [c for c in S.skeleton(2) if set(c) <= set(f) | {S.m[f]}]
    assert len(tri) == 3


def test_face_frame_projection():
    fr = Frame((0, 0, 2), Fraction(4))
    assert fr.Q == ((1, 0, 0), (0, 1, 0), (0, 0, 0))


def test_bad_mesh_json():
    with pytest.raises(InvalidMesh):
        mesh_from_dict({"vertices": [[0, 0, 0]]})


def _piecewise_constant(S, values):
    F = Field()
    L = Layout(S.points, S.cells, 1, 1)
    blocks = [F.matrix(4, 1, [values[c]] * 4) for c in range(len(S.cells))]
    return PiecewiseField(L, blocks, F)


def test_theta_vanishes_on_continuous_fields():
    S = wf_split_global(two_tets())
    dom = global_domain(S)
    p = _piecewise_constant(S, [7] * len(S.cells))
    th = theta_map(p.layout, dom, vector=False)(p)
    assert Field().is_zero(th)


def test_theta_vanishes_for_equal_jumps():
    S = wf_split_global(two_tets())
    dom = global_domain(S)
    for k, (e, slots, _) in enumerate(dom.theta):
        rows = [2 * k, 2 * k + 1]  # two Bernstein coefficients per edge at degree 1
        vals = [0] * len(S.cells)
        (c1, _), (c2, _), (c3, _), (c4, _) = slots
        a, b, c = 3, 11, -4
        vals[c1], vals[c2] = a, b          # T1: q1, q2
        vals[c4], vals[c3] = c, c - (a - b)  # T2: q1, q2 with the same jump
        p = _piecewise_constant(S, vals)
        th = theta_map(p.layout, dom, vector=False)(p)
        assert all(th[i, 0] == 0 for i in rows)
        vals[c3] += 1
        p = _piecewise_constant(S, vals)
        th = theta_map(p.layout, dom, vector=False)(p)
        assert any(th[i, 0] != 0 for i in rows)
