import pytest

from wfcomplex import fespaces as FS
from wfcomplex.rlinalg import Field, modular_fields


@pytest.mark.parametrize("name,r,dim", [
    ("L0", 3, 19), ("V1", 2, 27), ("S0", 3, 12), ("R0", 4, 9), ("Q1", 1, 15),
])
def test_table1_values(face_dom, name, r, dim):
    assert FS.space(name, face_dom, r).dim == dim


@pytest.mark.parametrize("name,r,dim", [
    ("V0", 3, 91), ("S0", 3, 28), ("Vc2_ring", 1, 38), ("V3", 0, 12),
])
def test_table2_values(tet_dom, name, r, dim):
    assert FS.space(name, tet_dom, r).dim == dim


def test_table1_all_rows(face_dom):
    for r in range(1, 6):
        rows = FS.dims_table("1", r, face_dom)
        assert all(row.status == "pass" for row in rows), [row for row in rows if row.status != "pass"]


def test_table1_gates_r0(face_dom):
    rows = FS.dims_table("1", 0, face_dom)
    assert {row.status for row in rows} == {"skipped"}


def test_u_dims_r3(tet_dom):
    got = [FS.u_space(k, tet_dom, 3).dim for k in range(4)]
    assert got == [210, 294, 126, 36]


def test_ring_u_dims_follow_formulas(tet_dom):
    for r in (3, 4):
        got = [FS.u_space(k, tet_dom, r, ring=True).dim for k in range(4)]
        assert got == [FS.U_DIMS[(k, True)](r) for k in range(4)]


def test_q_perp_splits_q1(face_dom):
    F = Field()
    for r in (1, 2):
        Q1 = FS.space("Q1", face_dom, r)
        Qt = FS.space("Q1_tilde", face_dom, r)
        Qp = FS.q_perp(face_dom, r)
        assert Qp.dim == Q1.dim - Qt.dim
        both = F.hstack([Qp.matrix(), Qt.matrix()], Q1.layout.size)
        assert F.rank(both) == Q1.dim
        assert F.is_zero(FS.gram(face_dom, Qp.basis, Qt.basis))


def test_q_perp_count_matches_u1_family(face_dom):
    # 12(r-2) over four faces at r=3
    assert 4 * FS.q_perp(face_dom, 1).dim == 12


def test_characterization_plain_r3(tet_dom):
    res = FS.characterization_check(tet_dom, 3)
    assert res["dim_image"] == res["dim_constraint"] == 294
    assert res["image_in_constraint"] and res["equal"]


def test_characterization_ring_r4(tet_dom):
    res = FS.characterization_check(tet_dom, 4, ring=True)
    assert res["dim_image"] == res["dim_constraint"] == FS.U_DIMS[(1, True)](4)
    assert res["image_in_constraint"] and res["equal"]


def test_projected_rigid_motions(tet_dom):
    res = FS.proj_rigid_check(tet_dom)
    assert res["dim_PR"] == 6
    assert res["rank_sum"] == res["dim_U3"] == 36
    assert res["constants_reproduced"]
    assert res["pass"]


def test_modular_dimension_agrees(tet_dom):
    for F in (Field(), *modular_fields(0)):
        assert FS.space("S1", tet_dom, 3, F).dim == FS.TABLE2["S1"][0](3)
