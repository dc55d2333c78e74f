import json
import subprocess
import sys

import pytest

from wfcomplex.cli import dumps, main

SCHEMA = {"command", "r", "geometry", "mode", "seed", "checks", "elapsed_ms"}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), out


def test_dims_table2(capsys):
    code, rep, _ = run(capsys, "dims", "--table", "2", "--r", "3")
    assert code == 0
    assert SCHEMA <= set(rep)
    row = next(c for c in rep["checks"] if c["name"] == "dim:V0")
    assert (row["expected"], row["got"], row["pass"]) == (91, 91, True)


def test_dims_table_u(capsys):
    code, rep, _ = run(capsys, "dims", "--table", "U", "--r", "3")
    got = {c["name"]: c["got"] for c in rep["checks"]}
    assert code == 0
    assert [got[f"dim:U{k}"] for k in range(4)] == [210, 294, 126, 36]


def test_dims_table1_r0_is_gated(capsys):
    code, rep, _ = run(capsys, "dims", "--table", "1", "--r", "0")
    assert code == 0
    s_row = next(r for r in rep["rows"] if r["space"] == "S0")
    assert s_row["status"] == "skipped"


def test_verify_exactness(capsys):
    code, rep, _ = run(capsys, "verify", "exactness", "elseq", "--r", "3")
    assert code == 0 and rep["command"] == "verify exactness elseq"
    assert all(c["pass"] for c in rep["checks"])


def test_verify_dofs_u2(capsys):
    code, rep, _ = run(capsys, "verify", "dofs", "U2", "--r", "3")
    assert code == 0
    audit = rep["audit"]
    assert audit["unisolvent"] is True
    assert audit["vertex_dofs"] == 0 and audit["edge_dofs"] == 0
    assert set(audit) >= {"space", "r", "families", "dim", "unisolvent", "mode"}


def test_verify_identities_subset(capsys):
    code, rep, _ = run(capsys, "verify", "identities", "trace_rot_f", "--trials", "3")
    assert code == 0 and rep["checks"][0]["got"] == "holds"


def test_verify_projrigid(capsys):
    code, rep, _ = run(capsys, "verify", "projrigid")
    assert code == 0 and rep["total"] == 4


def test_output_is_byte_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["verify", "identities", "div_xi", "--trials", "2", "--seed", "11", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["seed"] == 11 and rep["elapsed_ms"] is None


def test_timing_flag_records_elapsed(capsys):
    _, rep, _ = run(capsys, "verify", "identities", "div_xi", "--trials", "1", "--timing")
    assert isinstance(rep["elapsed_ms"], int)


def test_failing_check_exits_1(capsys, monkeypatch):
    import wfcomplex.fespaces as FS
    real = FS.proj_rigid_check
    monkeypatch.setattr(FS, "proj_rigid_check", lambda dom: real(dom) | {"dim_PR": 5})
    code, rep, _ = run(capsys, "verify", "projrigid")
    assert code == 1
    assert rep["passed"] == 3 and rep["total"] == 4


def test_split_builtin(capsys):
    code, rep, _ = run(capsys, "split", "--geometry", "disphenoid")
    assert code == 0 and rep["num_sub_tets"] == 12


def test_split_two_tet_face_point(capsys):
    _, rep, _ = run(capsys, "split", "--geometry", "two-tet")
    (face,) = [k for k, v in rep["face_points"].items() if rep["points"][v] == ["1/3", "1/3", "1/3"]]
    assert face == "1,2,3"


def test_split_degenerate_mesh_exits_2(tmp_path, capsys):
    mesh = tmp_path / "flat.json"
    mesh.write_text(json.dumps({"vertices": [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 0, 1]], "tets": [[0, 1, 2, 3]]}))
    assert main(["split", "--geometry", str(mesh)]) == 2
    assert main(["split", "--geometry", str(tmp_path / "missing.json")]) == 2


def test_usage_errors_exit_2(capsys):
    assert main(["verify", "exactness", "nosuchseq"]) == 2
    assert main(["verify", "dofs", "U9"]) == 2
    assert main(["verify", "exactness", "elseq", "--r", "2"]) == 2


def test_rationals_serialize_as_p_over_q():
    from fractions import Fraction
    assert json.loads(dumps({"x": Fraction(-3, 4)})) == {"x": "-3/4"}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wfcomplex", "verify", "projrigid"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["passed"] == 4


@pytest.mark.slow
def test_verify_commuting_summary(capsys):
    code, rep, _ = run(capsys, "verify", "commuting", "--r", "3", "--trials", "5", "--seed", "7")
    assert code == 0
    assert rep["summary"] == "15/15"
