"""Acceptance criteria 1-8, each reported as one PASS/FAIL line.

All comparisons are exact (tolerance 0).  Run under pytest, where the
lines appear in the terminal summary, or directly with
``python tests/test_acceptance.py``.
"""
import sys

import pytest

from wfcomplex import complexes as C
from wfcomplex import eladofs as E
from wfcomplex import fespaces as FS
from wfcomplex.identities import identity_suite
from wfcomplex.rlinalg import Field, modular_fields

SEED = 7
RESULTS: dict[int, tuple[bool, str]] = {}

TITLES = {
    1: "dimension tables",
    2: "local exactness suites",
    3: "global exactness suites",
    4: "DOF unisolvence",
    5: "commuting diagram",
    6: "identity suite",
    7: "projected rigid motions",
    8: "BGG construction",
}


def record(n: int, failures: list, detail: str):
    ok = not failures
    RESULTS[n] = (ok, detail if ok else f"{detail}; failing: {', '.join(map(str, failures[:6]))}")
    assert ok, RESULTS[n][1]


def result_lines() -> list[str]:
    lines = []
    for n in sorted(TITLES):
        if n in RESULTS:
            ok, detail = RESULTS[n]
            lines.append(f"criterion {n} ({TITLES[n]}): {'PASS' if ok else 'FAIL'} [{detail}]")
        else:
            lines.append(f"criterion {n} ({TITLES[n]}): FAIL [not run]")
    return lines


def _dim_failures(table, r, dom, F):
    rows = FS.dims_table(table, r, dom, F)
    bad = [f"{table}:{x.space}@r={r}:{x.expected}!={x.computed}" for x in rows if x.status == "fail"]
    return bad, sum(x.status == "pass" for x in rows)


def test_criterion_1_dimensions():
    failures, n = [], 0
    face = C.domains("disphenoid", "face")
    for r in range(1, 6):
        F = Field() if r < 4 else modular_fields(SEED)[0]
        bad, k = _dim_failures("1", r, face, F)
        failures += bad
        n += k
    for geometry in ("disphenoid", "unit"):
        dom = C.domains(geometry, "tet")
        for r in (1, 2, 3, 4):
            F = Field() if r < 4 else modular_fields(SEED)[0]
            bad, k = _dim_failures("2", r, dom, F)
            failures += bad
            n += k
    dom = C.domains("disphenoid", "tet")
    for r in (3, 4):
        F = Field() if r < 4 else modular_fields(SEED)[0]
        bad, k = _dim_failures("U", r, dom, F)
        failures += bad
        n += k
    record(1, failures, f"{n} dimension rows matched")


def test_criterion_2_local_exactness():
    failures, n = [], 0
    for r in (3, 4):
        for name in C.LOCAL_SEQUENCES:
            if r < C.CATALOG[name].min_r:
                continue
            res = C.catalog_run(name, r, "disphenoid", "auto", SEED)
            n += 1
            if not res.passed:
                failures.append(f"{name}@r={r}")
    record(2, failures, f"{n} sequence runs at r=3,4")


def test_criterion_3_global_exactness():
    failures, n = [], 0
    for geometry in ("two-tet", "cube"):
        for name in C.GLOBAL_SEQUENCES:
            res = C.catalog_run(name, 3, geometry, "auto", SEED)
            n += 1
            if not res.passed:
                failures.append(f"{name}@{geometry}")
            if name == "global_preseq":
                head = res.reports[0].head_kernel
                if head != 6:
                    failures.append(f"{name}@{geometry}:head_kernel={head}")
    record(3, failures, f"{n} global runs on two-tet and cube")


def test_criterion_4_dof_unisolvence():
    failures = []
    sc = C.get_split("disphenoid")
    counts = {3: (210, 294, 126, 36), 4: (444, 690, 396, 144)}
    for r, mode in ((3, "exact"), (4, "modular")):
        for k, expected in enumerate(counts[r]):
            ds = E.build(f"U{k}", r, sc)
            if len(ds) != expected or ds.target.dim != expected:
                failures.append(f"U{k}@r={r}:count={len(ds)}")
            ok, _ = ds.unisolvent(mode, SEED)
            if not ok:
                failures.append(f"U{k}@r={r}:singular")
            if k == 2 and r == 3:
                audit = ds.audit(mode, SEED)
                if audit["vertex_dofs"] or audit["edge_dofs"]:
                    failures.append("U2:audit")
    record(4, failures, "U0-U3 square and nonsingular at r=3 (exact) and r=4 (modular); U2 audit clean")


def test_criterion_5_commuting():
    rep = E.commuting_suite(3, C.get_split("disphenoid"), 5, SEED)
    failures = [c["name"] for c in rep.checks if not c["pass"]]
    record(5, failures, f"{sum(c['pass'] for c in rep.checks)}/{len(rep.checks)} commuting checks, 5 trials")


def test_criterion_6_identities():
    res = identity_suite(20, SEED)
    failures = [x.identity for x in res if not x.passed]
    record(6, failures, f"{len(res)} identities x 20 trials")


def test_criterion_7_projected_rigid():
    res = FS.proj_rigid_check(C.domains("disphenoid", "tet"))
    failures = [] if res["pass"] else [f"dim_PR={res['dim_PR']}", f"rank_sum={res['rank_sum']}/{res['dim_U3']}"]
    record(7, failures, f"dim P_U R = {res['dim_PR']}, U3 = P_U R + ring U3 ({res['rank_sum']} = 6 + {res['dim_U3_ring']})")


def test_criterion_8_bgg():
    failures, n = [], 0
    for ring in (False, True):
        out = C.run_bgg(3, "disphenoid", ring)
        n += len(out["checks"])
        failures += [c["name"] for c in out["checks"] if not c["pass"]]
    record(8, failures, f"{n} BGG checks for preseq and preseqb")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
