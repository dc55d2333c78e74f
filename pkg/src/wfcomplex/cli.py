"""Command line front end: dimension tables, verification suites and splits.

Every command writes one JSON report.  The exit status is 0 when every
check passes, 1 when a check fails and 2 for usage or mesh errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import complexes as C
from . import eladofs as E
from . import fespaces as FS
from .identities import IDENTITIES, identity_suite
from .rlinalg import Field, modular_fields
from .wfmesh import InvalidMesh

SUITES = ("exactness", "dofs", "commuting", "identities", "characterization", "bgg", "projrigid")
SPACES = ("U0", "U1", "U2", "U3")


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if hasattr(x, "p") and hasattr(x, "q"):  # flint fmpq
        return f"{int(x.p)}/{int(x.q)}"
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    return str(x)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _fields(mode: str, seed: int, large: bool) -> list[Field]:
    if mode == "exact" or (mode == "auto" and not large):
        return [Field()]
    return modular_fields(seed)


def _mode_name(fields) -> str:
    return "exact" if fields[0].exact else "modular"


def _check(name, expected, got, ok=None) -> dict:
    return {"name": name, "expected": expected, "got": got, "pass": expected == got if ok is None else bool(ok)}


# dims ---------------------------------------------------------------------------------
def cmd_dims(args) -> tuple[list, str, dict]:
    table = str(args.table)
    kind = "face" if table == "1" else "tet"
    dom = C.domains(args.geometry, kind)
    fields = _fields(args.mode, args.seed, large=args.r >= 4)
    checks, extra = [], {"table": table, "rows": []}
    results = [FS.dims_table(table, args.r, dom, F) for F in fields]
    for rows in zip(*results):
        row = rows[0]
        same = all(x.computed == row.computed for x in rows)
        if row.status == "skipped":
            extra["rows"].append({"space": row.space, "expected": None, "computed": None, "status": "skipped"})
            continue
        ok = same and all(x.status == "pass" for x in rows)
        extra["rows"].append({"space": row.space, "expected": row.expected, "computed": row.computed,
                              "status": "pass" if ok else "fail"})
        checks.append(_check(f"dim:{row.space}", row.expected, row.computed, ok))
    return checks, _mode_name(fields), extra


# verify suites ------------------------------------------------------------------------
def _verify_exactness(args):
    target = args.target
    if target in ("local", "global"):
        names = C.LOCAL_SEQUENCES if target == "local" else C.GLOBAL_SEQUENCES
        names = [n for n in names if args.r >= C.CATALOG[n].min_r]
    elif target in C.CATALOG:
        names = [target]
    else:
        raise UsageError(f"unknown sequence {target!r}; choose from local, global, {', '.join(sorted(C.CATALOG))}")
    checks, modes = [], set()
    for name in names:
        try:
            res = C.catalog_run(name, args.r, args.geometry, args.mode, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        modes.add(res.mode)
        checks.extend(res.checks())
    return checks, "modular" if "modular" in modes else "exact", {}


def _verify_dofs(args):
    if args.target not in SPACES:
        raise UsageError(f"unknown space {args.target!r}; choose from {', '.join(SPACES)}")
    ds = E.build(args.target, args.r, C.get_split(args.geometry))
    audit = ds.audit(args.mode, args.seed)
    checks = [_check(f"count:{c['tag']}", c["expected"], c["count"]) for c in ds.count_check()]
    checks.append(_check("dofs_equal_dim", audit["dim"], len(ds)))
    checks.append(_check("unisolvent", True, audit["unisolvent"]))
    if args.target == "U2":
        checks.append(_check("vertex_dofs", 0, audit["vertex_dofs"]))
        checks.append(_check("edge_dofs", 0, audit["edge_dofs"]))
    return checks, audit["mode"], {"audit": audit}


def _verify_commuting(args):
    rep = E.commuting_suite(args.r, C.get_split(args.geometry), args.trials, args.seed)
    n = sum(c["pass"] for c in rep.checks)
    return rep.checks, "exact", {"summary": f"{n}/{len(rep.checks)}"}


def _verify_identities(args):
    names = None
    if args.target:
        if args.target not in IDENTITIES:
            raise UsageError(f"unknown identity {args.target!r}")
        names = [args.target]
    res = identity_suite(args.trials, args.seed, names)
    checks = []
    for x in res:
        got = "holds" if x.failures == 0 else "fails"
        row = _check(f"identity:{x.identity}", x.expected, got, x.passed)
        row["trials"] = x.trials
        row["failures"] = x.failures
        if x.counterexample:
            row["counterexample"] = x.counterexample
        checks.append(row)
    return checks, "exact", {}


def _verify_characterization(args):
    dom = C.domains(args.geometry, "tet")
    checks = []
    for ring in (False, True):
        res = FS.characterization_check(dom, args.r, ring=ring)
        tag = "ring" if ring else "plain"
        checks.append(_check(f"characterization:{tag}:dim", res["expected"], res["dim_image"]))
        checks.append(_check(f"characterization:{tag}:inclusion", True, res["image_in_constraint"]))
        checks.append(_check(f"characterization:{tag}:equal", True, res["equal"]))
    return checks, "exact", {}


def _verify_bgg(args):
    checks = []
    for ring in (False, True):
        checks.extend(C.run_bgg(args.r, args.geometry, ring)["checks"])
    return checks, "exact", {}


def _verify_projrigid(args):
    res = FS.proj_rigid_check(C.domains(args.geometry, "tet"))
    checks = [
        _check("dim_PR", 6, res["dim_PR"]),
        _check("PR_plus_ring_spans_U3", res["dim_U3"], res["rank_sum"]),
        _check("ring_codim_6", res["dim_U3"] - 6, res["dim_U3_ring"]),
        _check("constants_reproduced", True, res["constants_reproduced"]),
    ]
    return checks, "exact", {}


VERIFY = {
    "exactness": _verify_exactness,
    "dofs": _verify_dofs,
    "commuting": _verify_commuting,
    "identities": _verify_identities,
    "characterization": _verify_characterization,
    "bgg": _verify_bgg,
    "projrigid": _verify_projrigid,
}


def cmd_verify(args):
    if args.suite in ("exactness", "dofs") and not args.target:
        raise UsageError(f"verify {args.suite} needs a target")
    return VERIFY[args.suite](args)


def cmd_split(args) -> dict:
    S = C.get_split(args.geometry)
    out = S.to_dict()
    out["geometry"] = args.geometry
    out["num_sub_tets"] = len(S.cells)
    return out


# entry point ----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=int, default=3, help="polynomial degree parameter")
    common.add_argument("--geometry", default="disphenoid",
                        help="builtin geometry (disphenoid, unit, two-tet, cube) or mesh JSON path")
    common.add_argument("--mode", choices=("exact", "modular", "auto"), default="auto")
    common.add_argument("--trials", type=int, default=5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="record wall time in elapsed_ms (otherwise null, keeping output reproducible)")

    p = argparse.ArgumentParser(prog="wfcomplex", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    d = sub.add_parser("dims", parents=[common], help="dimension tables")
    d.add_argument("--table", choices=("1", "2", "U"), required=True)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("target", nargs="?", help="sequence name, space or identity name")
    sub.add_parser("split", parents=[common], help="Worsey-Farin split as JSON")
    return p


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.r < 0:
            raise UsageError("--r must be non-negative")
        if args.command == "split":
            _emit(dumps(cmd_split(args)), args.out)
            return 0
        if args.command == "dims":
            checks, mode, extra = cmd_dims(args)
        else:
            checks, mode, extra = cmd_verify(args)
    except (InvalidMesh, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    command = args.command if args.command == "dims" else " ".join(
        x for x in ("verify", args.suite, args.target) if x)
    report = {
        "command": command,
        "r": args.r,
        "geometry": args.geometry,
        "mode": mode,
        "seed": args.seed,
        "checks": [{k: c[k] for k in ("name", "expected", "got", "pass")}
                   | {k: v for k, v in c.items() if k not in ("name", "expected", "got", "pass")}
                   for c in checks],
        "elapsed_ms": round((time.perf_counter() - start) * 1000) if args.timing else None,
    }
    report.update(extra)
    report["passed"] = sum(c["pass"] for c in checks)
    report["total"] = len(checks)
    _emit(dumps(report), args.out)
    if not checks and args.command != "dims":
        return 1
    return 0 if all(c["pass"] for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
