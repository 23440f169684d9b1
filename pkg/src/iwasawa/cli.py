"""Command-line front end.

Exit codes: 0 success, 1 a verification failed, 2 precision or budget
exhausted, 3 bad input (parse error, unsuitable presentation, unknown suite).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from typing import Sequence

from .errors import (
    CongruenceViolation,
    CorankMismatch,
    DimensionBudgetExceeded,
    IwasawaError,
    NotSquare,
    PrecisionExhausted,
    SizeExceeded,
    Unstable,
)
from .harness import PROBE_SUITES, SUITES, SuiteReport, assemble_delta, drop_free_generators, run_suite
from .io import InputError, load_module, load_skeleton
from .modules import char_invariants, growth_trace, invariants_via_growth
from .ring import RingParams

EXIT_OK, EXIT_FAIL, EXIT_PRECISION, EXIT_INPUT = 0, 1, 2, 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _char_route(M) -> dict:
    # generators absent from every relation split off free summands
    T, free = drop_free_generators(M)
    if T.g == 0:
        return {"method": "char_generator", "rank": free, "mu": 0, "lambda": 0, "lambda_tag": "lambda",
                "mu_vanishes": True, "precision_ok": True, "rank_certified": True, "slope": None}
    rep = char_invariants(T)
    return dataclasses.replace(rep, rank=free).to_dict()


def cmd_invariants(args) -> int:
    M = load_module(args.path)
    out = {}
    if args.route in ("char", "both"):
        out["char"] = _char_route(M)
    if args.route in ("growth", "both"):
        out["growth"] = invariants_via_growth(M, args.nmax).to_dict()
    if args.route == "both":
        c, g = out["char"], out["growth"]
        out["routes_agree"] = (c["rank"], c["mu"], c["lambda"]) == (g["rank"], g["mu"], g["lambda"])
    _emit(out)
    return EXIT_OK


def cmd_growth(args) -> int:
    M = load_module(args.path)
    trace = growth_trace(M, args.nmax)
    rows = trace.rows()
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n", "pn", "e", "delta"], lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: "" if v is None else v for k, v in row.items()})
        sys.stdout.write(buf.getvalue())
    else:
        _emit({"p": trace.p, "rows": rows, "slope": trace.slope, "intercept": trace.intercept})
    return EXIT_OK


def _params(args) -> RingParams:
    try:
        return RingParams(args.p, args.Np, args.Mx, args.u0)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}", file=sys.stderr)
        return EXIT_INPUT
    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    report = run_suite(args.suite, args.trials, args.seed, _params(args))
    sys.stdout.write(report.to_json() + "\n")
    if args.suite in PROBE_SUITES:
        return EXIT_OK
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_delta(args) -> int:
    f, g = load_skeleton(args.f), load_skeleton(args.g)
    report = SuiteReport("delta", 0, 1, f.S_nonprimitive.params)
    assemble_delta(f, g, report)
    sys.stdout.write(report.to_json() + "\n")
    return EXIT_OK if report.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iwasawa", description="Iwasawa invariants of finitely presented Z_p[[X]]-modules.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_inv = sub.add_parser("invariants", help="rank, mu and lambda of a module file")
    p_inv.add_argument("path")
    p_inv.add_argument("--route", choices=["char", "growth", "both"], default="both")
    p_inv.add_argument("--nmax", type=int, default=None)
    p_inv.set_defaults(func=cmd_invariants)

    p_gr = sub.add_parser("growth", help="coinvariant growth trace e((M/p)_{Gamma_n})")
    p_gr.add_argument("path")
    p_gr.add_argument("--nmax", type=int, default=None)
    p_gr.add_argument("--format", choices=["csv", "json"], default="csv")
    p_gr.set_defaults(func=cmd_growth)

    p_ver = sub.add_parser("verify", help="run a seeded verification suite")
    p_ver.add_argument("suite", help=", ".join(sorted(SUITES)))
    p_ver.add_argument("--trials", type=int, default=20)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--p", type=int, default=3)
    p_ver.add_argument("--Np", type=int, default=6)
    p_ver.add_argument("--Mx", type=int, default=32)
    p_ver.add_argument("--u0", type=int, default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_d = sub.add_parser("delta", help="compare lambda invariants of two congruent skeleton files")
    p_d.add_argument("f")
    p_d.add_argument("g")
    p_d.set_defaults(func=cmd_delta)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotSquare as exc:
        print(f"error: char route needs a square presentation of the torsion part: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CongruenceViolation, CorankMismatch) as exc:
        print(f"violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (PrecisionExhausted, DimensionBudgetExceeded, SizeExceeded, Unstable) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except IwasawaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
