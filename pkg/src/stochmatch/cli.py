"""Command line driver: solve, simulate, generate, verify, gap."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

from . import instances
from .baselines import InapplicableLp, solve_lp_dp, solve_lp_qc, solve_lp_std, solve_lp_std_unit
from .configlp import ColumnLimitError, solve_lp_config, solve_lp_config_id
from .experiments import ALGORITHMS, CSV_COLUMNS, simulate
from .model import KnownIdInput, point_mass_input

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INAPPLICABLE, EXIT_CAP = 0, 1, 2, 3, 4
LP_NAMES = {"config": "LP-config", "config-id": "LP-config-id", "std": "LP-std",
            "std-unit": "LP-std-unit", "dp": "LP-DP", "qc": "LP-QC"}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        return instances.load(path)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def _as_graph(obj, lp):
    if isinstance(obj, KnownIdInput):
        raise CliError(f"{LP_NAMES[lp]} needs a graph instance", EXIT_INAPPLICABLE)
    return obj


def cmd_solve(args, out):
    obj = _load(args.instance)
    lp = args.lp
    summary: dict = {"lp": LP_NAMES[lp]}
    try:
        if lp in ("config", "config-id"):
            if lp == "config" and isinstance(obj, KnownIdInput):
                raise CliError("LP-config needs a graph; use --lp config-id", EXIT_INAPPLICABLE)
            sol = solve_lp_config(obj) if lp == "config" else solve_lp_config_id(
                obj if isinstance(obj, KnownIdInput) else point_mass_input(obj))
            summary.update(
                value=sol.objective,
                certified=sol.certified,
                support={str(k): len(d) for k, d in sol.x.items()},
                alpha=sol.alpha,
                beta={str(k): b for k, b in sol.beta.items()},
            )
        else:
            g = _as_graph(obj, lp)
            fn = {"std": solve_lp_std, "std-unit": solve_lp_std_unit, "dp": solve_lp_dp, "qc": solve_lp_qc}[lp]
            summary["value"] = fn(g)
    except InapplicableLp as exc:
        raise CliError(str(exc), EXIT_INAPPLICABLE) from exc
    except ColumnLimitError as exc:
        raise CliError(str(exc), EXIT_CAP) from exc
    if args.format == "json":
        out.write(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    else:
        out.write(f"{summary['lp']} = {summary['value']!r}\n")
        if "support" in summary:
            out.write(f"support sizes: {summary['support']}\n")
            out.write(f"alpha: {summary['alpha']}\n")
            out.write(f"beta: {summary['beta']}\n")
    return EXIT_OK


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_simulate(args, out):
    obj = _load(args.instance)
    name = os.path.splitext(os.path.basename(args.instance))[0]
    try:
        row = simulate(obj, args.algorithm, args.arrival, args.trials, args.seed, name=name)
    except InapplicableLp as exc:
        raise CliError(str(exc), EXIT_INAPPLICABLE) from exc
    except ColumnLimitError as exc:
        raise CliError(str(exc), EXIT_CAP) from exc
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    d = row.as_dict()
    if args.format == "json":
        text = json.dumps(d) + "\n"
        if args.out:
            with open(args.out, "a") as fh:
                fh.write(text)
        out.write(text)
        return EXIT_OK
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    need_header = not args.out or not os.path.exists(args.out) or os.path.getsize(args.out) == 0
    if need_header:
        writer.writerow(CSV_COLUMNS)
    writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(buf.getvalue())
    out.write(buf.getvalue())
    return EXIT_OK


def cmd_generate(args, out):
    fam = args.family
    try:
        if fam == "er-gap":
            obj = instances.er_gap(args.n, args.p, args.s)
        elif fam == "example-6.2":
            obj = instances.example_62(args.eps)
        elif fam == "random-weighted":
            obj = instances.random_weighted(args.m, args.n, args.seed, constraint=args.constraint,
                                            max_patience=args.patience, vertex_weighted=args.vertex_weighted)
        elif fam in ("iid-types", "id-types"):
            obj = instances.id_types(args.n, args.types, args.m, args.seed, iid=fam == "iid-types",
                                     constraint=args.constraint, max_patience=args.patience)
        else:
            raise CliError(f"unknown family {fam!r}", EXIT_PARSE)
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    text = instances.dumps(obj)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_verify(args, out):
    from . import verify

    checks = verify.SUITES[args.suite](args.seed)
    failed = 0
    for name, ok, detail in checks:
        out.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
        failed += not ok
    out.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_gap(args, out):
    from .oracles import adaptivity_gap_experiment

    s = args.s if args.s is not None else math.floor(args.p * args.n)
    try:
        res = adaptivity_gap_experiment(args.n, args.p, s, args.trials, args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    row = {
        "n": res.n, "p": res.p, "s": res.s, "trials": args.trials,
        "adaptive": res.adaptive.mean, "nonadaptive": res.nonadaptive.mean,
        "ratio": res.ratio.mean, "ratio_ci_low": res.ratio.interval[0], "ratio_ci_high": res.ratio.interval[1],
        "exact_ratio": res.exact_ratio, "poisson_limit": res.poisson_limit,
    }
    if args.format == "json":
        out.write(json.dumps(row) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(row.keys())
        w.writerow([_fmt(v) for v in row.values()])
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_PARSE)


def build_parser():
    p = _Parser(prog="stochmatch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve an LP relaxation")
    s.add_argument("--instance", required=True)
    s.add_argument("--lp", choices=sorted(LP_NAMES), default="config")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("simulate", help="run an online algorithm for many trials")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    s.add_argument("--arrival", default="rom", help="rom | aom:<i-j-...> | aom:worst<k>")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("generate", help="write a generated instance as JSON")
    s.add_argument("family", choices=("er-gap", "example-6.2", "random-weighted", "iid-types", "id-types"))
    s.add_argument("--n", type=int, default=4, help="online vertices / arrivals")
    s.add_argument("--m", type=int, default=3, help="offline vertices")
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--s", type=int)
    s.add_argument("--eps", type=float, default=1 / 12)
    s.add_argument("--types", type=int, default=3)
    s.add_argument("--constraint", choices=("patience", "knapsack", "family", "unbounded"), default="patience")
    s.add_argument("--patience", type=int, default=2)
    s.add_argument("--vertex-weighted", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_generate)

    s = sub.add_parser("verify", help="run an invariant suite")
    s.add_argument("suite", choices=("crs", "rounding", "lp-consistency", "benchmarks"))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("gap", help="adaptivity-gap experiment on G(s, n, p)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--s", type=int)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(fn=cmd_gap)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        if getattr(args, "trials", 1) < 1:
            raise CliError("--trials must be at least 1", EXIT_PARSE)
        return args.fn(args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
