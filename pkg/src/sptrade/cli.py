"""Command line interface: ``sptrade drop | solve | sweep``.

Exit codes: 0 success, 1 configuration error, 2 nothing feasible,
3 solver failure, 130 interrupted (partial sweep CSV is still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from pathlib import Path

from . import __version__, numerics
from .allocator import ITERATION_CAP, SolveOptions
from .harness import ConfigError, csv_lines, iter_experiment, load_config, write_csv
from .scenario import (DropGeometry, ScenarioError, SystemDefaults, format_scenario,
                       generate_drop, load_scenario)
from .selection import SCHEMES, SPT_ORDER, run_scheme

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_INTERRUPTED = 0, 1, 2, 3, 130

log = logging.getLogger("sptrade")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_drop(args) -> int:
    table = SystemDefaults(n_mu=args.k, n_su=args.n)
    s = generate_drop(DropGeometry(), table=table, seed=args.seed)
    _emit(f"# drop seed={args.seed}\n" + format_scenario(s), args.out)
    return EXIT_OK


def _fmt_list(xs) -> str:
    return ", ".join(format(float(x), ".10g") for x in xs)


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    opts = SolveOptions(enforce_c1=not args.no_c1, enforce_c4=not args.no_c4)
    res = run_scheme(s, args.scheme, opts)
    f = res.final
    lines = [f"scheme = {res.scheme}", f"status = {f.status}",
             f"selected = {', '.join(str(k) for k in res.chosen)}"]
    if f.violated:
        lines.append(f"violated = {f.violated}")
    if f.breakdown is not None and f.feasible:
        a, bd = f.allocation, f.breakdown
        lines += [f"ee_bits_per_joule = {bd.ee:.10g}", f"rate_bits_per_s = {bd.r_total:.10g}",
                  f"power_total_w = {bd.p_total:.10g}",
                  f"transmit_power_w = {a.total_transmit_power:.10g}",
                  f"p_su_w = {_fmt_list(a.p)}", f"w_mu_hz = {_fmt_list(a.w)}",
                  f"q_mu_w = {_fmt_list(a.q)}", f"b_shared_hz = {_fmt_list(a.b)}",
                  f"p_shared_w = {_fmt_list(a.p_share)}",
                  f"su_of_mu = {', '.join(str(int(k)) for k in a.su_of_mu)}",
                  f"dinkelbach_iterations = {f.outer_iters}"]
    _emit("\n".join(lines) + "\n", args.out)
    if not f.feasible:
        return EXIT_INFEASIBLE
    return EXIT_SOLVER if f.status == ITERATION_CAP else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.drops is not None:
        changes["drops"] = args.drops
    if args.scheme:
        changes["schemes"] = tuple(args.scheme)
    if args.no_c1:
        changes["enforce_c1"] = False
    if args.no_c4:
        changes["enforce_c4"] = False
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    out = args.out or cfg.out
    rows = []
    try:
        for point in iter_experiment(cfg):
            rows.extend(point)
            log.info("%s = %g done", cfg.sweep_column, point[0].value)
    except KeyboardInterrupt:
        _write_rows(rows, cfg.sweep_column, out)
        return EXIT_INTERRUPTED
    _write_rows(rows, cfg.sweep_column, out)
    if rows and all(r.feasible_fraction == 0.0 for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _write_rows(rows, column, out):
    if out:
        write_csv(rows, out, column)
    else:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(csv_lines(rows, column))
        sys.stdout.write(buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sptrade", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log sweep progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("drop", help="generate one random scenario file")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--k", type=int, default=SystemDefaults.n_mu, help="number of MUs")
    d.add_argument("--n", type=int, default=SystemDefaults.n_su, help="number of SUs")
    d.add_argument("--out", help="output file (default stdout)")
    d.set_defaults(func=cmd_drop)

    s = sub.add_parser("solve", help="select MUs and allocate resources for a scenario file")
    s.add_argument("scenario")
    s.add_argument("--scheme", choices=SCHEMES, default=SPT_ORDER)
    s.add_argument("--no-c1", action="store_true", help="drop the power budget")
    s.add_argument("--no-c4", action="store_true", help="drop the minimum SC rate")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV")
    w.add_argument("config")
    w.add_argument("--seed", type=int)
    w.add_argument("--drops", type=int)
    w.add_argument("--scheme", action="append", choices=SCHEMES,
                   help="repeat to run several schemes (overrides the config)")
    w.add_argument("--no-c1", action="store_true")
    w.add_argument("--no-c4", action="store_true")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (numerics.DinkelbachError, numerics.DegenerateGradientError, ArithmeticError,
            RuntimeError) as exc:
        print(f"sptrade: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ScenarioError, ValueError, OSError) as exc:
        # ValueError also covers bad counts and inconsistent model inputs
        print(f"sptrade: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
