"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 3 infeasible configuration,
4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from bdtp.optimize import ConvergenceError, GradientConfig
from bdtp.policy import InfeasibleError
from bdtp.sweep import (
    COLUMNS,
    SweepSpec,
    exhaustive_row,
    fixed_point_row,
    mc_row,
    optimize_heterogeneous_row,
    optimize_homogeneous_row,
    render_csv,
    render_json,
    resolve_threads,
    run_sweep,
    selective_row,
    write_output,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 2, 3, 4


class UsageError(ValueError):
    pass


def _q_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=["plus", "minus"], required=True,
                   help="plus: p = n/(n+1), R- = -n;  minus: p = 1/(n+1), R- = -1/n")
    p.add_argument("--n", type=_positive_int, required=True)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--json", action="store_true", help="emit a JSON records array instead of CSV")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $BDTP_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdtp", description="Breadth-depth allocation of finite sampling capacity in decision trees.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("value-exhaustive", help="value of a fully sampled (b, d) tree")
    _add_model(p)
    p.add_argument("--b", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, required=True)
    _add_output(p)

    p = sub.add_parser("value-selective", help="value under per-level sampling probabilities")
    _add_model(p)
    p.add_argument("--b", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--q", type=_q_list, required=True, help="comma list, deepest level first")
    _add_output(p)

    p = sub.add_parser("optimize-homogeneous", help="best b for homogeneous policies")
    _add_model(p)
    p.add_argument("--capacity", type=float, required=True)
    p.add_argument("--b-max", type=int, default=20)
    _add_output(p)

    p = sub.add_parser("optimize-heterogeneous", help="best (b, q) by projected gradient ascent")
    _add_model(p)
    p.add_argument("--capacity", type=float, required=True)
    p.add_argument("--b-max", type=int, default=10)
    p.add_argument("--fd-step", type=float, default=GradientConfig.fd_step)
    p.add_argument("--lr", type=float, default=GradientConfig.learning_rate)
    p.add_argument("--max-iters", type=_positive_int, default=GradientConfig.max_iterations)
    p.add_argument("--tol", type=float, default=GradientConfig.value_tolerance)
    _add_output(p)

    p = sub.add_parser("mc", help="Monte-Carlo backwards-induction estimate")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--b", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--q", type=_q_list, default=None, help="comma list, deepest level first")
    p.add_argument("--runs", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hard", action="store_true", help="exactly-C allocation instead of Bernoulli")
    _add_output(p)

    p = sub.add_parser("fixed-point", help="large-depth probability of an all-positive optimal path")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--b", type=_positive_int, required=True)
    _add_output(p)

    for name in ("sweep", "loss-map"):
        p = sub.add_parser(name, help="parameter sweep from a JSON config" if name == "sweep"
                           else "heuristic loss map from a JSON config")
        p.add_argument("--config", required=True)
        _add_output(p)
    return parser


def _emit(args, columns, rows) -> None:
    text = render_json(columns, rows) if args.json else render_csv(columns, rows)
    write_output(text, args.out)


def _run(args) -> int:
    cmd = args.command
    if cmd == "value-exhaustive":
        _emit(args, COLUMNS["exhaustive"], [exhaustive_row(args.family, args.n, args.b, args.d)])
    elif cmd == "value-selective":
        if len(args.q) != args.d:
            raise UsageError(f"--q has {len(args.q)} entries, expected --d = {args.d}")
        _emit(args, COLUMNS["selective"], [selective_row(args.family, args.n, args.b, args.q)])
    elif cmd == "optimize-homogeneous":
        row = optimize_homogeneous_row(args.family, args.n, args.capacity, args.b_max)
        _emit(args, COLUMNS["optimize-homogeneous"], [row])
    elif cmd == "optimize-heterogeneous":
        config = GradientConfig(fd_step=args.fd_step, learning_rate=args.lr,
                                max_iterations=args.max_iters, value_tolerance=args.tol)
        row = optimize_heterogeneous_row(args.family, args.n, args.capacity, args.b_max, config)
        _emit(args, COLUMNS["optimize-heterogeneous"], [row])
        if not row["converged"]:
            logging.error("iteration cap reached before the value tolerance was met")
            return EXIT_NONCONVERGED
    elif cmd == "mc":
        if args.q is not None and len(args.q) != args.d:
            raise UsageError(f"--q has {len(args.q)} entries, expected --d = {args.d}")
        row = mc_row(args.p, args.b, args.d, args.q, args.runs, args.seed, args.hard,
                     workers=resolve_threads(args.threads))
        _emit(args, COLUMNS["mc"], [row])
    elif cmd == "fixed-point":
        _emit(args, COLUMNS["fixed-point"], [fixed_point_row(args.p, args.b)])
    elif cmd in ("sweep", "loss-map"):
        spec = SweepSpec.load(args.config, "loss-map" if cmd == "loss-map" else None)
        if cmd == "loss-map" and spec.mode != "loss-map":
            raise UsageError(f"loss-map needs mode 'loss-map', config has {spec.mode!r}")
        if cmd == "sweep" and spec.mode == "loss-map":
            raise UsageError("use the loss-map subcommand for mode 'loss-map'")
        columns, rows = run_sweep(spec, args.threads)
        if args.out is None and spec.out is not None:
            args.out = spec.out
        args.json = args.json or spec.json
        _emit(args, columns, rows)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except InfeasibleError as exc:
        print(f"bdtp: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"bdtp: no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, OSError, OverflowError) as exc:
        print(f"bdtp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
