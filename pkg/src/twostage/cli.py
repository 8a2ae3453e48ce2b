"""Command line front end.

    twostage solve    --net NET --trips TRIPS [--out DIR] ...
    twostage assign   --net NET --trips TRIPS [--out DIR] ...
    twostage baseline --net NET --trips TRIPS [--out DIR] ...
    twostage selfcheck

Exit codes: 0 converged, 1 input error, 2 iteration cap, 3 diverged (or a
failed self-check).
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from .solver import (
    SolverConfig,
    baseline_alternation,
    brute_force_oracle,
    fixed_point_residual,
    solve_fixed_demand,
    solve_two_stage,
)
from .tntp_io import TNTPParseError, marginals, parse_net, parse_trips, write_tables

__all__ = ["run", "main", "EXIT_CODES"]

EXIT_CODES = {"converged": 0, "iteration_cap": 2, "diverged": 3}
INPUT_ERROR = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(cast):
    def conv(text):
        value = cast(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return value
    return conv


def build_parser():
    parser = _Parser(prog="twostage", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("solve", "two-stage equilibrium (dual method)"),
                        ("assign", "fixed-demand Wardrop assignment of the trips file"),
                        ("baseline", "alternate distribution and assignment blocks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--net", required=True, type=Path, help="TNTP network file")
        p.add_argument("--trips", required=True, type=Path, help="TNTP trips file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--gamma", type=_positive(float), help="entropy temperature")
        p.add_argument("--eps", type=_positive(float), help="target duality gap")
        p.add_argument("--max-iter", type=_positive(int), help="outer iteration cap")
        p.add_argument("--gap-every", type=_positive(int), help="gap evaluation period")
        p.add_argument("--kappa", type=float, help="override BPR kappa on every link")
        p.add_argument("--power", type=float, help="override BPR power on every link")
        p.add_argument("--passes", type=_positive(int), help="baseline outer pass cap")
        p.add_argument("--no-early-stop", action="store_true",
                       help="run all --max-iter steps even once the gap is below --eps")
        p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("selfcheck", help="compare against brute force on built-in instances")
    return parser


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(args):
    for flag, path in (("--net", args.net), ("--trips", args.trips)):
        if not path.is_file():
            raise UsageError(f"{flag}: cannot read file {path}")
    try:
        net = parse_net(args.net.read_text(), kappa=args.kappa, power=args.power)
    except (TNTPParseError, ValueError) as exc:
        raise UsageError(f"--net {args.net}: {exc}") from None
    try:
        trips = parse_trips(args.trips.read_text(), zone_count=net.zone_count)
        demand = marginals(trips)
    except (TNTPParseError, ValueError) as exc:
        raise UsageError(f"--trips {args.trips}: {exc}") from None
    return net, demand


def _config(args, mode):
    overrides = {"gamma": args.gamma, "eps": args.eps, "max_iter": args.max_iter,
                 "gap_every": args.gap_every, "baseline_passes": args.passes,
                 "stop_on_gap": False if args.no_early_stop else None}
    return SolverConfig(mode=mode, **{k: v for k, v in overrides.items() if v is not None})


def _solve(args):
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    net, demand = _load(args)
    mode = {"solve": "two_stage", "assign": "fixed_demand", "baseline": "baseline"}[args.command]
    cfg = _config(args, mode)
    if mode == "two_stage":
        result = solve_two_stage(net, demand, cfg)
    elif mode == "fixed_demand":
        result = solve_fixed_demand(net, demand, cfg)
    else:
        result = baseline_alternation(net, demand, cfg)
    try:
        paths = write_tables(result, net, demand, args.out)
    except OSError as exc:
        raise UsageError(f"--out {args.out}: {exc}") from None

    code = EXIT_CODES[result.status]
    summary = {
        "command": args.command,
        "mode": mode,
        "started": started,
        "status": result.status,
        "exit_code": code,
        "net": str(args.net),
        "net_sha256": _digest(args.net),
        "trips": str(args.trips),
        "trips_sha256": _digest(args.trips),
        "nodes": net.node_count,
        "links": net.link_count,
        "od_pairs": demand.pair_count,
        "total_demand": result.total,
        "gamma": result.config.gamma,
        "eps": result.config.eps,
        "iterations": result.iterations,
        "final_gap": result.gap,
        "fixed_point_residual": (fixed_point_residual(net, result)
                                 if result.flows is not None else float("nan")),
    }
    summary.update({f"config.{k}": v for k, v in dataclasses.asdict(result.config).items()})
    for key in ("oracle_calls", "lipschitz"):
        if key in result.info:
            summary[key] = result.info[key]
    summary.update({f"artifact.{k}": str(p) for k, p in paths.items()})
    summary_path = Path(args.out) / "summary.txt"
    summary["artifact.summary"] = str(summary_path)
    summary_path.write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in summary.items()))
    print(f"{args.command}: {result.status} after {result.iterations} iterations, "
          f"gap {result.gap:.6g} (eps {result.config.eps:.6g}); tables in {args.out}")
    return code


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


ORACLE_GAMMA = 0.5
ORACLE_STEPS = 5000


def oracle_config(total):
    """Settings for the brute-force comparisons.

    Several fixtures have equal-cost routes at equilibrium, where the dual
    objective has a kink and the gap stalls, so the check runs a fixed
    number of steps with a loose slack and compares averaged flows.
    """
    return SolverConfig(gamma=ORACLE_GAMMA, eps=0.1 * total, max_iter=ORACLE_STEPS,
                        stop_on_gap=False, inner_tol_min=1e-12)


def selfcheck(out=sys.stdout):
    """Solve the built-in small instances and compare with brute force."""
    from . import fixtures

    ok = True
    cases = [("single link", fixtures.single_link()),
             ("two parallel links", fixtures.parallel_links()),
             ("triangle, 4 OD pairs", fixtures.triangle()),
             ("2x2 with hub", fixtures.two_by_two())]
    for name, (net, demand) in cases:
        res = solve_two_stage(net, demand, oracle_config(demand.total))
        d_bf, f_bf = brute_force_oracle(net, demand, ORACLE_GAMMA)
        d_err = float(np.max(np.abs(res.demand_vehicles - d_bf)))
        f_err = float(np.max(np.abs(res.flows - f_bf)))
        tol = 1e-3 * demand.total
        passed = d_err <= tol and f_err <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: |d - d_bf| = {d_err:.2e}, "
              f"|f - f_bf| = {f_err:.2e} (tol {tol:.2e})", file=out)

    net, demand = fixtures.parallel_links()
    res = solve_fixed_demand(net, demand, oracle_config(demand.total))
    _, f_bf = brute_force_oracle(net, demand, ORACLE_GAMMA, trips=demand.reference)
    err = float(np.max(np.abs(res.flows - f_bf)))
    tol = 1e-3 * demand.total
    passed = err <= tol
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'}  fixed-demand parallel links: |f - f_bf| = "
          f"{err:.2e} (tol {tol:.2e})", file=out)
    return 0 if ok else 3


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "selfcheck":
            return selfcheck()
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return _solve(args)
    except UsageError as exc:
        print(f"twostage: error: {exc}", file=sys.stderr)
        return INPUT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
