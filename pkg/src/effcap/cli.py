"""``effcap`` command line: figure sweeps to CSV and Monte Carlo validation.

Exit codes: 0 success, 2 invalid input, 3 validation failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from .errors import EffcapError
from .montecarlo import SimConfig
from .report import (RATE, THETA, SweepSpec, csv_text, emit_csv, load_config,
                     run_sweep, run_validation, spec_from_config)

EXIT_OK, EXIT_INVALID, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4


def _channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--lambda", dest="lam", type=float, help="P(stay OFF)")
    p.add_argument("--mu", type=float, help="P(stay ON)")
    p.add_argument("--rate", type=float, help="ON-state rate in bits/slot")
    p.add_argument("--points", type=int)
    k = p.add_mutually_exclusive_group()
    k.add_argument("--k", type=int, help="block length for the CLT approximation")
    k.add_argument("--k-infinite", action="store_true", help="use the k -> infinity block variance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="effcap",
        description="Exact vs CLT-approximate effective capacity of ON-OFF channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="sweep the QoS exponent theta")
    _channel_args(curve)
    curve.add_argument("--theta-start", type=float)
    curve.add_argument("--theta-stop", type=float)
    curve.add_argument("--out", help="CSV destination (default: stdout)")

    rate = sub.add_parser("rate-sweep", help="sweep the ON-state rate r at fixed theta")
    _channel_args(rate)
    rate.add_argument("--theta", type=float, help="fixed QoS exponent")
    rate.add_argument("--rate-start", type=float)
    rate.add_argument("--rate-stop", type=float)
    rate.add_argument("--out", help="CSV destination (default: stdout)")

    val = sub.add_parser("validate", help="eigenvalue and Monte Carlo cross-checks")
    _channel_args(val)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--paths", type=int, default=10_000)
    val.add_argument("--horizon", type=int, default=200)
    val.add_argument("--queue-slots", type=int, default=10_000_000)
    val.add_argument("--workers", type=int, default=None, help="worker threads (results do not depend on it)")
    return parser


def _spec(args, variable: str) -> SweepSpec:
    values = load_config(args.config) if args.config else {}
    overrides = {"lambda": args.lam, "mu": args.mu, "rate": args.rate, "points": args.points}
    if args.k is not None:
        overrides["k"] = args.k
    if args.k_infinite:
        overrides["k"] = math.inf
    if variable == THETA:
        overrides.update(theta_start=getattr(args, "theta_start", None),
                         theta_stop=getattr(args, "theta_stop", None))
    else:
        overrides.update(fixed_theta=getattr(args, "theta", None),
                         rate_start=getattr(args, "rate_start", None),
                         rate_stop=getattr(args, "rate_stop", None))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return spec_from_config(values, variable)


def _write(rows, out) -> None:
    if out:
        emit_csv(rows, out)
    else:
        sys.stdout.write(csv_text(rows))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "curve":
            spec = _spec(args, THETA)
            rows = run_sweep(spec)
        elif args.command == "rate-sweep":
            spec = _spec(args, RATE)
            rows = run_sweep(spec)
        else:
            spec = _spec(args, THETA)
            cfg = SimConfig(horizon_t=args.horizon, num_paths=args.paths, seed=args.seed)
            report = run_validation(spec, cfg, workers=args.workers, queue_slots=args.queue_slots)
            sys.stdout.write(report.text())
            return EXIT_OK if report.passed else EXIT_VALIDATION
    except (EffcapError, ValueError) as exc:
        print(f"effcap: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"effcap: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        _write(rows, args.out)
    except OSError as exc:
        print(f"effcap: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
