"""Command line interface.

    gmdet bound    --config FILE [--snr-db X] [--rho-mode MODE] --out FILE
    gmdet simulate --config FILE --snr-db X --bits N --seed S --out FILE
    gmdet sweep    --config FILE --out FILE [--workers K]

All commands write the shared CSV schema (missing values as empty fields):

    snr_db,ber_sim,ci_low,ci_high,errors,bits,ber_bound,spectral_radius

Exit codes: 0 success, 2 configuration error, 3 bound divergence in
``bound`` mode.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .channel import ConfigurationError
from .config import load_config
from .harness import BerCurve, bound_curve, run_sweep, simulate_single

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmdet",
        description="Viterbi detection and BER bounds for ISI channels "
                    "with signal-dependent Gauss-Markov noise")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="evaluate the analytic BER bound")
    p_bound.add_argument("--config", required=True)
    p_bound.add_argument("--snr-db", type=float, default=None,
                         help="single SNR point (default: config grid)")
    p_bound.add_argument("--rho-mode", choices=("optimized", "half"),
                         default=None, help="override the config rho mode")
    p_bound.add_argument("--out", required=True)

    p_sim = sub.add_parser("simulate", help="Monte Carlo BER at one SNR")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--snr-db", type=float, required=True)
    p_sim.add_argument("--bits", type=int, required=True,
                       help="payload bit budget")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="bound plus simulation sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None,
                         help="override the config worker count")
    return parser


def _write(curve: BerCurve, path: str) -> None:
    curve.write_csv(path)


def _cmd_bound(args) -> int:
    cfg = load_config(args.config)
    snrs = None if args.snr_db is None else (args.snr_db,)
    curve, diverged = bound_curve(cfg, snr_points=snrs, rho_mode=args.rho_mode)
    _write(curve, args.out)
    if diverged:
        print("bound diverges at one or more SNR points", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    point = simulate_single(cfg, args.snr_db, args.bits, args.seed)
    _write(BerCurve(points=(point,)), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigurationError("workers must be positive")
        cfg = replace(cfg, workers=args.workers)
    curve = run_sweep(cfg, progress=True)
    _write(curve, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"bound": _cmd_bound, "simulate": _cmd_simulate,
                "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
