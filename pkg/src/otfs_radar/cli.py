"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_spec, parse_document, preset_document, with_overrides
from .errors import ConfigError, OtfsRadarError
from .experiments import lemma_check
from .grid import SystemConfig
from .harness import run_scenario, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3

log = logging.getLogger("otfs_radar")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", type=Path, help="YAML experiment file (defaults built in)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
    p.add_argument("--seed", type=int, dest="base_seed", help="base seed; trial i uses seed + i")
    p.add_argument("-o", "--output", type=Path, dest="output_dir", help="output directory")
    p.add_argument("-j", "--workers", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otfs-radar", description="OTFS matched-filter radar simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one scene and write profiles/metrics")
    _common(p)
    p.add_argument("--system", choices=("otfs", "ofdm", "both"))

    p = sub.add_parser("compare", help="OTFS and OFDM side by side on one scene")
    _common(p)

    p = sub.add_parser("sweep", help="velocity (RMSE) or SNR (PSLR / image SNR) sweep")
    _common(p)
    p.add_argument("--preset", choices=("velocity", "snr"), default="velocity", help="built-in sweep when no --config")

    p = sub.add_parser("lemma-check", help="check gain-matrix diagonal and off-diagonal statistics")
    p.add_argument("--M", type=int, default=4, dest="m")
    p.add_argument("--N", type=int, default=4, dest="n")
    p.add_argument("--symbol-power", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=10)
    return parser


def _spec(args, preset: str = "scenario"):
    spec = load_spec(args.config) if args.config else parse_document(preset_document(preset))
    overrides = dict(
        trials=args.trials,
        base_seed=args.base_seed,
        output_dir=args.output_dir,
        workers=args.workers,
        system=getattr(args, "system", None),
    )
    for key in ("trials", "workers"):
        if overrides[key] is not None and overrides[key] < 1:
            raise ConfigError(f"--{key} must be >= 1")
    return with_overrides(spec, **overrides)


def _print_summary(record) -> None:
    print(f"{'system':<6} {'parameter':>10} {'trials':>6} {'v_rmse[m/s]':>12} {'r_rmse[m]':>10} {'PSLR[dB]':>9} {'imgSNR[dB]':>11}")
    for p in record.aggregate:
        print(
            f"{p['system']:<6} {p['parameter']:>10.3f} {p['trials']:>6d} {p['velocity_rmse_m_s']:>12.3f} "
            f"{p['range_rmse_m']:>10.3f} {p['mean_pslr_db']:>9.2f} {p['mean_image_snr_db']:>11.2f}"
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("simulate", "compare"):
            spec = _spec(args)
            if args.command == "compare":
                spec = with_overrides(spec, system="both")
            record = run_scenario(spec)
            _print_summary(record)
            print(f"outputs written to {spec.output_dir}")
        elif args.command == "sweep":
            spec = _spec(args, args.preset)
            record = run_sweep(spec)
            _print_summary(record)
            print(f"outputs written to {spec.output_dir}")
        elif args.command == "lemma-check":
            if args.trials < 1000:
                raise ConfigError("--trials must be at least 1000")
            cfg = SystemConfig(num_delay_bins=args.m, num_doppler_bins=args.n, symbol_power=args.symbol_power, cp_length_samples=0)
            report = lemma_check(cfg, args.trials, args.seed, args.pairs)
            for line in report.lines():
                print(line)
            return EXIT_OK if report.passed else EXIT_CHECK_FAILED
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OtfsRadarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
