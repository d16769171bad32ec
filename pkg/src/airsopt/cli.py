"""Command line entry point: ``airsopt <command> [options]``.

Commands write CSV to ``--out`` (stdout by default). Exit codes: 0
success, 1 configuration or usage error, 2 solver failure, 3 when
``verify`` finds a failing check.
"""

from __future__ import annotations

import argparse
import json
import sys

from airsopt import config as config_mod
from airsopt.beamforming import NoServiceableUserError
from airsopt.config import ConfigError, ExperimentConfig
from airsopt.driver import AoError, SchemeError
from airsopt.report import (CURVE_COLUMNS, FIELD_COLUMNS, fmt, results_csv, solution_record,
                            write_json, write_table)
from airsopt.sdp import SdpError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECKS = 0, 1, 2, 3


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration error code, not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment config")
    common.add_argument("--seed", type=_seed, help="override the config seed")
    common.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    common.add_argument("--threads", type=int, default=1, help="concurrent sweep points")
    common.add_argument("--scheme", help="comma-separated subset of schemes")
    common.add_argument("--timing", action="store_true",
                        help="fill runtime_ms (makes output run-dependent)")

    parser = _Parser(prog="airsopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single-sweep-d", parents=[common], help="single-user SNR versus distance")
    p.add_argument("--distances", type=_float_list, help="D values in m (default from config)")
    p.add_argument("--altitude", type=float, help="H in m (default from config)")

    p = sub.add_parser("single-sweep-h", parents=[common], help="single-user optimum versus altitude")
    p.add_argument("--altitudes", type=_float_list, help="H values in m")
    p.add_argument("--distance", type=float, help="D in m")
    p.add_argument("--curve", metavar="PATH", help="also write optimal tilt versus qx samples")

    p = sub.add_parser("multi-optimize", parents=[common], help="multi-user schemes versus altitude")
    p.add_argument("--altitudes", type=_float_list, help="H values in m")
    p.add_argument("--field-map", metavar="PATH",
                   help="write SNR/gain maps over a position grid for the AO w/ GS solution")
    p.add_argument("--record", metavar="PATH", help="write full solution records as JSON")

    p = sub.add_parser("verify", parents=[common], help="run the self-check suite")
    p.add_argument("--full", action="store_true", help="include the long multi-user checks")
    p.add_argument("--check", action="append", help="run only the named check (repeatable)")

    p = sub.add_parser("config", parents=[common], help="print the effective configuration")
    p.add_argument("--dump", action="store_true", help="print as TOML (default)")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = config_mod.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.threads < 1:
        raise ConfigError("must be >= 1", "--threads")
    return cfg


def _schemes(args):
    return [s.strip() for s in args.scheme.split(",") if s.strip()] if args.scheme else None


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    from airsopt import experiments

    cfg = _load(args)
    if args.command == "config":
        _emit(config_mod.dumps(cfg), args.out)
        return EXIT_OK
    if args.command == "single-sweep-d":
        rows = experiments.single_sweep_d(cfg, args.distances, args.altitude, _schemes(args),
                                          args.threads, args.timing)
        _emit(results_csv(rows), args.out)
        return EXIT_OK
    if args.command == "single-sweep-h":
        rows = experiments.single_sweep_h(cfg, args.altitudes, args.distance, _schemes(args),
                                          args.threads, args.timing)
        _emit(results_csv(rows), args.out)
        if args.curve:
            curve = experiments.psi_star_curve(cfg, args.altitudes, args.distance)
            _emit(write_table([[fmt(c) for c in r] for r in curve], CURVE_COLUMNS, "psi_star_curve"),
                  args.curve)
        return EXIT_OK
    if args.command == "multi-optimize":
        rows, solutions = experiments.multi_optimize(cfg, args.altitudes, _schemes(args),
                                                     args.threads, args.timing)
        _emit(results_csv(rows), args.out)
        if args.field_map:
            maps = []
            for sid, h, sol in solutions:
                if sol.scheme == "ao_gs":
                    maps.extend(experiments.field_map(cfg, sid, h, sol))
            _emit(write_table([[fmt(c) for c in r] for r in maps], FIELD_COLUMNS, "field_map"),
                  args.field_map)
        if args.record:
            with open(args.record, "w", encoding="utf-8", newline="\n") as fh:
                write_json([solution_record(sid, sol) for sid, _, sol in solutions], fh)
        return EXIT_OK
    if args.command == "verify":
        from airsopt.verify import CHECK_NAMES, run_checks

        unknown = sorted(set(args.check or ()) - set(CHECK_NAMES))
        if unknown:
            raise ConfigError(f"unknown check(s) {', '.join(unknown)}; choose from "
                              f"{', '.join(CHECK_NAMES)}", "--check")
        results = run_checks(cfg, args.full, args.check)
        lines = [json.dumps(r.as_dict(), sort_keys=True) for r in results]
        failed = [r.name for r in results if not r.passed]
        lines.append(json.dumps({"summary": True, "passed": len(results) - len(failed),
                                 "failed": len(failed), "failed_checks": failed}, sort_keys=True))
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_CHECKS if failed else EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, SchemeError) as exc:
        print(f"airsopt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SdpError, AoError, NoServiceableUserError) as exc:
        print(f"airsopt: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
