"""Command-line interface.

Subcommands:
    mse-curve   learning curves (held-out MSE per training cycle)
    ber-curve   bit error rate versus nominal SNR
    verify      randomized algebraic property suites
    selftest    small exact-oracle smoke checks

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
Given a fixed ``--seed`` every subcommand is byte-reproducible.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .airlink import SystemConfig, snr_to_noise_variance
from .errors import ConfigError, DomainError
from .ga import GaConfig, SELECTION_STRATEGIES
from .harness import ExperimentConfig, emit_curves, run_ber_vs_snr, run_mse_vs_cycles
from .verification import selftest_suite, verification_suites

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return raw


def _build_dataclass(cls, values: dict, context: str):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown {context} field {key!r}")
    return cls(**values)


def build_experiment_config(file_values: dict, overrides: dict) -> ExperimentConfig:
    """Merge config-file values with command-line overrides.

    The file mirrors the experiment configuration field names, with
    ``system`` and ``ga`` as nested objects; command-line flags win.
    """
    values = dict(file_values)
    system_values = dict(values.pop("system", {}))
    ga_values = dict(values.pop("ga", {}))

    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith("system."):
            system_values[key.split(".", 1)[1]] = value
        elif key.startswith("ga."):
            ga_values[key.split(".", 1)[1]] = value
        else:
            values[key] = value

    system = _build_dataclass(SystemConfig, system_values, "system")
    ga = _build_dataclass(GaConfig, ga_values, "ga")
    if "fast_lms_mu" in values:
        values["fast_lms_mu"] = tuple(values["fast_lms_mu"])
    if "snr_grid_db" in values:
        values["snr_grid_db"] = tuple(values["snr_grid_db"])
    return _build_dataclass(ExperimentConfig, {**values, "system": system, "ga": ga}, "experiment")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file mirroring the experiment fields")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--trials", type=int, help="number of independent trials")
    parser.add_argument("--cycles", type=int, help="training cycles per trial")
    parser.add_argument(
        "--selection", choices=SELECTION_STRATEGIES, help="parent selection strategy"
    )
    parser.add_argument("--crossover-ratio", type=float, help="fraction of genes from parent 1")
    parser.add_argument(
        "--unit-chip-codes",
        action="store_true",
        help="keep unit-magnitude chips instead of unit-energy codes",
    )
    parser.add_argument("--no-figure", action="store_true", help="skip PNG rendering")


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mccdma-ga",
        description="Receiver laboratory for uplink MC-CDMA with two-antenna block coding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mse = sub.add_parser("mse-curve", help="held-out MSE per training cycle")
    _add_common_flags(mse)
    mse.add_argument("--snr-db", type=float, help="operating SNR of the learning-curve run")

    ber = sub.add_parser("ber-curve", help="bit error rate versus SNR")
    _add_common_flags(ber)
    ber.add_argument("--snr-min", type=float, help="lowest SNR in dB")
    ber.add_argument("--snr-max", type=float, help="highest SNR in dB")
    ber.add_argument("--snr-step", type=float, help="SNR grid step in dB")
    ber.add_argument("--payload-blocks", type=int, help="payload blocks per grid point")

    verify = sub.add_parser("verify", help="run the algebraic property suites")
    verify.add_argument("--seed", type=int, default=0)

    selftest = sub.add_parser("selftest", help="run the small exact-oracle suite")
    selftest.add_argument("--seed", type=int, default=0)

    return parser


def _experiment_config(args, default_trials: int) -> ExperimentConfig:
    file_values = _load_config_file(args.config) if args.config else {}
    overrides = {
        "system.master_seed": args.seed,
        "cycles": args.cycles,
        "ga.selection": args.selection,
        "ga.crossover_ratio": args.crossover_ratio,
    }
    if args.trials is not None:
        overrides["trials"] = args.trials
    elif "trials" not in file_values:
        overrides["trials"] = default_trials
    if getattr(args, "snr_db", None) is not None:
        overrides["system.noise_variance"] = snr_to_noise_variance(args.snr_db)
    if getattr(args, "payload_blocks", None) is not None:
        overrides["payload_blocks"] = args.payload_blocks
    if args.unit_chip_codes:
        overrides["unit_energy_codes"] = False
    snr_min = getattr(args, "snr_min", None)
    snr_max = getattr(args, "snr_max", None)
    snr_step = getattr(args, "snr_step", None)
    if snr_min is not None or snr_max is not None or snr_step is not None:
        lo = snr_min if snr_min is not None else 0.0
        hi = snr_max if snr_max is not None else 20.0
        step = snr_step if snr_step is not None else 2.0
        if step <= 0 or hi < lo:
            raise ConfigError("SNR grid requires snr_min <= snr_max and snr_step > 0")
        grid = []
        value = lo
        while value <= hi + 1e-9:
            grid.append(round(value, 9))
            value += step
        overrides["snr_grid_db"] = tuple(grid)

    return build_experiment_config(file_values, overrides)


def _run_curve(args, runner, default_out: str, default_trials: int) -> int:
    cfg = _experiment_config(args, default_trials)
    data = runner(cfg)
    out = args.out or cfg.output or default_out
    emit_curves(data, out)
    print(f"wrote {out} and {out}.meta")
    if not args.no_figure:
        from .plotting import figure_path, render_curves

        png = figure_path(out)
        render_curves(data, png)
        print(f"wrote {png}")
    return EXIT_OK


def _run_checks(results, label: str) -> int:
    for result in results:
        print(result.line())
    passed = sum(1 for r in results if r.passed)
    print(f"{label}: {passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    try:
        if args.command == "mse-curve":
            return _run_curve(args, run_mse_vs_cycles, "mse_curve.csv", default_trials=50)
        if args.command == "ber-curve":
            return _run_curve(args, run_ber_vs_snr, "ber_curve.csv", default_trials=5)
        if args.command == "verify":
            return _run_checks(verification_suites(args.seed), "verify")
        if args.command == "selftest":
            return _run_checks(selftest_suite(args.seed), "selftest")
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
