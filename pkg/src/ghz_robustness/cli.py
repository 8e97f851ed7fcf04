"""Command-line front end: maxbell, pmax, sweep and verify.

Usage:
    ghz-robustness maxbell --n 3 --channel none
    ghz-robustness pmax --n 2 --channel depolarizing [--tol 1e-4]
    ghz-robustness sweep --n 2 --channel dephasing --p-min 0 --p-max 1 --steps 11 --out f.csv
    ghz-robustness verify [--n-max 5] [--trials 50]

Exit codes: 0 success, 1 non-convergence / deviation breach / write failure,
2 invalid flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bell_operator import quantum_bound
from .channels_states import ChannelKind, NoiseSpec
from .config import (
    DEFAULT_SEED,
    DENSE_QUBIT_CAP,
    VALID_LOG_LEVELS,
    OptimizerConfig,
    ThresholdConfig,
    get_settings,
)
from .logging import setup_logging
from .metrics import write_metrics
from .optimizer import OptimizationReport, max_bell
from .schema_validation import QUANTUM_BOUND_SLACK, SWEEP_COLUMNS, validate_sweep_frame
from .threshold import (
    MIN_TOLERANCE,
    ProbeConvergenceError,
    ThresholdOutcome,
    ThresholdResult,
    numeric_pmax,
)
from .tracing import setup_tracing, shutdown_tracing
from .types import MaxBellPayload, SettingsPayload, ThresholdPayload
from .verification import CORRELATION_TOL, MATRIX_TOL, VERIFY_QUBIT_CAP, run_verification

logger = structlog.get_logger(__name__)

CHANNEL_CHOICES = [kind.value for kind in ChannelKind]
VALUE_FORMAT = "{:.9f}"
ANGLE_FORMAT = "{:.9g}"

OUTCOME_LABELS = {
    ThresholdOutcome.VIOLATION_PERSISTS: "violation persists up to the cap",
    ThresholdOutcome.BOUND_ATTAINED: "local bound attained, not exceeded",
    ThresholdOutcome.BELOW_BOUND: "below the local bound",
}


class SweepRow(BaseModel):
    """One row of a sweep CSV."""

    model_config = ConfigDict(frozen=True)

    channel: ChannelKind
    n: int = Field(ge=2)
    p: float = Field(ge=0.0, le=1.0)
    max_bell: float = Field(ge=0.0)

    @model_validator(mode="after")
    def validate_bound(self) -> SweepRow:
        if self.max_bell > quantum_bound(self.n) + QUANTUM_BOUND_SLACK:
            raise ValueError(
                f"max_bell {self.max_bell} exceeds the quantum bound for n={self.n}"
            )
        return self


# -- argparse types --


def _party_count(value: str) -> int:
    n = int(value)
    if not 2 <= n <= DENSE_QUBIT_CAP:
        raise argparse.ArgumentTypeError(f"must be in [2, {DENSE_QUBIT_CAP}], got {n}")
    return n


def _verify_party_count(value: str) -> int:
    n = int(value)
    if not 2 <= n <= VERIFY_QUBIT_CAP:
        raise argparse.ArgumentTypeError(f"must be in [2, {VERIFY_QUBIT_CAP}], got {n}")
    return n


def _probability(value: str) -> float:
    p = float(value)
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return p


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


def _non_negative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {number}")
    return number


def _tolerance(value: str) -> float:
    tol = float(value)
    if not tol >= MIN_TOLERANCE:
        raise argparse.ArgumentTypeError(f"must be at least {MIN_TOLERANCE:g}, got {value}")
    return tol


def _scan_step(value: str) -> float:
    step = float(value)
    if not 0.0 < step <= 0.5:
        raise argparse.ArgumentTypeError(f"must be in (0, 0.5], got {value}")
    return step


def _optimizer_config(args: argparse.Namespace) -> OptimizerConfig:
    return OptimizerConfig(starts=args.starts, seed=args.seed)


def _fmt(value: float | None) -> str:
    return "-" if value is None else VALUE_FORMAT.format(value)


def _error(message: str) -> None:
    print(f"Error: {message}", file=sys.stderr)


# -- maxbell --


def _settings_payload(report: OptimizationReport) -> list[SettingsPayload]:
    return [
        {
            "theta": plain.theta,
            "theta_prime": primed.theta,
            "phi": plain.phi,
            "phi_prime": primed.phi,
        }
        for plain, primed in report.best_settings.entries
    ]


def maxbell_payload(report: OptimizationReport) -> MaxBellPayload:
    """JSON object of one optimization."""
    return {
        "n": report.n,
        "channel": report.channel,
        "p": report.p,
        "max_bell": report.best_value,
        "settings": _settings_payload(report),
        "converged": report.converged,
        "seed": report.seed,
    }


def _print_maxbell(report: OptimizationReport) -> None:
    print(f"n:          {report.n}")
    print(f"channel:    {report.channel}")
    print(f"p:          {_fmt(report.p)}")
    print(f"best value: {_fmt(report.best_value)}")
    print(f"converged:  {str(report.converged).lower()}")
    print(f"seed:       {report.seed}")
    print("settings (radians):")
    for party, (plain, primed) in enumerate(report.best_settings.entries, start=1):
        angles = ", ".join(
            f"{name}={ANGLE_FORMAT.format(value)}"
            for name, value in (
                ("theta", plain.theta),
                ("phi", plain.phi),
                ("theta'", primed.theta),
                ("phi'", primed.phi),
            )
        )
        print(f"  party {party}: {angles}")


def cmd_maxbell(args: argparse.Namespace) -> int:
    """Optimize the Bell value for one (n, channel, p)."""
    noise = None if args.channel == "none" else NoiseSpec(kind=args.channel, p=args.p)
    report = max_bell(args.n, noise, _optimizer_config(args))

    if args.format_json:
        print(json.dumps(maxbell_payload(report)))
    else:
        _print_maxbell(report)

    if not report.converged:
        _error(f"optimizer did not converge in {report.starts_used} starts")
        return 1
    return 0


# -- pmax --


def threshold_payload(result: ThresholdResult) -> ThresholdPayload:
    """JSON object of one threshold search."""
    return {
        "n": result.n,
        "channel": result.channel.value,
        "p_max": result.p_max,
        "bracket_width": result.bracket_width,
        "analytic_p_max": result.analytic_reference,
        "difference": result.difference,
        "cap": result.cap,
        "outcome": result.outcome.value,
        "bracket_verified": result.bracket_verified,
    }


def _print_threshold(result: ThresholdResult) -> None:
    print(f"n:          {result.n}")
    print(f"channel:    {result.channel.value}")
    if result.p_max is None:
        print(f"numeric:    no threshold found below cap {result.cap:g}")
    else:
        print(f"numeric:    {_fmt(result.p_max)} +/- {result.bracket_width:.1e}")
    if result.analytic_reference is None:
        print("analytic:   not available")
    else:
        print(f"analytic:   {_fmt(result.analytic_reference)}")
    if result.difference is not None:
        print(f"difference: {result.difference:+.9f}")
    print(f"outcome:    {OUTCOME_LABELS[result.outcome]}")


def cmd_pmax(args: argparse.Namespace) -> int:
    """Locate the threshold and compare with the closed form."""
    try:
        result = numeric_pmax(
            args.n,
            ChannelKind(args.channel),
            tolerance=args.tol,
            optimizer_config=_optimizer_config(args),
            threshold_config=ThresholdConfig(scan_step=args.scan_step),
        )
    except ProbeConvergenceError as exc:
        _error(str(exc))
        return 1

    if args.format_json:
        print(json.dumps(threshold_payload(result)))
    else:
        _print_threshold(result)
    return 0


# -- sweep --


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Validated table with columns channel, n, p, max_bell."""
    frame = pd.DataFrame(
        [{**row.model_dump(), "channel": row.channel.value} for row in rows],
        columns=SWEEP_COLUMNS,
    )
    return validate_sweep_frame(frame)


def cmd_sweep(args: argparse.Namespace) -> int:
    """Max Bell value on an inclusive, evenly spaced p grid, written as CSV."""
    kind = ChannelKind(args.channel)
    config = _optimizer_config(args)
    rows: list[SweepRow] = []
    for p in np.linspace(args.p_min, args.p_max, args.steps):
        report = max_bell(args.n, NoiseSpec(kind=kind, p=float(p)), config)
        if not report.converged:
            _error(f"optimizer did not converge at p={float(p):.9f}")
            return 1
        rows.append(SweepRow(channel=kind, n=args.n, p=float(p), max_bell=report.best_value))

    frame = sweep_frame(rows)
    try:
        frame.to_csv(
            args.out,
            index=False,
            float_format="%.9f",
            lineterminator="\n",
            encoding="utf-8",
        )
    except OSError as exc:
        _error(f"cannot write {args.out}: {exc}")
        return 1

    logger.info("sweep_written", path=str(args.out), rows=len(rows), channel=kind.value, n=args.n)
    print(f"Wrote {len(rows)} rows to {args.out}")
    return 0


# -- verify --


def cmd_verify(args: argparse.Namespace) -> int:
    """Closed-form versus dense-path equivalence suite."""
    summary = run_verification(n_max=args.n_max, trials=args.trials, seed=args.seed)

    print(f"correlation checks:        {summary.correlation_checks}")
    print(
        f"max correlation deviation: {summary.max_correlation_deviation:.3e} "
        f"(limit {CORRELATION_TOL:g})"
    )
    print(f"matrix checks:             {summary.matrix_checks}")
    print(f"max matrix deviation:      {summary.max_matrix_deviation:.3e} (limit {MATRIX_TOL:g})")

    if summary.passed:
        print("PASS")
        return 0

    for breach in summary.breaches:
        print(
            f"  breach: check={breach.check} n={breach.n} channel={breach.channel} "
            f"p={_fmt(breach.p)} settings_seed={breach.settings_seed} "
            f"deviation={breach.deviation:.3e}"
        )
    print("FAIL")
    return 1


# -- parser --


def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--starts",
        type=_positive_int,
        default=OptimizerConfig().starts,
        help="Random see-saw starts (default: 64)",
    )
    parser.add_argument(
        "--seed",
        type=_non_negative_int,
        default=DEFAULT_SEED,
        help=f"Seed of every start (default: {DEFAULT_SEED})",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="ghz-robustness",
        description="Mermin-Klyshko violation of decohered GHZ states",
        epilog="Values and p are printed with 9 decimals, angles with 9 significant digits.",
    )
    parser.add_argument(
        "--log-level",
        choices=sorted(VALID_LOG_LEVELS),
        help="Override GHZ_LOG_LEVEL",
    )
    parser.add_argument(
        "--log-format",
        choices=["json", "console"],
        help="Override GHZ_LOG_FORMAT",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    maxbell_parser = subparsers.add_parser("maxbell", help="Maximize the Bell value")
    maxbell_parser.add_argument("--n", type=_party_count, required=True, help="Party count")
    maxbell_parser.add_argument(
        "--channel",
        choices=[*CHANNEL_CHOICES, "none"],
        required=True,
        help="Decoherence channel, or none for the pure state",
    )
    maxbell_parser.add_argument(
        "--p", type=_probability, help="Degree of decoherence (required unless channel none)"
    )
    _add_optimizer_flags(maxbell_parser)
    maxbell_parser.add_argument(
        "--json", action="store_true", dest="format_json", help="Output as JSON"
    )

    pmax_parser = subparsers.add_parser("pmax", help="Locate the violation threshold")
    pmax_parser.add_argument("--n", type=_party_count, required=True, help="Party count")
    pmax_parser.add_argument(
        "--channel", choices=CHANNEL_CHOICES, required=True, help="Decoherence channel"
    )
    pmax_parser.add_argument(
        "--tol", type=_tolerance, default=1e-4, help="Threshold tolerance (default: 1e-4)"
    )
    pmax_parser.add_argument(
        "--scan-step",
        type=_scan_step,
        default=ThresholdConfig().scan_step,
        help="Coarse scan step (default: 0.01)",
    )
    _add_optimizer_flags(pmax_parser)
    pmax_parser.add_argument(
        "--json", action="store_true", dest="format_json", help="Output as JSON"
    )

    sweep_parser = subparsers.add_parser("sweep", help="Write max Bell value versus p as CSV")
    sweep_parser.add_argument("--n", type=_party_count, required=True, help="Party count")
    sweep_parser.add_argument(
        "--channel", choices=CHANNEL_CHOICES, required=True, help="Decoherence channel"
    )
    sweep_parser.add_argument("--p-min", type=_probability, required=True, help="First p")
    sweep_parser.add_argument("--p-max", type=_probability, required=True, help="Last p")
    sweep_parser.add_argument("--steps", type=int, required=True, help="Grid points, >= 2")
    sweep_parser.add_argument(
        "--out", type=Path, required=True, help="CSV output path; floats with 9 decimals"
    )
    _add_optimizer_flags(sweep_parser)

    verify_parser = subparsers.add_parser("verify", help="Run the path-equivalence suite")
    verify_parser.add_argument(
        "--n-max",
        type=_verify_party_count,
        default=5,
        help=f"Largest party count, at most {VERIFY_QUBIT_CAP} (default: 5)",
    )
    verify_parser.add_argument(
        "--trials", type=_positive_int, default=50, help="Random tables per case (default: 50)"
    )
    verify_parser.add_argument(
        "--seed", type=_non_negative_int, default=DEFAULT_SEED, help="Root seed"
    )

    return parser


def _check_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Cross-flag checks argparse cannot express; exits with status 2."""
    if args.command == "maxbell":
        if args.channel == "none" and args.p is not None:
            parser.error("--p is not allowed with --channel none")
        if args.channel != "none" and args.p is None:
            parser.error(f"--p is required with --channel {args.channel}")
    elif args.command == "sweep":
        if args.p_min > args.p_max:
            parser.error(f"--p-min ({args.p_min}) must not exceed --p-max ({args.p_max})")
        if args.steps < 2:
            parser.error(f"--steps must be at least 2, got {args.steps}")


COMMANDS = {
    "maxbell": cmd_maxbell,
    "pmax": cmd_pmax,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse flags, configure the ambient stack and dispatch.

    Returns:
        Process exit status.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_args(parser, args)

    settings = get_settings()
    overrides = {
        key: value
        for key, value in (("log_level", args.log_level), ("log_format", args.log_format))
        if value is not None
    }
    app_settings = settings.app.model_copy(update=overrides)
    setup_logging(app_settings)
    setup_tracing(settings.tracing)

    try:
        return COMMANDS[args.command](args)
    finally:
        shutdown_tracing()
        if app_settings.metrics_textfile:
            try:
                write_metrics(app_settings.metrics_textfile)
            except OSError as exc:
                logger.error(
                    "metrics_write_failed", path=app_settings.metrics_textfile, error=str(exc)
                )


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())
