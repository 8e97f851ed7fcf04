"""Largest degree of decoherence that still violates the MK inequality.

``numeric_pmax`` scans p upward in coarse steps to isolate the first probe
whose optimized Bell value no longer exceeds the local bound, then bisects
that bracket. Dissipation returns to exactly 1 at p = 1, so bisecting [0, 1]
directly would be ill-posed; the scan finds the first crossing instead.

A probe violates the inequality only when its value exceeds 1 by more than
the value resolution. Past the last violating probe the value either drops
below 1 or settles on it: for four-qubit dephasing a deterministic local
strategy attains the bound for every p above the crossing, and the result
reports that tie as ``BOUND_ATTAINED`` rather than as surviving nonlocality.
"""

from __future__ import annotations

import math
from enum import Enum

import structlog
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, Field

from .bell_operator import LOCAL_BOUND
from .channels_states import ChannelKind, NoiseSpec
from .config import DENSE_QUBIT_CAP, OptimizerConfig, ThresholdConfig
from .metrics import THRESHOLD_PROBES
from .optimizer import OptimizationReport, max_bell

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

MIN_TOLERANCE = 1e-6


class ProbeConvergenceError(RuntimeError):
    """Raised when the optimizer fails to converge at a probe."""

    def __init__(self, p: float, report: OptimizationReport) -> None:
        self.p = p
        self.report = report
        super().__init__(
            f"Optimizer did not converge at p={p:.9f} "
            f"(n={report.n}, channel={report.channel}, starts={report.starts_used})"
        )


class ThresholdOutcome(str, Enum):
    """What the optimized Bell value does past the last violating probe."""

    VIOLATION_PERSISTS = "violation_persists"
    BOUND_ATTAINED = "bound_attained"
    BELOW_BOUND = "below_bound"


class ThresholdResult(BaseModel):
    """Located threshold, or the cap below which none was found."""

    model_config = ConfigDict(frozen=True)

    n: int
    channel: ChannelKind
    p_max: float | None = Field(description="Midpoint of the final bracket, None if not found")
    bracket_width: float | None = Field(description="Half-width of the final bracket")
    analytic_reference: float | None = Field(description="Closed-form threshold if known")
    cap: float = Field(description="Largest p probed")
    outcome: ThresholdOutcome = Field(description="Behaviour above the threshold")
    bracket_verified: bool = Field(
        default=False,
        description="Probe values confirm violation at the lower and none at the upper end",
    )
    probes: int = Field(default=0, description="Optimizer runs spent")

    @property
    def found(self) -> bool:
        return self.p_max is not None

    @property
    def difference(self) -> float | None:
        """numeric - analytic, when both exist."""
        if self.p_max is None or self.analytic_reference is None:
            return None
        return self.p_max - self.analytic_reference


def analytic_pmax(n: int, kind: ChannelKind) -> float | None:
    """Closed-form threshold; None for even-n dephasing.

    depolarizing (any n), dephasing (odd n):  1 - 2^((1/n - 1)/2)
    dissipation:                              1 - 2^(1/n - 1)

    Even-n dephasing has no closed form here. Two qubits keep violating up to
    the scan cap; four qubits stop exceeding 1 where the equatorial value
    2^(3/2) (1-p)^4 reaches it and attain the bound beyond.
    """
    if n < 2:
        raise ValueError(f"Party count must be at least 2, got {n}")
    match kind:
        case ChannelKind.DEPOLARIZING:
            return 1.0 - 2.0 ** ((1.0 / n - 1.0) / 2)
        case ChannelKind.DEPHASING:
            if n % 2 == 0:
                return None
            return 1.0 - 2.0 ** ((1.0 / n - 1.0) / 2)
        case ChannelKind.DISSIPATION:
            return 1.0 - 2.0 ** (1.0 / n - 1.0)
    raise ValueError(f"Unknown channel kind: {kind}")


def scan_cap(n: int, kind: ChannelKind, config: ThresholdConfig) -> float:
    """Largest p the scan probes."""
    if kind is ChannelKind.DEPHASING and n % 2 == 0:
        return config.even_dephasing_cap
    return 1.0


def numeric_pmax(
    n: int,
    kind: ChannelKind,
    tolerance: float = 1e-4,
    optimizer_config: OptimizerConfig | None = None,
    threshold_config: ThresholdConfig | None = None,
) -> ThresholdResult:
    """Scan-then-bisect search for the first downward crossing of max_bell - 1.

    Args:
        n: Party count.
        kind: Channel applied to every qubit.
        tolerance: Target accuracy of p_max, at least 1e-6.
        optimizer_config: Budget of every probe.
        threshold_config: Scan step, even-n dephasing cap and value resolution.

    Raises:
        ProbeConvergenceError: A probe's optimizer did not converge.
    """
    if not 2 <= n <= DENSE_QUBIT_CAP:
        raise ValueError(f"Party count must be in [2, {DENSE_QUBIT_CAP}], got {n}")
    if not tolerance >= MIN_TOLERANCE or not math.isfinite(tolerance):
        raise ValueError(f"Tolerance must be at least {MIN_TOLERANCE}, got {tolerance}")
    optimizer_config = optimizer_config or OptimizerConfig()
    threshold_config = threshold_config or ThresholdConfig()
    cap = scan_cap(n, kind, threshold_config)
    values: dict[float, float] = {}

    def probe(p: float) -> float:
        report = max_bell(n, NoiseSpec(kind=kind, p=p), optimizer_config)
        THRESHOLD_PROBES.labels(channel=kind.value).inc()
        if not report.converged:
            raise ProbeConvergenceError(p, report)
        values[p] = report.best_value
        return report.best_value

    def violated(value: float) -> bool:
        return value - LOCAL_BOUND > threshold_config.value_resolution

    with tracer.start_as_current_span("numeric_pmax") as span:
        span.set_attribute("n", n)
        span.set_attribute("channel", kind.value)
        span.set_attribute("tolerance", tolerance)

        if not violated(probe(0.0)):
            raise ValueError(f"No violation at p=0 for n={n}; the scan needs a violating start")

        lo, hi = 0.0, None
        step = threshold_config.scan_step
        k = 1
        while True:
            p = min(k * step, cap)
            if not violated(probe(p)):
                hi = p
                break
            lo = p
            if p >= cap:
                break
            k += 1

        analytic = analytic_pmax(n, kind)
        if hi is None:
            logger.info(
                "threshold_not_found",
                n=n,
                channel=kind.value,
                cap=cap,
                value_at_cap=values[lo],
                probes=len(values),
            )
            span.set_attribute("found", False)
            return ThresholdResult(
                n=n,
                channel=kind,
                p_max=None,
                bracket_width=None,
                analytic_reference=analytic,
                cap=cap,
                outcome=ThresholdOutcome.VIOLATION_PERSISTS,
                probes=len(values),
            )

        # Classified at the coarse scan point, up to a scan step past the crossing.
        above = values[hi]
        logger.debug("threshold_bracketed", n=n, channel=kind.value, lo=lo, hi=hi)
        while hi - lo > 2 * tolerance:
            mid = (lo + hi) / 2
            if violated(probe(mid)):
                lo = mid
            else:
                hi = mid

        p_max = (lo + hi) / 2
        verified = violated(values[lo]) and not violated(values[hi])
        if above >= LOCAL_BOUND - threshold_config.tie_tolerance:
            outcome = ThresholdOutcome.BOUND_ATTAINED
        else:
            outcome = ThresholdOutcome.BELOW_BOUND
        span.set_attribute("found", True)
        span.set_attribute("outcome", outcome.value)
        span.set_attribute("p_max", p_max)

    logger.info(
        "threshold_found",
        n=n,
        channel=kind.value,
        p_max=p_max,
        bracket_width=(hi - lo) / 2,
        analytic=analytic,
        outcome=outcome.value,
        value_above=above,
        bracket_verified=verified,
        probes=len(values),
    )
    if not verified:
        logger.warning("threshold_bracket_unverified", n=n, channel=kind.value, lo=lo, hi=hi)

    return ThresholdResult(
        n=n,
        channel=kind,
        p_max=p_max,
        bracket_width=(hi - lo) / 2,
        analytic_reference=analytic,
        cap=cap,
        outcome=outcome,
        bracket_verified=verified,
        probes=len(values),
    )
