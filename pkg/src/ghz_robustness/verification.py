"""Cross-check the closed-form and dense evaluation paths against each other.

Two comparisons:

* correlations: closed-form ``correlate_word`` against the dense expectation
  on the channel-applied state, for random settings tables and every word;
* matrices: closed-form decohered states against channel application.

Every random table has its own seed, derived from (seed, n, channel, p, trial),
so any breach can be reproduced in isolation.
"""

from __future__ import annotations

import time
from collections.abc import Iterator

import numpy as np
import structlog
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, Field

from .channels_states import (
    ChannelKind,
    NoiseSpec,
    decohered_ghz_channelwise,
    decohered_ghz_closedform,
    expectation,
    ghz,
)
from .config import DEFAULT_SEED
from .correlations import correlate_word
from .metrics import VERIFICATION_CHECKS
from .observables import random_table

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

CORRELATION_TOL = 1e-12
MATRIX_TOL = 1e-13

CORRELATION_PS = (0.0, 0.25, 0.5, 0.75, 1.0)
MATRIX_PS = tuple(k / 10 for k in range(11))

# Dense expectations cost 4^n per word and 2^n words per table.
VERIFY_QUBIT_CAP = 6


class Breach(BaseModel):
    """One comparison whose deviation reached its tolerance."""

    model_config = ConfigDict(frozen=True)

    check: str = Field(description="'correlation' or 'matrix'")
    n: int
    channel: str
    p: float | None
    settings_seed: int | None = Field(default=None, description="Seed of the random table")
    deviation: float


class VerificationSummary(BaseModel):
    """Outcome of ``run_verification``."""

    model_config = ConfigDict(frozen=True)

    n_max: int
    trials: int
    seed: int
    max_correlation_deviation: float = 0.0
    max_matrix_deviation: float = 0.0
    correlation_checks: int = 0
    matrix_checks: int = 0
    breaches: tuple[Breach, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.breaches


def table_seed(seed: int, n: int, kind_index: int, p_index: int, trial: int) -> int:
    """Seed of one random settings table."""
    sequence = np.random.SeedSequence([seed, n, kind_index, p_index, trial])
    return int(sequence.generate_state(1)[0])


def _correlation_grid() -> Iterator[tuple[int, int, NoiseSpec | None]]:
    """(channel index, p index, noise); index 0 is the pure state."""
    yield 0, 0, None
    for kind_index, kind in enumerate(ChannelKind, start=1):
        for p_index, p in enumerate(CORRELATION_PS):
            yield kind_index, p_index, NoiseSpec(kind=kind, p=p)


def _check_correlations(
    n: int, trials: int, seed: int, breaches: list[Breach]
) -> tuple[float, int]:
    worst = 0.0
    checks = 0
    for kind_index, p_index, noise in _correlation_grid():
        rho = ghz(n) if noise is None else decohered_ghz_channelwise(n, noise)
        for trial in range(trials):
            settings_seed = table_seed(seed, n, kind_index, p_index, trial)
            table = random_table(n, np.random.default_rng(settings_seed))
            deviation = max(
                abs(correlate_word(table, noise, word) - expectation(rho, table.resolve(word)))
                for word in range(1 << n)
            )
            checks += 1 << n
            worst = max(worst, deviation)
            if not deviation < CORRELATION_TOL:
                breaches.append(
                    Breach(
                        check="correlation",
                        n=n,
                        channel=noise.kind.value if noise else "none",
                        p=noise.p if noise else None,
                        settings_seed=settings_seed,
                        deviation=deviation,
                    )
                )
    return worst, checks


def _check_matrices(n: int, breaches: list[Breach]) -> tuple[float, int]:
    worst = 0.0
    checks = 0
    for kind in ChannelKind:
        for p in MATRIX_PS:
            noise = NoiseSpec(kind=kind, p=p)
            closed = decohered_ghz_closedform(n, noise).entries
            channelwise = decohered_ghz_channelwise(n, noise).entries
            deviation = float(np.max(np.abs(closed - channelwise)))
            checks += 1
            worst = max(worst, deviation)
            if not deviation < MATRIX_TOL:
                breaches.append(
                    Breach(check="matrix", n=n, channel=kind.value, p=p, deviation=deviation)
                )
    return worst, checks


def run_verification(
    n_max: int = 5,
    trials: int = 50,
    seed: int = DEFAULT_SEED,
) -> VerificationSummary:
    """Run both comparisons for n = 2..n_max.

    Args:
        n_max: Largest party count checked, 2..VERIFY_QUBIT_CAP.
        trials: Random settings tables per (n, channel, p).
        seed: Root seed of every table.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be at least 2, got {n_max}")
    if n_max > VERIFY_QUBIT_CAP:
        raise ValueError(f"n_max too large (max {VERIFY_QUBIT_CAP}), got {n_max}")
    if trials < 1:
        raise ValueError(f"Trials must be at least 1, got {trials}")

    breaches: list[Breach] = []
    correlation_worst = matrix_worst = 0.0
    correlation_checks = matrix_checks = 0
    started = time.perf_counter()

    with tracer.start_as_current_span("run_verification") as span:
        span.set_attribute("n_max", n_max)
        span.set_attribute("trials", trials)
        for n in range(2, n_max + 1):
            worst, count = _check_correlations(n, trials, seed, breaches)
            correlation_worst = max(correlation_worst, worst)
            correlation_checks += count
            worst, count = _check_matrices(n, breaches)
            matrix_worst = max(matrix_worst, worst)
            matrix_checks += count
            logger.debug("verification_size_done", n=n, breaches=len(breaches))
        span.set_attribute("breaches", len(breaches))

    correlation_failed = sum(1 for b in breaches if b.check == "correlation")
    matrix_failed = len(breaches) - correlation_failed
    correlation_tables = (n_max - 1) * trials * sum(1 for _ in _correlation_grid())
    VERIFICATION_CHECKS.labels(check="correlation", status="pass").inc(
        correlation_tables - correlation_failed
    )
    VERIFICATION_CHECKS.labels(check="correlation", status="fail").inc(correlation_failed)
    VERIFICATION_CHECKS.labels(check="matrix", status="pass").inc(matrix_checks - matrix_failed)
    VERIFICATION_CHECKS.labels(check="matrix", status="fail").inc(matrix_failed)

    summary = VerificationSummary(
        n_max=n_max,
        trials=trials,
        seed=seed,
        max_correlation_deviation=correlation_worst,
        max_matrix_deviation=matrix_worst,
        correlation_checks=correlation_checks,
        matrix_checks=matrix_checks,
        breaches=tuple(breaches),
    )
    logger.info(
        "verification_finished",
        n_max=n_max,
        trials=trials,
        max_correlation_deviation=correlation_worst,
        max_matrix_deviation=matrix_worst,
        breaches=len(breaches),
        elapsed_seconds=round(time.perf_counter() - started, 3),
    )
    return summary
