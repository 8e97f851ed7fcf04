"""Maximize the Mermin-Klyshko Bell value over measurement angles.

The Bell value is linear in every single observable, so for fixed other
parties the best Bloch vector of each of a party's two settings is its
normalized effective field. The see-saw cycles through the parties until a
full sweep stops improving.

The dense state enters through its Pauli correlation tensor
T[j] = Tr(sigma_j1 (x) ... (x) sigma_jn rho); with the coefficient tensor C of
the expansion and per-party setting vectors M_i[s, j] the Bell value is

    sum_{s, j} C[s] T[j] prod_i M_i[s_i, j_i]

and the field of party k is the same contraction with party k left open.
All multistarts advance together as one batch; start k draws its initial
angles from the stream (seed, k), so results do not depend on the batching.
"""

from __future__ import annotations

import math
import time

import numpy as np
import structlog
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from .bell_operator import BellExpansion, build_mk
from .channels_states import (
    DensityMatrix,
    DimensionMismatchError,
    NoiseSpec,
    correlation_tensor,
    decohered_ghz,
)
from .config import DENSE_QUBIT_CAP, OptimizerConfig
from .correlations import closed_form_bell_value, correlation_values
from .metrics import OPTIMIZER_DURATION, OPTIMIZER_RUNS, POLISH_ACCEPTED, SEESAW_SWEEPS
from .observables import TWO_PI, SettingsTable, from_bloch_vector

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

# Fields shorter than this carry no direction; the previous setting is kept.
_ZERO_FIELD = 1e-14


class OptimizationReport(BaseModel):
    """Outcome of one ``max_bell`` call."""

    model_config = ConfigDict(frozen=True)

    n: int
    channel: str = Field(description="Channel kind, or 'none'")
    p: float | None = Field(description="Degree of decoherence, None for the pure state")
    best_value: float = Field(description="Largest Bell value found")
    best_settings: SettingsTable
    starts_used: int
    converged: bool = Field(description="At least one start reached the sweep tolerance")
    iterations: tuple[int, ...] = Field(description="Sweeps used per start")
    seed: int
    polished: bool = Field(default=False, description="Simplex polish improved the result")


class _SeesawKernel:
    """Batched contractions of the coefficient and correlation tensors."""

    def __init__(self, expansion: BellExpansion, correlations: np.ndarray) -> None:
        n = expansion.n
        if correlations.shape != (3,) * n:
            raise DimensionMismatchError(
                f"Correlation tensor of shape {correlations.shape} does not fit {n} parties"
            )
        self.n = n
        self._coeff = expansion.coefficient_tensor()
        self._corr = correlations
        # einsum axis labels: batch 0, setting choice s_i, Pauli component j_i
        self._s = [1 + i for i in range(n)]
        self._j = [1 + n + i for i in range(n)]
        self._paths: dict[tuple[int, int], list] = {}

    def _contract(self, vectors: np.ndarray, open_party: int) -> np.ndarray:
        operands: list[object] = [self._coeff, self._s, self._corr, self._j]
        for i in range(self.n):
            if i != open_party:
                operands.extend([vectors[:, i], [0, self._s[i], self._j[i]]])
        if open_party < 0:
            output = [0]
        else:
            output = [0, self._s[open_party], self._j[open_party]]
        operands.append(output)

        key = (open_party, vectors.shape[0])
        if key not in self._paths:
            self._paths[key] = np.einsum_path(*operands, optimize="greedy")[0]
        return np.einsum(*operands, optimize=self._paths[key])

    def values(self, vectors: np.ndarray) -> np.ndarray:
        """Bell values, shape (S,), of vectors shaped (S, n, 2, 3)."""
        return self._contract(vectors, -1)

    def field(self, vectors: np.ndarray, party: int) -> np.ndarray:
        """Effective fields of one party, shape (S, 2, 3)."""
        return self._contract(vectors, party)


def _align(field: np.ndarray, previous: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(field, axis=-1, keepdims=True)
    usable = norms > _ZERO_FIELD
    return np.where(usable, field / np.where(usable, norms, 1.0), previous)


def _check_dimensions(table: SettingsTable, rho: DensityMatrix, expansion: BellExpansion) -> None:
    if not table.n == rho.n == expansion.n:
        raise DimensionMismatchError(
            f"Settings ({table.n}), state ({rho.n}) and expansion ({expansion.n}) "
            "must have the same party count"
        )


def seesaw_step(
    settings: SettingsTable,
    rho: DensityMatrix,
    expansion: BellExpansion,
    party: int,
) -> SettingsTable:
    """Replace one party's two settings by their exact best directions.

    A setting whose effective field vanishes is kept unchanged.
    """
    _check_dimensions(settings, rho, expansion)
    if not 0 <= party < settings.n:
        raise IndexError(f"Party {party} out of range for {settings.n} parties")

    kernel = _SeesawKernel(expansion, correlation_tensor(rho))
    field = kernel.field(settings.vectors()[np.newaxis], party)[0]

    pair = list(settings.entries[party])
    for choice in (0, 1):
        if np.linalg.norm(field[choice]) > _ZERO_FIELD:
            pair[choice] = from_bloch_vector(field[choice])
    entries = list(settings.entries)
    entries[party] = (pair[0], pair[1])
    return SettingsTable(n=settings.n, entries=tuple(entries))


def _initial_vectors(n: int, config: OptimizerConfig) -> np.ndarray:
    """Random unit vectors, shape (starts, n, 2, 3); start k uses stream (seed, k)."""
    vectors = np.empty((config.starts, n, 2, 3))
    for start in range(config.starts):
        rng = np.random.default_rng([config.seed, start])
        cos_theta = rng.uniform(-1.0, 1.0, size=(n, 2))
        phi = rng.uniform(0.0, TWO_PI, size=(n, 2))
        sin_theta = np.sqrt(1.0 - cos_theta**2)
        vectors[start] = np.stack(
            [sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta], axis=-1
        )
    return vectors


def _run_seesaw(
    kernel: _SeesawKernel,
    vectors: np.ndarray,
    config: OptimizerConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sweep every start until its gain drops below tolerance.

    Returns:
        Tuple of (vectors, values, sweeps per start, converged mask).
    """
    starts = vectors.shape[0]
    values = kernel.values(vectors)
    active = np.ones(starts, dtype=bool)
    converged = np.zeros(starts, dtype=bool)
    sweeps = np.full(starts, config.max_sweeps, dtype=int)

    for sweep in range(1, config.max_sweeps + 1):
        for party in range(kernel.n):
            updated = _align(kernel.field(vectors, party), vectors[:, party])
            vectors[active, party] = updated[active]
        new_values = kernel.values(vectors)
        settled = active & (new_values - values < config.tolerance)
        converged |= settled
        sweeps[settled] = sweep
        active &= ~settled
        values = np.where(active | settled, new_values, values)
        if not active.any():
            break

    return vectors, values, sweeps, converged


class _ClosedFormObjective:
    """Bell value as a function of the flattened (n, 2, 2) angle array."""

    def __init__(self, expansion: BellExpansion, noise: NoiseSpec | None) -> None:
        n = expansion.n
        words = list(expansion.coeffs)
        self._n = n
        self._noise = noise
        self._coeffs = np.array([float(expansion.coeffs[w]) for w in words])
        self._bits = np.array([[(w >> i) & 1 for i in range(n)] for w in words])
        self._parties = np.arange(n)[np.newaxis, :]

    def __call__(self, flat: np.ndarray) -> float:
        angles = flat.reshape(self._n, 2, 2)
        theta = angles[self._parties, self._bits, 0]
        phi = angles[self._parties, self._bits, 1]
        return float(self._coeffs @ correlation_values(theta, phi, self._noise))


def _polish(
    objective: _ClosedFormObjective,
    table: SettingsTable,
    config: OptimizerConfig,
) -> tuple[SettingsTable, bool]:
    """Nelder-Mead on all 4n angles; keep the result only if it is better."""
    start = table.angles().reshape(-1)
    before = objective(start)
    result = minimize(
        lambda x: -objective(x),
        start,
        method="Nelder-Mead",
        options={
            "maxfev": config.polish_max_evals,
            "xatol": 1e-10,
            "fatol": 1e-15,
            "adaptive": True,
        },
    )
    after = -float(result.fun)
    if after > before:
        return SettingsTable.from_angles(result.x.reshape(table.n, 2, 2)), True
    return table, False


def _negate_first_party(table: SettingsTable) -> SettingsTable:
    """Flip the sign of both observables of party 1, negating the Bell value."""
    angles = table.angles()
    angles[0, :, 0] = math.pi - angles[0, :, 0]
    angles[0, :, 1] += math.pi
    return SettingsTable.from_angles(angles)


def max_bell(
    n: int,
    noise: NoiseSpec | None,
    config: OptimizerConfig | None = None,
    rho: DensityMatrix | None = None,
) -> OptimizationReport:
    """Largest MK Bell value of the (decohered) n-qubit GHZ state.

    Args:
        n: Party count, 2..DENSE_QUBIT_CAP.
        noise: Channel and degree, or None for the pure state.
        config: Multistart budget; defaults to ``OptimizerConfig()``.
        rho: Precomputed state of ``noise``; built from it when omitted. The
            polish and the reported value use the closed form of ``noise``.

    Returns:
        Report whose ``best_value`` is a lower bound on the true maximum of
        |<B_n>|; ``converged`` is False when no start met the tolerance.
    """
    if not 2 <= n <= DENSE_QUBIT_CAP:
        raise ValueError(f"Party count must be in [2, {DENSE_QUBIT_CAP}], got {n}")
    config = config or OptimizerConfig()
    channel = noise.kind.value if noise is not None else "none"
    p = noise.p if noise is not None else None

    with tracer.start_as_current_span("max_bell") as span:
        span.set_attribute("n", n)
        span.set_attribute("channel", channel)
        if p is not None:
            span.set_attribute("p", p)

        started = time.perf_counter()
        expansion = build_mk(n)
        state = rho if rho is not None else decohered_ghz(n, noise)
        if state.n != n:
            raise DimensionMismatchError(f"State has {state.n} qubits, expected {n}")

        kernel = _SeesawKernel(expansion, correlation_tensor(state))
        vectors, values, sweeps, converged = _run_seesaw(
            kernel, _initial_vectors(n, config), config
        )
        best_start = int(np.argmax(values))
        table = SettingsTable.from_vectors(vectors[best_start])

        polished = False
        if config.polish and config.polish_max_evals > 0:
            table, polished = _polish(_ClosedFormObjective(expansion, noise), table, config)
            if polished:
                POLISH_ACCEPTED.inc()

        best_value = closed_form_bell_value(expansion, table, noise)
        if best_value < 0:
            table = _negate_first_party(table)
            best_value = closed_form_bell_value(expansion, table, noise)

        elapsed = time.perf_counter() - started
        any_converged = bool(converged.any())
        for count in sweeps:
            SEESAW_SWEEPS.observe(int(count))
        OPTIMIZER_RUNS.labels(channel=channel, converged=str(any_converged).lower()).inc()
        OPTIMIZER_DURATION.labels(channel=channel).observe(elapsed)
        span.set_attribute("best_value", best_value)

    log = logger.debug if any_converged else logger.warning
    log(
        "max_bell_finished",
        n=n,
        channel=channel,
        p=p,
        best_value=best_value,
        best_start=best_start,
        converged_starts=int(converged.sum()),
        starts=config.starts,
        polished=polished,
        elapsed_seconds=round(elapsed, 4),
    )

    return OptimizationReport(
        n=n,
        channel=channel,
        p=p,
        best_value=best_value,
        best_settings=table,
        starts_used=config.starts,
        converged=any_converged,
        iterations=tuple(int(c) for c in sweeps),
        seed=config.seed,
        polished=polished,
    )
