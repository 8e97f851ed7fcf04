"""Closed-form correlations of pure and decohered GHZ states.

For settings (theta_i, phi_i) every correlation has the shape

    diag * prod(cos theta_i) + coherence * cos(sum phi_i) * prod(sin theta_i)

where the two weights depend only on n and the channel:

    none          parity              1
    depolarizing  (1-p)^n parity      (1-p)^n
    dephasing     parity              (1-p)^n
    dissipation   (1 + (2p-1)^n)/2    (1-p)^(n/2)

with parity = (1 + (-1)^n)/2.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bell_operator import BellExpansion, bell_value
from .channels_states import ChannelKind, NoiseSpec
from .observables import ObservableSetting, SettingsTable
from .types import Word


class CorrelationQuery(BaseModel):
    """Resolved settings (one per party) and an optional channel."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(description="Party count")
    settings: tuple[ObservableSetting, ...] = Field(description="One setting per party")
    noise: NoiseSpec | None = Field(default=None, description="Channel, or None for pure GHZ")

    @model_validator(mode="after")
    def validate_settings_count(self) -> CorrelationQuery:
        if self.n < 2:
            raise ValueError(f"Party count must be at least 2, got {self.n}")
        if len(self.settings) != self.n:
            raise ValueError(f"Expected {self.n} settings, got {len(self.settings)}")
        return self


def _parity(n: int) -> float:
    return (1 + (-1) ** n) / 2


def _diagonal_weight(n: int, noise: NoiseSpec | None) -> float:
    """Weight of prod(cos theta)."""
    if noise is None:
        return _parity(n)
    p = noise.p
    match noise.kind:
        case ChannelKind.DEPOLARIZING:
            return (1.0 - p) ** n * _parity(n)
        case ChannelKind.DEPHASING:
            return _parity(n)
        case ChannelKind.DISSIPATION:
            return (1.0 + (2.0 * p - 1.0) ** n) / 2


def _coherence_weight(n: int, noise: NoiseSpec | None) -> float:
    """Weight of cos(sum phi) prod(sin theta)."""
    if noise is None:
        return 1.0
    p = noise.p
    match noise.kind:
        case ChannelKind.DEPOLARIZING | ChannelKind.DEPHASING:
            return (1.0 - p) ** n
        case ChannelKind.DISSIPATION:
            return (1.0 - p) ** (n / 2)


def correlation_values(
    theta: np.ndarray,
    phi: np.ndarray,
    noise: NoiseSpec | None,
) -> np.ndarray:
    """Vectorized closed form over arrays of shape (..., n)."""
    n = theta.shape[-1]
    cos_part = np.prod(np.cos(theta), axis=-1)
    sin_part = np.prod(np.sin(theta), axis=-1)
    # Sum the phases first: one cosine per correlation.
    phase = np.cos(np.sum(phi, axis=-1))
    return _diagonal_weight(n, noise) * cos_part + _coherence_weight(n, noise) * phase * sin_part


def _query_angles(q: CorrelationQuery) -> tuple[np.ndarray, np.ndarray]:
    theta = np.array([s.theta for s in q.settings])
    phi = np.array([s.phi for s in q.settings])
    return theta, phi


def correlation_ghz(q: CorrelationQuery) -> float:
    """Correlation of the pure GHZ state."""
    theta, phi = _query_angles(q)
    return float(correlation_values(theta, phi, None))


def correlation_noisy(q: CorrelationQuery) -> float:
    """Correlation of the GHZ state after the query's channel."""
    if q.noise is None:
        raise ValueError("correlation_noisy needs a channel; use correlation_ghz for pure states")
    theta, phi = _query_angles(q)
    return float(correlation_values(theta, phi, q.noise))


def correlate_word(table: SettingsTable, noise: NoiseSpec | None, word: Word) -> float:
    """Correlation for the settings a word selects from the table."""
    query = CorrelationQuery(n=table.n, settings=tuple(table.resolve(word)), noise=noise)
    if noise is None:
        return correlation_ghz(query)
    return correlation_noisy(query)


def closed_form_bell_value(
    expansion: BellExpansion,
    table: SettingsTable,
    noise: NoiseSpec | None,
) -> float:
    """Bell value of a (decohered) GHZ state from the closed-form correlations."""
    if expansion.n != table.n:
        raise ValueError(f"Expansion has {expansion.n} parties, table has {table.n}")
    return bell_value(expansion, lambda word: correlate_word(table, noise, word))
