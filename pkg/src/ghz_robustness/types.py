"""Shared type aliases and typed dictionaries."""

from __future__ import annotations

from typing import TypedDict

# Setting-choice word: bit i set means party i+1 uses its primed setting.
type Word = int


class SettingsPayload(TypedDict):
    """Per-party angles in the JSON report."""

    theta: float
    theta_prime: float
    phi: float
    phi_prime: float


class MaxBellPayload(TypedDict):
    """JSON object printed by ``maxbell --json``."""

    n: int
    channel: str
    p: float | None
    max_bell: float
    settings: list[SettingsPayload]
    converged: bool
    seed: int


class ThresholdPayload(TypedDict):
    """JSON object printed by ``pmax --json``."""

    n: int
    channel: str
    p_max: float | None
    bracket_width: float | None
    analytic_p_max: float | None
    difference: float | None
    cap: float
    outcome: str
    bracket_verified: bool
