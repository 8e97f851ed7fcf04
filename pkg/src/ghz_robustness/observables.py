"""Dichotomic qubit observables as Bloch-sphere directions.

An observable with outcomes +1/-1 is a unit Bloch vector (theta, phi):

    A = (sigma_x cos(phi) + sigma_y sin(phi)) sin(theta) + sigma_z cos(theta)

Angles are radians. Settings are canonical on construction: theta in [0, pi],
phi in [0, 2 pi).
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .types import Word

TWO_PI = 2.0 * math.pi

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Stacked (x, y, z); index 0..2 matches Bloch vector components.
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def _wrap_phi(phi: float) -> float:
    wrapped = phi % TWO_PI
    # -1e-17 % 2pi rounds to exactly 2pi
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


class ObservableSetting(BaseModel):
    """One dichotomic measurement direction."""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(description="Polar angle in radians, [0, pi]")
    phi: float = Field(description="Azimuthal angle in radians, [0, 2 pi)")

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v: float) -> float:
        """Validate polar angle is finite and inside [0, pi]."""
        if not math.isfinite(v):
            raise ValueError(f"theta must be finite, got {v}")
        if not 0.0 <= v <= math.pi:
            raise ValueError(f"theta must be in [0, pi], got {v}; use canonicalize()")
        return v

    @field_validator("phi")
    @classmethod
    def validate_phi(cls, v: float) -> float:
        """Wrap azimuthal angle into [0, 2 pi)."""
        if not math.isfinite(v):
            raise ValueError(f"phi must be finite, got {v}")
        return _wrap_phi(v)

    @property
    def bloch_vector(self) -> np.ndarray:
        """Unit vector (x, y, z) of this direction."""
        sin_theta = math.sin(self.theta)
        return np.array(
            [
                sin_theta * math.cos(self.phi),
                sin_theta * math.sin(self.phi),
                math.cos(self.theta),
            ]
        )


def canonicalize(theta_raw: float, phi_raw: float) -> ObservableSetting:
    """Bring arbitrary finite angles into canonical range without changing the observable.

    theta is reduced mod 2 pi; if it lands in (pi, 2 pi) it is reflected to
    2 pi - theta and phi is shifted by pi.
    """
    if not (math.isfinite(theta_raw) and math.isfinite(phi_raw)):
        raise ValueError(f"Angles must be finite, got theta={theta_raw}, phi={phi_raw}")

    theta = theta_raw % TWO_PI
    phi = phi_raw
    if theta > math.pi:
        theta = TWO_PI - theta
        phi = phi + math.pi
    return ObservableSetting(theta=min(theta, math.pi), phi=_wrap_phi(phi))


def from_bloch_vector(vector: Sequence[float] | np.ndarray) -> ObservableSetting:
    """Direction of a nonzero 3-vector.

    Uses atan2 for theta so directions close to the poles keep full precision.
    """
    x, y, z = (float(c) for c in vector)
    return canonicalize(math.atan2(math.hypot(x, y), z), math.atan2(y, x))


def to_matrix(s: ObservableSetting) -> np.ndarray:
    """2x2 Hermitian, traceless, involutory matrix of a setting."""
    return np.tensordot(s.bloch_vector, PAULI, axes=1)


class SettingsTable(BaseModel):
    """Two settings (unprimed, primed) for each of n parties."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(description="Party count")
    entries: tuple[tuple[ObservableSetting, ObservableSetting], ...] = Field(
        description="(unprimed, primed) per party, party 1 first"
    )

    @field_validator("n")
    @classmethod
    def validate_n(cls, v: int) -> int:
        """Validate party count."""
        if v < 2:
            raise ValueError(f"Party count must be at least 2, got {v}")
        return v

    @model_validator(mode="after")
    def validate_entry_count(self) -> SettingsTable:
        if len(self.entries) != self.n:
            raise ValueError(f"Expected {self.n} setting pairs, got {len(self.entries)}")
        return self

    def setting(self, party: int, primed: bool) -> ObservableSetting:
        """Setting of a zero-based party."""
        return self.entries[party][1 if primed else 0]

    def resolve(self, word: Word) -> list[ObservableSetting]:
        """Concrete setting per party selected by a setting-choice word."""
        if not 0 <= word < (1 << self.n):
            raise ValueError(f"Word {word} out of range for {self.n} parties")
        return [pair[(word >> i) & 1] for i, pair in enumerate(self.entries)]

    def angles(self) -> np.ndarray:
        """Array of shape (n, 2, 2): [party, primed, (theta, phi)]."""
        return np.array([[[s.theta, s.phi] for s in pair] for pair in self.entries])

    def vectors(self) -> np.ndarray:
        """Array of shape (n, 2, 3) of unit Bloch vectors."""
        return np.array([[s.bloch_vector for s in pair] for pair in self.entries])

    @classmethod
    def from_angles(cls, angles: np.ndarray | Sequence[Sequence[Sequence[float]]]) -> SettingsTable:
        """Build from raw (n, 2, 2) angles, canonicalizing each pair."""
        arr = np.asarray(angles, dtype=float)
        if arr.ndim != 3 or arr.shape[1:] != (2, 2):
            raise ValueError(f"Expected angles of shape (n, 2, 2), got {arr.shape}")
        entries = tuple(
            (canonicalize(*party[0]), canonicalize(*party[1])) for party in arr
        )
        return cls(n=len(entries), entries=entries)

    @classmethod
    def from_vectors(cls, vectors: np.ndarray) -> SettingsTable:
        """Build from (n, 2, 3) Bloch vectors."""
        arr = np.asarray(vectors, dtype=float)
        if arr.ndim != 3 or arr.shape[1:] != (2, 3):
            raise ValueError(f"Expected vectors of shape (n, 2, 3), got {arr.shape}")
        entries = tuple(
            (from_bloch_vector(party[0]), from_bloch_vector(party[1])) for party in arr
        )
        return cls(n=len(entries), entries=entries)

    def swapped(self) -> SettingsTable:
        """Table with primed and unprimed settings exchanged for every party."""
        return SettingsTable(n=self.n, entries=tuple((b, a) for a, b in self.entries))


def random_table(n: int, rng: np.random.Generator) -> SettingsTable:
    """Table drawn uniformly on the sphere: cos(theta) ~ U[-1, 1], phi ~ U[0, 2 pi)."""
    cos_theta = rng.uniform(-1.0, 1.0, size=(n, 2))
    phi = rng.uniform(0.0, TWO_PI, size=(n, 2))
    angles = np.stack([np.arccos(cos_theta), phi], axis=-1)
    return SettingsTable.from_angles(angles)
