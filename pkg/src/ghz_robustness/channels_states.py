"""GHZ and decohered-GHZ density matrices, built two independent ways.

``decohered_ghz_closedform`` writes the decohered matrices directly;
``decohered_ghz_channelwise`` applies the single-qubit channel maps to every
qubit of a pure GHZ state. Each path audits the other.

Qubit k (zero-based) is party k+1 and the k-th Kronecker factor, i.e. the
most significant bit of a basis index belongs to qubit 0.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import reduce

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import DENSE_QUBIT_CAP
from .observables import PAULI, ObservableSetting, to_matrix

logger = structlog.get_logger(__name__)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-12


class ChannelKind(str, Enum):
    """Local decoherence channels."""

    DEPOLARIZING = "depolarizing"
    DEPHASING = "dephasing"
    DISSIPATION = "dissipation"


class NoiseSpec(BaseModel):
    """Channel kind plus per-qubit degree of decoherence p."""

    model_config = ConfigDict(frozen=True)

    kind: ChannelKind = Field(description="Channel applied to every qubit")
    p: float = Field(description="Degree of decoherence, 0 = none, 1 = complete")

    @field_validator("p")
    @classmethod
    def validate_p(cls, v: float) -> float:
        """Validate p lies in [0, 1]."""
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {v}")
        return v


class DimensionMismatchError(ValueError):
    """Raised when an operand does not fit the state's qubit count."""


class StateError(ValueError):
    """Raised when a matrix is not a physical density matrix."""


@dataclass(frozen=True)
class DensityMatrix:
    """Read-only 2^n x 2^n complex matrix."""

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n <= DENSE_QUBIT_CAP:
            raise ValueError(f"Qubit count must be in [1, {DENSE_QUBIT_CAP}], got {self.n}")
        dim = 1 << self.n
        arr = np.array(self.entries, dtype=complex)
        if arr.shape != (dim, dim):
            raise DimensionMismatchError(
                f"Expected a {dim}x{dim} matrix for {self.n} qubits, got {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def tensor(self) -> np.ndarray:
        """View of shape (2,)*2n: row qubits first, then column qubits."""
        return self.entries.reshape((2,) * (2 * self.n))


def _check_qubit_count(n: int, minimum: int = 2) -> None:
    if not minimum <= n <= DENSE_QUBIT_CAP:
        raise ValueError(f"Qubit count must be in [{minimum}, {DENSE_QUBIT_CAP}], got {n}")


def ghz(n: int) -> DensityMatrix:
    """Projector onto (|0...0> + |1...1>)/sqrt(2)."""
    _check_qubit_count(n)
    dim = 1 << n
    entries = np.zeros((dim, dim), dtype=complex)
    for row in (0, dim - 1):
        for col in (0, dim - 1):
            entries[row, col] = 0.5
    return DensityMatrix(n, entries)


def apply_local_channel(rho: DensityMatrix, noise: NoiseSpec, qubit: int) -> DensityMatrix:
    """Apply one channel to one qubit through its element-wise index-pair map.

    depolarizing: |i><j| -> (1-p)|i><j| + p delta_ij I/2
    dephasing:    diagonal fixed, off-diagonal times (1-p)
    dissipation:  |i><i| -> (1-p)|i><i| + p|0><0|, off-diagonal times sqrt(1-p)
    """
    if not 0 <= qubit < rho.n:
        raise IndexError(f"Qubit {qubit} out of range for {rho.n} qubits")

    n, p = rho.n, noise.p
    block = np.moveaxis(rho.tensor(), (qubit, n + qubit), (-2, -1)).copy()
    d0 = block[..., 0, 0].copy()
    d1 = block[..., 1, 1].copy()

    match noise.kind:
        case ChannelKind.DEPOLARIZING:
            mixed = 0.5 * p * (d0 + d1)
            block[..., 0, 0] = (1.0 - p) * d0 + mixed
            block[..., 1, 1] = (1.0 - p) * d1 + mixed
            coherence = 1.0 - p
        case ChannelKind.DEPHASING:
            coherence = 1.0 - p
        case ChannelKind.DISSIPATION:
            block[..., 0, 0] = d0 + p * d1
            block[..., 1, 1] = (1.0 - p) * d1
            coherence = math.sqrt(1.0 - p)
    block[..., 0, 1] *= coherence
    block[..., 1, 0] *= coherence

    restored = np.moveaxis(block, (-2, -1), (qubit, n + qubit))
    return DensityMatrix(n, restored.reshape(rho.dim, rho.dim))


def decohered_ghz_channelwise(
    n: int,
    noise: NoiseSpec,
    order: Iterable[int] | None = None,
) -> DensityMatrix:
    """GHZ state with the channel applied once to every qubit.

    Args:
        n: Qubit count.
        noise: Channel and degree.
        order: Qubit application order; any permutation of range(n).
    """
    _check_qubit_count(n)
    sequence = list(range(n)) if order is None else list(order)
    if sorted(sequence) != list(range(n)):
        raise ValueError(f"Order must be a permutation of range({n}), got {sequence}")
    rho = ghz(n)
    for qubit in sequence:
        rho = apply_local_channel(rho, noise, qubit)
    return rho


def _product_diagonal(single: Sequence[float], n: int) -> np.ndarray:
    return reduce(np.kron, [np.asarray(single, dtype=float)] * n)


def decohered_ghz_closedform(n: int, noise: NoiseSpec) -> DensityMatrix:
    """Decohered GHZ matrix written out directly.

    All three channels leave only the diagonal and the two corner coherences
    |0...0><1...1| and |1...1><0...0|.
    """
    _check_qubit_count(n)
    p = noise.p
    dim = 1 << n
    diagonal = np.zeros(dim)

    match noise.kind:
        case ChannelKind.DEPOLARIZING:
            diagonal += 0.5 * _product_diagonal((1.0 - p / 2, p / 2), n)
            diagonal += 0.5 * _product_diagonal((p / 2, 1.0 - p / 2), n)
            coherence = (1.0 - p) ** n
        case ChannelKind.DEPHASING:
            diagonal[0] += 0.5
            diagonal[-1] += 0.5
            coherence = (1.0 - p) ** n
        case ChannelKind.DISSIPATION:
            diagonal[0] += 0.5
            diagonal += 0.5 * _product_diagonal((p, 1.0 - p), n)
            coherence = (1.0 - p) ** (n / 2)

    entries = np.diag(diagonal).astype(complex)
    entries[0, -1] = entries[-1, 0] = 0.5 * coherence
    return DensityMatrix(n, entries)


def decohered_ghz(
    n: int,
    noise: NoiseSpec | None,
    method: str = "closedform",
) -> DensityMatrix:
    """GHZ state, decohered by ``noise`` when given."""
    if noise is None:
        return ghz(n)
    if method == "closedform":
        return decohered_ghz_closedform(n, noise)
    if method == "channelwise":
        return decohered_ghz_channelwise(n, noise)
    raise ValueError(f"Unknown method '{method}'. Must be 'closedform' or 'channelwise'")


def expectation(rho: DensityMatrix, settings: Sequence[ObservableSetting]) -> float:
    """Correlation Tr(A (x) B (x) ... (x) K rho)."""
    if len(settings) != rho.n:
        raise DimensionMismatchError(
            f"Expected {rho.n} settings for {rho.n} qubits, got {len(settings)}"
        )
    operator = reduce(np.kron, [to_matrix(s) for s in settings])
    value = np.einsum("ij,ji->", operator, rho.entries)
    if abs(value.imag) >= IMAG_RESIDUE_TOL:
        raise StateError(f"Correlation has imaginary residue {value.imag:.3e}; rho not Hermitian?")
    return float(value.real)


def correlation_tensor(rho: DensityMatrix) -> np.ndarray:
    """Pauli correlation tensor T[j_1..j_n] = Tr(sigma_j1 (x) ... (x) sigma_jn rho).

    Shape (3,)*n with axes ordered by qubit and components (x, y, z).
    """
    n = rho.n
    rows = list(range(n))
    cols = list(range(n, 2 * n))
    outs = list(range(2 * n, 3 * n))
    operands: list[object] = []
    for i in range(n):
        operands.extend([PAULI, [outs[i], cols[i], rows[i]]])
    operands.extend([rho.tensor(), rows + cols])
    tensor = np.einsum(*operands, outs, optimize="greedy")
    return np.ascontiguousarray(tensor.real)


def validate_state(rho: DensityMatrix) -> None:
    """Raise ``StateError`` unless rho is Hermitian, unit-trace and PSD."""
    entries = rho.entries
    asymmetry = float(np.max(np.abs(entries - entries.conj().T)))
    if asymmetry > HERMITIAN_TOL:
        raise StateError(f"Matrix is not Hermitian (max deviation {asymmetry:.3e})")
    trace = complex(np.trace(entries))
    if abs(trace - 1.0) > TRACE_TOL:
        raise StateError(f"Trace must be 1, got {trace:.15g}")
    min_eig = float(np.linalg.eigvalsh(entries).min())
    if min_eig < -PSD_TOL:
        raise StateError(f"Matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2)."""
    return float(np.einsum("ij,ji->", rho.entries, rho.entries).real)


def dump_matrix(rho: DensityMatrix) -> str:
    """Row-major ``re,im`` pairs, one matrix row per line."""
    lines = [
        " ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) for row in rho.entries
    ]
    return "\n".join(lines) + "\n"
