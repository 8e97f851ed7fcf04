"""Mermin-Klyshko Bell operator as a coefficient table over setting-choice words.

Word encoding: bit i (least significant first) is party i+1; a set bit means
the party measures its primed setting. Coefficients are exact dyadic
fractions; floats appear only inside ``bell_value``.

The operator follows the recursion

    B_n = 1/2 B_{n-1} (K + K') + 1/2 B'_{n-1} (K - K')

starting from the CHSH form B_2 = 1/2 (AB + AB' + A'B - A'B'), where B'
exchanges every primed and unprimed setting.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Mapping
from fractions import Fraction
from types import MappingProxyType

import numpy as np
import structlog

from .config import DENSE_QUBIT_CAP
from .types import Word

logger = structlog.get_logger(__name__)

HALF = Fraction(1, 2)
LOCAL_BOUND = 1

_CHSH: dict[Word, Fraction] = {
    0b00: HALF,  # A B
    0b10: HALF,  # A B'
    0b01: HALF,  # A' B
    0b11: -HALF,  # A' B'
}


class BellExpansion:
    """Immutable map from setting-choice word to a nonzero dyadic coefficient."""

    __slots__ = ("_n", "_coeffs")

    def __init__(self, n: int, coeffs: Mapping[Word, Fraction]) -> None:
        if n < 2:
            raise ValueError(f"Party count must be at least 2, got {n}")
        full = (1 << n) - 1
        cleaned: dict[Word, Fraction] = {}
        for word, coeff in coeffs.items():
            if not 0 <= word <= full:
                raise ValueError(f"Word {word} out of range for {n} parties")
            value = Fraction(coeff)
            if value:
                cleaned[word] = value
        self._n = n
        self._coeffs = MappingProxyType(dict(sorted(cleaned.items())))

    @property
    def n(self) -> int:
        return self._n

    @property
    def coeffs(self) -> Mapping[Word, Fraction]:
        return self._coeffs

    @property
    def exceeds_dense_cap(self) -> bool:
        """True when the dense density-matrix path cannot evaluate this size."""
        return self._n > DENSE_QUBIT_CAP

    def __len__(self) -> int:
        return len(self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BellExpansion):
            return NotImplemented
        return self._n == other._n and dict(self._coeffs) == dict(other._coeffs)

    def __hash__(self) -> int:
        return hash((self._n, tuple(self._coeffs.items())))

    def __repr__(self) -> str:
        return f"BellExpansion(n={self._n}, terms={len(self._coeffs)})"

    def coefficient_tensor(self) -> np.ndarray:
        """Float array of shape (2,)*n indexed [s_1, ..., s_n] (party 1 first)."""
        tensor = np.zeros((2,) * self._n)
        for word, coeff in self._coeffs.items():
            tensor[word_bits(word, self._n)] = float(coeff)
        return tensor


def word_bits(word: Word, n: int) -> tuple[int, ...]:
    """Per-party primed flags, party 1 first."""
    return tuple((word >> i) & 1 for i in range(n))


def word_label(word: Word, n: int) -> str:
    """Human label such as ``AB'C`` (parties lettered A, B, C, ...)."""
    parts = []
    for i in range(n):
        letter = chr(ord("A") + i) if i < 26 else f"P{i + 1}"
        parts.append(letter + ("'" if (word >> i) & 1 else ""))
    return "".join(parts)


def build_mk(n: int) -> BellExpansion:
    """Mermin-Klyshko expansion for n parties."""
    if n < 2:
        raise ValueError(f"Party count must be at least 2, got {n}")

    current = dict(_CHSH)
    for size in range(3, n + 1):
        new_bit = 1 << (size - 1)
        mask = new_bit - 1
        nxt: dict[Word, Fraction] = {}
        for word, coeff in current.items():
            half = coeff * HALF
            # 1/2 B (K + K')
            nxt[word] = nxt.get(word, Fraction(0)) + half
            nxt[word | new_bit] = nxt.get(word | new_bit, Fraction(0)) + half
            # 1/2 B' (K - K')
            swapped = word ^ mask
            nxt[swapped] = nxt.get(swapped, Fraction(0)) + half
            nxt[swapped | new_bit] = nxt.get(swapped | new_bit, Fraction(0)) - half
        current = {w: c for w, c in nxt.items() if c}

    expansion = BellExpansion(n, current)
    if expansion.exceeds_dense_cap:
        logger.warning(
            "expansion_exceeds_dense_cap",
            n=n,
            dense_cap=DENSE_QUBIT_CAP,
            terms=len(expansion),
        )
    return expansion


def prime_swap(b: BellExpansion) -> BellExpansion:
    """Exchange primed and unprimed settings: complement every word."""
    full = (1 << b.n) - 1
    return BellExpansion(b.n, {word ^ full: coeff for word, coeff in b.coeffs.items()})


def bell_value(b: BellExpansion, correlate: Callable[[Word], float]) -> float:
    """Signed sum of correlations: sum_w coeff(w) * correlate(w)."""
    return math.fsum(float(coeff) * correlate(word) for word, coeff in b.coeffs.items())


def local_bound(b: BellExpansion) -> Fraction:
    """Exact max |bell value| over every deterministic +1/-1 strategy.

    Each party fixes an outcome for each of its two settings, giving 4^n
    strategies; the correlation of a word is the product of the chosen outcomes.
    """
    # Integer arithmetic: every coefficient is a multiple of 2^-(n-1).
    scale = 1 << (b.n - 1)
    outcomes = np.array(list(itertools.product((1, -1), repeat=2 * b.n)), dtype=np.int64)
    totals = np.zeros(len(outcomes), dtype=np.int64)
    for word, coeff in b.coeffs.items():
        scaled = coeff * scale
        if scaled.denominator != 1:
            raise ValueError(f"Coefficient {coeff} is not a multiple of 1/{scale}")
        columns = [2 * party + ((word >> party) & 1) for party in range(b.n)]
        totals += int(scaled) * np.prod(outcomes[:, columns], axis=1)
    return Fraction(int(np.abs(totals).max()), scale)


def quantum_bound(n: int) -> float:
    """Largest quantum Bell value, 2^((n-1)/2)."""
    if n < 2:
        raise ValueError(f"Party count must be at least 2, got {n}")
    return 2.0 ** ((n - 1) / 2)


def dump_expansion(b: BellExpansion) -> str:
    """Text lines ``word numerator/denominator``, word written party 1 first."""
    lines = []
    for word, coeff in b.coeffs.items():
        bits = "".join(str(bit) for bit in word_bits(word, b.n))
        lines.append(f"{bits} {coeff.numerator}/{coeff.denominator}")
    return "\n".join(lines) + "\n"


def parse_expansion(text: str) -> BellExpansion:
    """Inverse of ``dump_expansion``."""
    coeffs: dict[Word, Fraction] = {}
    n: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            bits, ratio = line.split()
            value = Fraction(ratio)
        except ValueError as exc:
            raise ValueError(f"Line {lineno}: expected 'word numerator/denominator'") from exc
        if set(bits) - {"0", "1"}:
            raise ValueError(f"Line {lineno}: word must contain only 0 and 1, got {bits!r}")
        if n is None:
            n = len(bits)
        elif len(bits) != n:
            raise ValueError(f"Line {lineno}: word length {len(bits)} differs from {n}")
        word = sum(1 << i for i, bit in enumerate(bits) if bit == "1")
        coeffs[word] = value
    if n is None:
        raise ValueError("Empty expansion dump")
    return BellExpansion(n, coeffs)
