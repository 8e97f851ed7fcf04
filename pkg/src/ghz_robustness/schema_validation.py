"""Schema validation for sweep tables using Pandera."""

from __future__ import annotations

import pandas as pd
import pandera as pa

from .channels_states import ChannelKind

SWEEP_COLUMNS = ["channel", "n", "p", "max_bell"]
CHANNEL_NAMES = [kind.value for kind in ChannelKind] + ["none"]

# Slack above 2^((n-1)/2) allowed for rounding in the optimizer.
QUANTUM_BOUND_SLACK = 1e-9


def _within_quantum_bound(df: pd.DataFrame) -> pd.Series:
    return df["max_bell"] <= 2.0 ** ((df["n"] - 1) / 2) + QUANTUM_BOUND_SLACK


SWEEP_SCHEMA = pa.DataFrameSchema(
    {
        "channel": pa.Column(str, pa.Check.isin(CHANNEL_NAMES), nullable=False),
        "n": pa.Column(int, pa.Check.ge(2), nullable=False, coerce=True),
        "p": pa.Column(float, pa.Check.in_range(0.0, 1.0), nullable=False, coerce=True),
        "max_bell": pa.Column(float, pa.Check.ge(0.0), nullable=False, coerce=True),
    },
    checks=[pa.Check(_within_quantum_bound, error="max_bell exceeds 2^((n-1)/2)")],
    strict=True,
    ordered=True,
)


class SweepSchemaError(ValueError):
    """Raised when a sweep table violates the schema."""

    def __init__(self, message: str, failure_cases: pd.DataFrame | None = None) -> None:
        super().__init__(message)
        self.failure_cases = failure_cases


def validate_sweep_frame(df: pd.DataFrame) -> pd.DataFrame:
    """Validate and coerce a sweep table.

    Args:
        df: Frame with columns channel, n, p, max_bell in that order.

    Returns:
        The coerced frame.

    Raises:
        SweepSchemaError: One or more rows violate the schema.
    """
    try:
        return SWEEP_SCHEMA.validate(df, lazy=True)
    except pa.errors.SchemaErrors as exc:
        raise SweepSchemaError(str(exc), exc.failure_cases) from exc
    except pa.errors.SchemaError as exc:
        raise SweepSchemaError(str(exc), exc.failure_cases) from exc
