"""Tests for Pandera sweep-table validation."""

import pandas as pd
import pytest

from ghz_robustness.schema_validation import SweepSchemaError, validate_sweep_frame


def _frame(rows):
    return pd.DataFrame(rows, columns=["channel", "n", "p", "max_bell"])


def test_validate_accepts_valid_sweep():
    frame = _frame(
        [
            ("dephasing", 2, 0.0, 1.414213562),
            ("dephasing", 2, 1.0, 1.0),
        ]
    )

    validated = validate_sweep_frame(frame)

    assert list(validated.columns) == ["channel", "n", "p", "max_bell"]
    assert len(validated) == 2


def test_validate_rejects_unknown_channel():
    with pytest.raises(SweepSchemaError) as excinfo:
        validate_sweep_frame(_frame([("amplitude", 2, 0.5, 1.0)]))

    assert excinfo.value.failure_cases is not None


def test_validate_rejects_out_of_range_values():
    frame = _frame(
        [
            ("depolarizing", 1, 0.5, 1.0),
            ("depolarizing", 2, 1.5, 1.0),
            ("depolarizing", 2, 0.5, -0.1),
        ]
    )

    with pytest.raises(SweepSchemaError):
        validate_sweep_frame(frame)


def test_validate_rejects_value_above_quantum_bound():
    """n=2 cannot exceed sqrt(2)."""
    with pytest.raises(SweepSchemaError):
        validate_sweep_frame(_frame([("dissipation", 2, 0.0, 1.5)]))


def test_validate_rejects_reordered_columns():
    frame = pd.DataFrame([{"n": 2, "channel": "dephasing", "p": 0.0, "max_bell": 1.0}])

    with pytest.raises(SweepSchemaError):
        validate_sweep_frame(frame)
