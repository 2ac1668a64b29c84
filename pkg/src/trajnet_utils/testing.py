"""
Assertion helpers for report tables and prediction arrays.

Usage in a test:
    from trajnet_utils.testing import validate, assert_in_range

    def test_per_class_table(table):
        validate(table, {
            "columns": {"class": "string", "ap": "double", "n_positive": "int64"},
            "not_null": ["class"],
            "unique": ["class"],
            "min_rows": 6,
        })
        assert_in_range(table, "ap", 0.0, 1.0)
"""

import math

import numpy as np
import pyarrow as pa


def _values(table: pa.Table, column: str) -> list:
    """Non-null, non-NaN values of a column."""
    return [v for v in table.column(column).to_pylist()
            if v is not None and not (isinstance(v, float) and math.isnan(v))]


# =============================================================================
# Column Validators
# =============================================================================

def assert_in_set(table: pa.Table, column: str, valid_values: set) -> None:
    invalid = [v for v in _values(table, column) if v not in valid_values]
    assert not invalid, f"Column '{column}' has unexpected values: {invalid[:5]}..."


def assert_in_range(table: pa.Table, column: str, min_val: float = None, max_val: float = None) -> None:
    """Assert all defined numeric values lie within [min_val, max_val]."""
    invalid = [v for v in _values(table, column)
               if (min_val is not None and v < min_val) or (max_val is not None and v > max_val)]
    assert not invalid, f"Column '{column}' has values outside [{min_val}, {max_val}]: {invalid[:5]}..."


def assert_nondecreasing(table: pa.Table, column: str) -> None:
    values = _values(table, column)
    drops = [(a, b) for a, b in zip(values, values[1:]) if b < a]
    assert not drops, f"Column '{column}' decreases: {drops[:5]}..."


# =============================================================================
# Array Validators
# =============================================================================

def assert_probability_rows(probs, atol: float = 1e-12) -> None:
    """Every row is a distribution: entries in [0, 1], row sums within atol of 1."""
    probs = np.asarray(probs, dtype=np.float64)
    assert probs.ndim == 2, f"expected a 2-D array of distributions, got shape {probs.shape}"
    assert np.all((probs >= 0.0) & (probs <= 1.0)), "probabilities outside [0, 1]"
    worst = float(np.max(np.abs(probs.sum(axis=1) - 1.0))) if len(probs) else 0.0
    assert worst <= atol, f"row sums deviate from 1 by up to {worst:.3e}"


# =============================================================================
# Schema Validator
# =============================================================================

def validate(table: pa.Table, schema: dict) -> None:
    """Validate table against schema. Raises AssertionError on failure.

    Schema keys (all optional):
        columns: {column_name: expected_type_substring}
        not_null: columns that must not contain nulls
        unique: column(s) forming a unique key
        min_rows / max_rows: row-count bounds
    """
    if (min_rows := schema.get("min_rows")) is not None:
        assert len(table) >= min_rows, f"Expected >= {min_rows} rows, got {len(table)}"
    if (max_rows := schema.get("max_rows")) is not None:
        assert len(table) <= max_rows, f"Expected <= {max_rows} rows, got {len(table)}"

    for col, expected_type in schema.get("columns", {}).items():
        assert col in table.column_names, f"Missing column: {col}"
        actual_type = str(table.schema.field(col).type)
        assert expected_type in actual_type, (
            f"Column '{col}': expected type containing '{expected_type}', got '{actual_type}'"
        )

    for col in schema.get("not_null", []):
        null_count = table.column(col).null_count
        assert null_count == 0, f"Column '{col}' has {null_count} null values"

    if unique := schema.get("unique"):
        if isinstance(unique, str):
            unique = [unique]
        rows = list(zip(*(table.column(col).to_pylist() for col in unique)))
        duplicates = len(rows) - len(set(rows))
        assert duplicates == 0, f"Columns {unique} have {duplicates} duplicate combinations"
