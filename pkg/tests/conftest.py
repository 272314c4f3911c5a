"""Shared fixtures and table-building helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from wranglekit.table import (
    BOOLEAN,
    FLOAT,
    INTEGER,
    STRING,
    Column,
    DataTable,
    Dtype,
    Environment,
)

DATA_DIR = Path(__file__).parent / "data"


def infer_python_dtype(values) -> Dtype:
    """Dtype for plain Python values (tests build columns from literals)."""
    non_null = [v for v in values if v is not None]
    if not non_null:
        return STRING
    if all(isinstance(v, bool) for v in non_null):
        return BOOLEAN
    if all(isinstance(v, int) and not isinstance(v, bool) for v in non_null):
        return INTEGER
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in non_null):
        return FLOAT
    if all(isinstance(v, str) for v in non_null):
        if len(set(non_null)) <= 50:
            return Dtype("categorical")
        return STRING
    raise AssertionError(f"mixed test column: {values!r}")


def make_table(name: str, /, **columns) -> DataTable:
    """Build a table from keyword columns of Python values."""
    cols = []
    for col_name, values in columns.items():
        dtype = infer_python_dtype(values)
        if dtype.tag == "float":
            values = [float(v) if v is not None else None for v in values]
        cols.append(Column(col_name, dtype, tuple(values)))
    return DataTable(name, cols)


def make_env(*tables: DataTable) -> Environment:
    return Environment(bindings={t.name: t for t in tables})


@pytest.fixture
def rng():
    return random.Random(20260815)


@pytest.fixture
def data_dir():
    return DATA_DIR
