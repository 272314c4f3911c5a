"""Columnar table engine: CSV ingestion, type inference, the environment.

Tables are immutable after construction; every transform returns a new
table. Null is represented as ``None`` in every value vector, and the only
null literal recognized in CSV input is the empty string.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

CATEGORICAL_THRESHOLD = 50

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")
_BOOL_VALUES = {"true", "false"}


class TableError(Exception):
    """Base class for table-engine failures."""

    #: "data" for missing tables/columns and type mismatches, "io" for file
    #: problems. Feeds the protocol's error taxonomy tag.
    tag = "data"


class CsvFormatError(TableError):
    tag = "io"


class UnknownTableError(TableError):
    pass


class UnknownColumnError(TableError):
    pass


class TypeMismatchError(TableError):
    pass


@dataclass(frozen=True)
class Dtype:
    """Column type tag.

    ``categorical`` is a string column whose cardinality stays at or below
    the configured threshold; it carries no extra payload here.
    """

    tag: str  # integer | float | boolean | string | categorical

    def __post_init__(self) -> None:
        if self.tag not in {"integer", "float", "boolean", "string", "categorical"}:
            raise ValueError(f"unknown dtype tag: {self.tag}")

    @property
    def is_numeric(self) -> bool:
        return self.tag in ("integer", "float")

    @property
    def is_stringy(self) -> bool:
        return self.tag in ("string", "categorical")

    @property
    def family(self) -> str:
        if self.is_numeric:
            return "numeric"
        if self.is_stringy:
            return "string"
        return "boolean"


INTEGER = Dtype("integer")
FLOAT = Dtype("float")
BOOLEAN = Dtype("boolean")
STRING = Dtype("string")
CATEGORICAL = Dtype("categorical")


@dataclass(frozen=True)
class Column:
    name: str
    dtype: Dtype
    values: tuple  # value or None, one entry per row

    def null_count(self) -> int:
        return sum(1 for v in self.values if v is None)

    def non_null(self) -> list:
        return [v for v in self.values if v is not None]


class DataTable:
    """Named, typed, column-oriented table.

    Invariants enforced at construction: column names unique, all value
    vectors share one length, every value conforms to its column dtype or
    is None.
    """

    def __init__(self, name: str, columns: Iterable[Column]):
        cols = list(columns)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise TableError(f"duplicate column names in table {name!r}")
        lengths = {len(c.values) for c in cols}
        if len(lengths) > 1:
            raise TableError(f"ragged columns in table {name!r}: lengths {sorted(lengths)}")
        for c in cols:
            _check_conformance(c)
        self.name = name
        self.columns = cols
        self.n_rows = lengths.pop() if lengths else 0
        self._by_name = {c.name: c for c in cols}

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def has_column(self, name: str) -> bool:
        return name in self._by_name

    def column(self, name: str) -> Column:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownColumnError(
                f"table {self.name!r} has no column {name!r}"
            ) from None

    def row(self, i: int) -> tuple:
        return tuple(c.values[i] for c in self.columns)

    def rows(self) -> list[tuple]:
        return [self.row(i) for i in range(self.n_rows)]

    def head(self, n: int) -> "DataTable":
        return self.slice_rows(range(min(n, self.n_rows)))

    def slice_rows(self, indices: Iterable[int]) -> "DataTable":
        idx = list(indices)
        return DataTable(
            self.name,
            [
                Column(c.name, c.dtype, tuple(c.values[i] for i in idx))
                for c in self.columns
            ],
        )

    def rename_table(self, name: str) -> "DataTable":
        return DataTable(name, self.columns)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataTable):
            return NotImplemented
        return (
            self.column_names == other.column_names
            and [c.dtype for c in self.columns] == [c.dtype for c in other.columns]
            and [c.values for c in self.columns] == [c.values for c in other.columns]
        )

    def __repr__(self) -> str:
        return f"DataTable({self.name!r}, {self.n_rows}x{self.n_cols})"


def _check_conformance(col: Column) -> None:
    tag = col.dtype.tag
    for v in col.values:
        if v is None:
            continue
        ok = (
            (tag == "integer" and isinstance(v, int) and not isinstance(v, bool))
            or (tag == "float" and isinstance(v, float))
            or (tag == "boolean" and isinstance(v, bool))
            or (tag in ("string", "categorical") and isinstance(v, str))
        )
        if not ok:
            raise TableError(
                f"value {v!r} does not conform to dtype {tag} in column {col.name!r}"
            )
    if tag == "categorical":
        card = len(set(col.non_null()))
        if card > CATEGORICAL_THRESHOLD:
            raise TableError(
                f"categorical column {col.name!r} has cardinality {card} "
                f"above threshold {CATEGORICAL_THRESHOLD}"
            )


def infer_column_type(
    raw: list[str], categorical_threshold: int = CATEGORICAL_THRESHOLD
) -> Dtype:
    """Classify a vector of raw strings (empty string = null).

    Order of the rules matters: all-integer wins over float, numeric wins
    over boolean, and a string column is promoted to categorical only when
    its cardinality fits the threshold. A column with no non-null values
    stays plain string.
    """
    non_null = [s for s in raw if s != ""]
    if not non_null:
        return STRING
    if all(_INT_RE.match(s) for s in non_null):
        return INTEGER
    if all(_FLOAT_RE.match(s) for s in non_null):
        return FLOAT
    if all(s.lower() in _BOOL_VALUES for s in non_null):
        return BOOLEAN
    if len(set(non_null)) <= categorical_threshold:
        return CATEGORICAL
    return STRING


def _convert(raw: str, dtype: Dtype):
    if raw == "":
        return None
    if dtype.tag == "integer":
        return int(raw)
    if dtype.tag == "float":
        return float(raw)
    if dtype.tag == "boolean":
        return raw.lower() == "true"
    return raw


def column_from_strings(
    name: str, raw: list[str], categorical_threshold: int = CATEGORICAL_THRESHOLD
) -> Column:
    dtype = infer_column_type(raw, categorical_threshold)
    return Column(name, dtype, tuple(_convert(s, dtype) for s in raw))


def retype_string_column(col: Column, categorical_threshold: int = CATEGORICAL_THRESHOLD) -> Column:
    """Re-check the categorical/string split after values changed.

    Keeps the column in the string family; cell values are never
    re-inferred into numbers.
    """
    card = len(set(col.non_null()))
    if col.non_null() and card <= categorical_threshold:
        return Column(col.name, CATEGORICAL, col.values)
    return Column(col.name, STRING, col.values)


def load_csv(
    path: str,
    name: str,
    delimiter: str = ",",
    categorical_threshold: int = CATEGORICAL_THRESHOLD,
) -> DataTable:
    """Load an RFC-4180 CSV file (UTF-8, first row = header) as a DataTable.

    Column order follows the file. Ragged rows are rejected with their
    1-based row index.
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f, delimiter=delimiter)
            rows = list(reader)
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise CsvFormatError(f"{path}: empty file, expected a header row")
    header = rows[0]
    if len(set(header)) != len(header):
        raise CsvFormatError(f"{path}: duplicate column names in header")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(
                f"{path}: row {i} has {len(row)} fields, header has {len(header)}"
            )
    body = rows[1:]
    columns = [
        column_from_strings(
            col_name, [row[j] for row in body], categorical_threshold
        )
        for j, col_name in enumerate(header)
    ]
    return DataTable(name, columns)


@dataclass
class Environment:
    """Live variable set: identifier -> DataTable, versioned by cell runs.

    The version moves by exactly one per successful cell execution; the
    session module owns all mutation.
    """

    bindings: dict[str, DataTable] = field(default_factory=dict)
    version: int = 0

    def lookup(self, name: str) -> DataTable:
        try:
            return self.bindings[name]
        except KeyError:
            raise UnknownTableError(f"no table named {name!r}") from None

    def has(self, name: str) -> bool:
        return name in self.bindings

    def snapshot(self) -> dict[str, DataTable]:
        return dict(self.bindings)

    def commit(self, new_bindings: dict[str, DataTable]) -> None:
        self.bindings = new_bindings
        self.version += 1


def value_to_display(v: Optional[object]) -> str:
    """Render a cell for row samples, previews, and prefix matching."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
