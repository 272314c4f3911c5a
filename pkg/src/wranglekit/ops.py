"""Wrangling operators: slot declarations, execution, predicate evaluation.

The operator set is a closed enum of 13 kinds. Each kind declares its slot
map; an op instance carries every declared slot, each either filled or the
MISSING sentinel. Execution is pure: ``apply_transform`` never touches the
environment, callers bind results.
"""

from __future__ import annotations

import json
from functools import partial
from dataclasses import dataclass, field
from typing import Optional, Union

from .table import (
    BOOLEAN,
    FLOAT,
    INTEGER,
    Column,
    DataTable,
    Dtype,
    Environment,
    TableError,
    TypeMismatchError,
    UnknownColumnError,
    retype_string_column,
    value_to_display,
)


class _Missing:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"


MISSING = _Missing()


class OpError(TableError):
    """Raised for malformed or under-filled operators."""


# --- expression / predicate nodes -------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    table: str
    column: str


@dataclass(frozen=True)
class Literal:
    value: object  # int | float | str | bool


Operand = Union[ColumnRef, Literal]


@dataclass(frozen=True)
class Compare:
    op: str  # == != < <= > >=
    left: Operand
    right: Operand


@dataclass(frozen=True)
class IsIn:
    column: ColumnRef
    values: tuple


@dataclass(frozen=True)
class StrContains:
    column: ColumnRef
    needle: str


@dataclass(frozen=True)
class BoolOp:
    op: str  # & |
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Not:
    child: "Predicate"


Predicate = Union[Compare, IsIn, StrContains, BoolOp, Not]


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: "ValueExpr"
    right: "ValueExpr"


ValueExpr = Union[ColumnRef, Literal, Arith]


# --- operator declarations ---------------------------------------------------

AGG_FUNCTIONS = ("sum", "mean", "min", "max", "count")


@dataclass(frozen=True)
class OpSpec:
    kind: str
    slots: tuple[str, ...]
    required: tuple[str, ...]
    defaults: dict = field(default_factory=dict)


OP_SPECS: dict[str, OpSpec] = {
    s.kind: s
    for s in [
        OpSpec(
            "merge",
            ("left", "right", "left_on", "right_on", "how"),
            ("left", "right", "left_on", "right_on"),
            {"how": "inner"},
        ),
        OpSpec("concat", ("tables",), ("tables",)),
        OpSpec("filter", ("table", "predicate"), ("table", "predicate")),
        OpSpec("select_columns", ("table", "columns"), ("table", "columns")),
        OpSpec(
            "assign_column",
            ("table", "target_column", "expr"),
            ("table", "target_column", "expr"),
        ),
        OpSpec(
            "sort_values",
            ("table", "by", "ascending"),
            ("table", "by"),
            {"ascending": True},
        ),
        OpSpec("groupby_agg", ("table", "by", "agg"), ("table", "by", "agg")),
        OpSpec(
            "fillna",
            ("table", "column", "value"),
            ("table", "value"),
            {"column": None},
        ),
        OpSpec(
            "str_replace",
            ("table", "column", "pattern", "replacement", "target_column"),
            ("table", "column", "pattern", "replacement"),
            {"target_column": None},
        ),
        OpSpec("rename", ("table", "mapping"), ("table", "mapping")),
        OpSpec(
            "drop_duplicates",
            ("table", "subset"),
            ("table",),
            {"subset": None},
        ),
        OpSpec("head", ("table", "n"), ("table",), {"n": 5}),
        OpSpec(
            "astype",
            ("table", "column", "dtype", "target_column"),
            ("table", "column", "dtype"),
            {"target_column": None},
        ),
    ]
}

OP_KINDS = tuple(OP_SPECS)


@dataclass
class TransformOp:
    """One wrangling operator with its slot map.

    ``args`` holds every declared slot of ``kind``; unfilled slots carry the
    MISSING sentinel (optional slots fall back to their default at
    execution time instead).
    """

    kind: str
    args: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        spec = OP_SPECS.get(self.kind)
        if spec is None:
            raise OpError(f"unknown operator kind: {self.kind}")
        for slot in spec.slots:
            self.args.setdefault(
                slot, spec.defaults.get(slot, MISSING) if slot not in spec.required else MISSING
            )
        extra = set(self.args) - set(spec.slots)
        if extra:
            raise OpError(f"{self.kind} has no slots {sorted(extra)}")

    @property
    def spec(self) -> OpSpec:
        return OP_SPECS[self.kind]

    def filled(self, slot: str) -> bool:
        return self.args[slot] is not MISSING

    def missing_required(self) -> list[str]:
        return [s for s in self.spec.required if not self.filled(s)]

    def require_full(self) -> None:
        missing = self.missing_required()
        if missing:
            raise OpError(f"{self.kind} is missing slots: {missing}")

    def get(self, slot: str):
        v = self.args[slot]
        if v is MISSING:
            v = self.spec.defaults.get(slot, MISSING)
        return v

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransformOp):
            return NotImplemented
        return self.kind == other.kind and self.args == other.args


# --- predicate evaluation ----------------------------------------------------

_ORDER_OPS = {"<", "<=", ">", ">="}


def _operand_values(operand: Operand, table: DataTable) -> list:
    if isinstance(operand, ColumnRef):
        return list(table.column(operand.column).values)
    return [operand.value] * table.n_rows


def _operand_family(operand: Operand, table: DataTable) -> Optional[str]:
    if isinstance(operand, ColumnRef):
        return table.column(operand.column).dtype.family
    return _value_family(operand.value)


def _value_family(v) -> Optional[str]:
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "numeric"
    if isinstance(v, str):
        return "string"
    return None


def _compare(op: str, a, b) -> bool:
    if a is None or b is None:
        return False
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def eval_predicate(pred: Predicate, table: DataTable) -> list[bool]:
    """Evaluate a predicate tree to a row mask.

    Comparisons against null are false; boolean negation of such a row is
    therefore true, matching elementwise mask semantics.
    """
    if isinstance(pred, Compare):
        fam_l = _operand_family(pred.left, table)
        fam_r = _operand_family(pred.right, table)
        if fam_l != fam_r:
            raise TypeMismatchError(
                f"cannot compare {fam_l} with {fam_r} using {pred.op}"
            )
        if pred.op in _ORDER_OPS and fam_l == "boolean":
            raise TypeMismatchError("ordering comparison on boolean values")
        lv = _operand_values(pred.left, table)
        rv = _operand_values(pred.right, table)
        return [_compare(pred.op, a, b) for a, b in zip(lv, rv)]
    if isinstance(pred, IsIn):
        col = table.column(pred.column.column)
        for v in pred.values:
            if _value_family(v) != col.dtype.family:
                raise TypeMismatchError(
                    f"isin value {v!r} does not match column family {col.dtype.family}"
                )
        allowed = set(pred.values)
        return [v is not None and v in allowed for v in col.values]
    if isinstance(pred, StrContains):
        col = table.column(pred.column.column)
        if not col.dtype.is_stringy:
            raise TypeMismatchError("str.contains on a non-string column")
        return [v is not None and pred.needle in v for v in col.values]
    if isinstance(pred, BoolOp):
        lm = eval_predicate(pred.left, table)
        rm = eval_predicate(pred.right, table)
        if pred.op == "&":
            return [a and b for a, b in zip(lm, rm)]
        return [a or b for a, b in zip(lm, rm)]
    if isinstance(pred, Not):
        return [not m for m in eval_predicate(pred.child, table)]
    raise OpError(f"not a predicate node: {pred!r}")


def predicate_columns(pred: Predicate) -> list[ColumnRef]:
    """Column references in a predicate, left-to-right, duplicates kept."""
    if isinstance(pred, Compare):
        return [o for o in (pred.left, pred.right) if isinstance(o, ColumnRef)]
    if isinstance(pred, (IsIn, StrContains)):
        return [pred.column]
    if isinstance(pred, BoolOp):
        return predicate_columns(pred.left) + predicate_columns(pred.right)
    if isinstance(pred, Not):
        return predicate_columns(pred.child)
    return []


def predicate_literals(pred: Predicate) -> list[tuple[Optional[str], object]]:
    """(column, literal) pairs for preview bolding of filter values."""
    if isinstance(pred, Compare):
        col = None
        lit = None
        if isinstance(pred.left, ColumnRef) and isinstance(pred.right, Literal):
            col, lit = pred.left.column, pred.right.value
        elif isinstance(pred.right, ColumnRef) and isinstance(pred.left, Literal):
            col, lit = pred.right.column, pred.left.value
        return [(col, lit)] if lit is not None else []
    if isinstance(pred, IsIn):
        return [(pred.column.column, v) for v in pred.values]
    if isinstance(pred, StrContains):
        return [(pred.column.column, pred.needle)]
    if isinstance(pred, BoolOp):
        return predicate_literals(pred.left) + predicate_literals(pred.right)
    if isinstance(pred, Not):
        return predicate_literals(pred.child)
    return []


# --- value expressions -------------------------------------------------------


def expr_columns(expr: ValueExpr) -> list[ColumnRef]:
    if isinstance(expr, ColumnRef):
        return [expr]
    if isinstance(expr, Arith):
        return expr_columns(expr.left) + expr_columns(expr.right)
    return []


# --- operation-level mention extraction --------------------------------------

# Slots whose value names a table.
TABLE_SLOTS = ("table", "left", "right", "tables")

# For each kind, the slots holding column names and the table slot each one
# refers to.  Used to resolve which table a column argument belongs to.
COLUMN_SLOT_TABLES: dict[str, dict[str, str]] = {
    "merge": {"left_on": "left", "right_on": "right"},
    "select_columns": {"columns": "table"},
    "assign_column": {"target_column": "table"},
    "sort_values": {"by": "table"},
    "groupby_agg": {"by": "table", "agg": "table"},
    "fillna": {"column": "table"},
    "str_replace": {"column": "table", "target_column": "table"},
    "rename": {"mapping": "table"},
    "drop_duplicates": {"subset": "table"},
    "astype": {"column": "table"},
}


def filled_tables(op: "TransformOp") -> list[str]:
    """Table names already bound in the operation's slots, in slot order."""
    names: list[str] = []
    for slot in TABLE_SLOTS:
        value = op.args.get(slot)
        if isinstance(value, str) and value not in names:
            names.append(value)
        elif isinstance(value, (list, tuple)):
            names.extend(v for v in value if isinstance(v, str) and v not in names)
    return names


def op_column_refs(op: "TransformOp") -> list[tuple[str, str]]:
    """(table, column) pairs the operation's filled slots refer to."""
    refs: list[tuple[str, str]] = []

    def add(table, column):
        if (
            isinstance(table, str)
            and isinstance(column, str)
            and (table, column) not in refs
        ):
            refs.append((table, column))

    mapping = COLUMN_SLOT_TABLES.get(op.kind, {})
    for column_slot, table_slot in mapping.items():
        columns = op.args.get(column_slot)
        table = op.args.get(table_slot)
        if columns is MISSING or table is MISSING:
            continue
        values = columns if isinstance(columns, (list, tuple)) else [columns]
        for value in values:
            if isinstance(value, dict):
                for key in value:
                    add(table, key)
            elif isinstance(value, tuple) and len(value) == 2:
                add(table, value[0])  # (column, aggregation) pair
            else:
                add(table, value)
    table = op.args.get("table")
    predicate = op.args.get("predicate")
    if predicate is not None and predicate is not MISSING:
        for ref in predicate_columns(predicate):
            add(table, ref.column)
    expr = op.args.get("expr")
    if expr is not None and expr is not MISSING:
        for ref in expr_columns(expr):
            add(ref.table, ref.column)
    return refs


def _expr_dtype(expr: ValueExpr, table: DataTable) -> Dtype:
    if isinstance(expr, ColumnRef):
        return table.column(expr.column).dtype
    if isinstance(expr, Literal):
        fam = _value_family(expr.value)
        if fam == "numeric":
            return FLOAT if isinstance(expr.value, float) else INTEGER
        if fam == "boolean":
            return BOOLEAN
        return Dtype("string")
    left = _expr_dtype(expr.left, table)
    right = _expr_dtype(expr.right, table)
    if not (left.is_numeric and right.is_numeric):
        raise TypeMismatchError(
            f"arithmetic {expr.op} needs numeric operands, got {left.tag}/{right.tag}"
        )
    if expr.op == "/":
        return FLOAT
    if left.tag == "float" or right.tag == "float":
        return FLOAT
    return INTEGER


def eval_expr(expr: ValueExpr, table: DataTable) -> tuple[list, Dtype]:
    """Evaluate a value expression over a table: (values, result dtype).

    Null operands and division by zero both yield null.
    """
    dtype = _expr_dtype(expr, table)
    if isinstance(expr, ColumnRef):
        return list(table.column(expr.column).values), dtype
    if isinstance(expr, Literal):
        return [expr.value] * table.n_rows, dtype
    lv, _ = eval_expr(expr.left, table)
    rv, _ = eval_expr(expr.right, table)
    out = []
    for a, b in zip(lv, rv):
        if a is None or b is None:
            out.append(None)
        elif expr.op == "+":
            out.append(a + b)
        elif expr.op == "-":
            out.append(a - b)
        elif expr.op == "*":
            out.append(a * b)
        else:
            out.append(a / b if b != 0 else None)
    if dtype.tag == "float":
        out = [float(v) if v is not None else None for v in out]
    return out, dtype


# --- execution ---------------------------------------------------------------


def apply_transform(op: TransformOp, env: Environment) -> DataTable:
    """Execute a fully-filled operator against the environment.

    Returns the result table; the environment is never mutated here.
    """
    op.require_full()
    handler = _HANDLERS[op.kind]
    return handler(op, env)


def _columns_as_list(v) -> list[str]:
    return [v] if isinstance(v, str) else list(v)


def _exec_merge(op: TransformOp, env: Environment) -> DataTable:
    left = env.lookup(op.get("left"))
    right = env.lookup(op.get("right"))
    left_on, right_on = op.get("left_on"), op.get("right_on")
    how = op.get("how")
    if how not in ("inner", "left", "right", "outer"):
        raise OpError(f"unsupported join type: {how!r}")
    lk = left.column(left_on)
    rk = right.column(right_on)
    if lk.dtype.family != rk.dtype.family:
        raise TypeMismatchError(
            f"join key dtype mismatch: {left_on} is {lk.dtype.tag}, "
            f"{right_on} is {rk.dtype.tag}"
        )
    index: dict = {}
    for j, v in enumerate(rk.values):
        if v is not None:
            index.setdefault(v, []).append(j)
    pairs: list[tuple[Optional[int], Optional[int]]] = []
    matched_right: set[int] = set()
    for i, v in enumerate(lk.values):
        matches = index.get(v, []) if v is not None else []
        if matches:
            for j in matches:
                pairs.append((i, j))
                matched_right.add(j)
        elif how in ("left", "outer"):
            pairs.append((i, None))
    if how in ("right", "outer"):
        for j in range(right.n_rows):
            if j not in matched_right:
                pairs.append((None, j))

    left_names = set(left.column_names)
    right_names = set(right.column_names)
    columns: list[Column] = []
    for c in left.columns:
        name = c.name + "_x" if c.name in right_names else c.name
        vals = tuple(c.values[i] if i is not None else None for i, _ in pairs)
        columns.append(Column(name, c.dtype, vals))
    for c in right.columns:
        name = c.name + "_y" if c.name in left_names else c.name
        vals = tuple(c.values[j] if j is not None else None for _, j in pairs)
        columns.append(Column(name, c.dtype, vals))
    return DataTable(left.name, columns)


def _unify_dtype(a: Dtype, b: Dtype) -> Dtype:
    if a == b:
        return a
    if a.is_numeric and b.is_numeric:
        return FLOAT
    if a.is_stringy and b.is_stringy:
        return Dtype("string")
    raise TypeMismatchError(f"cannot concatenate {a.tag} with {b.tag}")


def _exec_concat(op: TransformOp, env: Environment) -> DataTable:
    names = op.get("tables")
    if not names:
        raise OpError("concat needs at least one table")
    tables = [env.lookup(n) for n in names]
    first = tables[0]
    for t in tables[1:]:
        if set(t.column_names) != set(first.column_names):
            raise OpError(
                f"concat schema mismatch: {t.name} columns differ from {first.name}"
            )
    columns = []
    for col_name in first.column_names:
        dtype = first.column(col_name).dtype
        for t in tables[1:]:
            dtype = _unify_dtype(dtype, t.column(col_name).dtype)
        values: list = []
        for t in tables:
            vals = t.column(col_name).values
            if dtype.tag == "float":
                vals = tuple(float(v) if v is not None else None for v in vals)
            values.extend(vals)
        col = Column(col_name, dtype, tuple(values))
        if dtype.is_stringy:
            col = retype_string_column(col)
        columns.append(col)
    return DataTable(first.name, columns)


def _exec_filter(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    mask = eval_predicate(op.get("predicate"), table)
    return table.slice_rows(i for i, keep in enumerate(mask) if keep)


def _exec_select(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    selected = [table.column(name) for name in op.get("columns")]
    return DataTable(table.name, selected)


def _replace_or_append(table: DataTable, col: Column) -> DataTable:
    if table.has_column(col.name):
        columns = [col if c.name == col.name else c for c in table.columns]
    else:
        columns = list(table.columns) + [col]
    return DataTable(table.name, columns)


def _exec_assign(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    values, dtype = eval_expr(op.get("expr"), table)
    col = Column(op.get("target_column"), dtype, tuple(values))
    if dtype.is_stringy:
        col = retype_string_column(col)
    return _replace_or_append(table, col)


def _exec_sort(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    by = _columns_as_list(op.get("by"))
    ascending = bool(op.get("ascending"))
    key_cols = [table.column(c) for c in by]

    def keyfunc(i: int):
        parts = []
        for c in key_cols:
            v = c.values[i]
            if ascending:
                parts.extend((v is None, 0 if v is None else v))
            else:
                parts.extend((v is not None, 0 if v is None else v))
        return tuple(parts)

    order = sorted(range(table.n_rows), key=keyfunc, reverse=not ascending)
    return table.slice_rows(order)


def _agg_value(fn: str, col: Column, indices: list[int]):
    values = [col.values[i] for i in indices if col.values[i] is not None]
    if fn == "count":
        return len(values)
    if fn == "sum":
        if not col.dtype.is_numeric:
            raise TypeMismatchError(f"sum on non-numeric column {col.name!r}")
        return sum(values) if values else 0
    if fn == "mean":
        if not col.dtype.is_numeric:
            raise TypeMismatchError(f"mean on non-numeric column {col.name!r}")
        return sum(values) / len(values) if values else None
    if fn in ("min", "max"):
        if col.dtype.tag == "boolean":
            raise TypeMismatchError(f"{fn} on boolean column {col.name!r}")
        if not values:
            return None
        return min(values) if fn == "min" else max(values)
    raise OpError(f"unsupported aggregation: {fn!r}")


def _agg_dtype(fn: str, col: Column) -> Dtype:
    if fn == "count":
        return INTEGER
    if fn == "mean":
        return FLOAT
    return col.dtype


def _exec_groupby(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    by = _columns_as_list(op.get("by"))
    agg = list(op.get("agg"))
    key_cols = [table.column(c) for c in by]
    for col_name, fn in agg:
        table.column(col_name)
        if fn not in AGG_FUNCTIONS:
            raise OpError(f"unsupported aggregation: {fn!r}")
    targets = [c for c, _ in agg]
    if len(set(targets)) != len(targets):
        raise OpError("duplicate aggregation target column")

    groups: dict[tuple, list[int]] = {}
    for i in range(table.n_rows):
        key = tuple(c.values[i] for c in key_cols)
        if any(k is None for k in key):
            continue
        groups.setdefault(key, []).append(i)

    columns: list[Column] = []
    keys = list(groups)  # first-occurrence order
    for pos, c in enumerate(key_cols):
        columns.append(Column(c.name, c.dtype, tuple(k[pos] for k in keys)))
    for col_name, fn in agg:
        col = table.column(col_name)
        vals = tuple(_agg_value(fn, col, groups[k]) for k in keys)
        dtype = _agg_dtype(fn, col)
        if dtype.tag == "float":
            vals = tuple(float(v) if v is not None else None for v in vals)
        out = Column(col_name, dtype, vals)
        if dtype.is_stringy:
            out = retype_string_column(out)
        columns.append(out)
    return DataTable(table.name, columns)


def _fill_column(col: Column, value) -> Column:
    fam = _value_family(value)
    if fam != col.dtype.family:
        raise TypeMismatchError(
            f"fill value {value!r} does not match column {col.name!r} ({col.dtype.tag})"
        )
    dtype = col.dtype
    values = list(col.values)
    if dtype.tag == "integer" and isinstance(value, float):
        dtype = FLOAT
        values = [float(v) if v is not None else None for v in values]
    if dtype.tag == "float" and isinstance(value, int):
        value = float(value)
    out = Column(col.name, dtype, tuple(value if v is None else v for v in values))
    if out.dtype.is_stringy:
        out = retype_string_column(out)
    return out


def _exec_fillna(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    value = op.get("value")
    if value is None:
        raise OpError("fillna needs a non-null value")
    column = op.get("column")
    if column is not None:
        return _replace_or_append(table, _fill_column(table.column(column), value))
    fam = _value_family(value)
    columns = [
        _fill_column(c, value) if c.dtype.family == fam else c for c in table.columns
    ]
    return DataTable(table.name, columns)


def _exec_str_replace(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    col = table.column(op.get("column"))
    if not col.dtype.is_stringy:
        raise TypeMismatchError(f"str.replace on non-string column {col.name!r}")
    pattern, replacement = op.get("pattern"), op.get("replacement")
    target = op.get("target_column") or col.name
    values = tuple(
        v.replace(pattern, replacement) if v is not None else None for v in col.values
    )
    out = retype_string_column(Column(target, col.dtype, values))
    return _replace_or_append(table, out)


def _exec_rename(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    mapping = dict(op.get("mapping"))
    for old in mapping:
        table.column(old)
    columns = [
        Column(mapping.get(c.name, c.name), c.dtype, c.values) for c in table.columns
    ]
    return DataTable(table.name, columns)


def _exec_drop_duplicates(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    subset = op.get("subset")
    cols = (
        [table.column(c) for c in _columns_as_list(subset)]
        if subset is not None
        else table.columns
    )
    seen: set = set()
    keep = []
    for i in range(table.n_rows):
        key = tuple(c.values[i] for c in cols)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return table.slice_rows(keep)


def _exec_head(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    n = op.get("n")
    if not isinstance(n, int) or n < 0:
        raise OpError(f"head needs a non-negative count, got {n!r}")
    return table.head(n)


_DTYPE_ALIASES = {
    "int": "integer",
    "integer": "integer",
    "float": "float",
    "str": "string",
    "string": "string",
    "bool": "boolean",
    "boolean": "boolean",
}


def _cast(v, target: str):
    if v is None:
        return None
    if target == "integer":
        if isinstance(v, bool):
            return int(v)
        if isinstance(v, (int, float)):
            return int(v)
        s = v.strip()
        try:
            return int(s)
        except ValueError:
            raise TypeMismatchError(f"cannot cast {v!r} to int") from None
    if target == "float":
        if isinstance(v, bool):
            return float(v)
        if isinstance(v, (int, float)):
            return float(v)
        try:
            return float(v.strip())
        except ValueError:
            raise TypeMismatchError(f"cannot cast {v!r} to float") from None
    if target == "string":
        return value_to_display(v)
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return v != 0
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    raise TypeMismatchError(f"cannot cast {v!r} to bool")


def _exec_astype(op: TransformOp, env: Environment) -> DataTable:
    table = env.lookup(op.get("table"))
    col = table.column(op.get("column"))
    dtype_name = op.get("dtype")
    target_tag = _DTYPE_ALIASES.get(dtype_name)
    if target_tag is None:
        raise OpError(f"unknown dtype name: {dtype_name!r}")
    target = op.get("target_column") or col.name
    values = tuple(_cast(v, target_tag) for v in col.values)
    out = Column(target, Dtype(target_tag), values)
    if out.dtype.is_stringy:
        out = retype_string_column(out)
    return _replace_or_append(table, out)


_HANDLERS = {
    "merge": _exec_merge,
    "concat": _exec_concat,
    "filter": _exec_filter,
    "select_columns": _exec_select,
    "assign_column": _exec_assign,
    "sort_values": _exec_sort,
    "groupby_agg": _exec_groupby,
    "fillna": _exec_fillna,
    "str_replace": _exec_str_replace,
    "rename": _exec_rename,
    "drop_duplicates": _exec_drop_duplicates,
    "head": _exec_head,
    "astype": _exec_astype,
}


# --- rendering ---------------------------------------------------------------


_dumps = partial(json.dumps, ensure_ascii=False)


def render_literal(v) -> str:
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, str):
        return _dumps(v)
    return repr(v)


def _render_operand(o: Operand) -> str:
    if isinstance(o, ColumnRef):
        return f'{o.table}[{_dumps(o.column)}]'
    return render_literal(o.value)


def render_predicate(pred: Predicate, top: bool = True) -> str:
    if isinstance(pred, Compare):
        text = f"{_render_operand(pred.left)} {pred.op} {_render_operand(pred.right)}"
        return text if top else f"({text})"
    if isinstance(pred, IsIn):
        items = ", ".join(render_literal(v) for v in pred.values)
        return f"{_render_operand(pred.column)}.isin([{items}])"
    if isinstance(pred, StrContains):
        return f"{_render_operand(pred.column)}.str.contains({_dumps(pred.needle)})"
    if isinstance(pred, BoolOp):
        text = (
            f"{render_predicate(pred.left, top=False)} {pred.op} "
            f"{render_predicate(pred.right, top=False)}"
        )
        return text if top else f"({text})"
    if isinstance(pred, Not):
        return f"~{render_predicate(pred.child, top=False)}"
    raise OpError(f"cannot render predicate node: {pred!r}")


def render_expr(expr: ValueExpr, top: bool = True) -> str:
    if isinstance(expr, ColumnRef):
        return _render_operand(expr)
    if isinstance(expr, Literal):
        return render_literal(expr.value)
    text = f"{render_expr(expr.left, top=False)} {expr.op} {render_expr(expr.right, top=False)}"
    return text if top else f"({text})"


def _render_column_list(cols) -> str:
    return "[" + ", ".join(_dumps(c) for c in _columns_as_list(cols)) + "]"


def render_op(op: TransformOp) -> str:
    """Render a fully-filled op back to dialect source (no binding)."""
    op.require_full()
    k = op.kind
    if k == "merge":
        text = (
            f'{op.get("left")}.merge({op.get("right")}, '
            f'left_on={_dumps(op.get("left_on"))}, '
            f'right_on={_dumps(op.get("right_on"))}'
        )
        if op.get("how") != "inner":
            text += f', how={_dumps(op.get("how"))}'
        return text + ")"
    if k == "concat":
        return "pd.concat([" + ", ".join(op.get("tables")) + "])"
    if k == "filter":
        return f'{op.get("table")}[{render_predicate(op.get("predicate"))}]'
    if k == "select_columns":
        return f'{op.get("table")}[{_render_column_list(op.get("columns"))}]'
    if k == "assign_column":
        return render_expr(op.get("expr"))
    if k == "sort_values":
        by = op.get("by")
        by_text = _dumps(by) if isinstance(by, str) else _render_column_list(by)
        text = f'{op.get("table")}.sort_values(by={by_text}'
        if op.get("ascending") is not True:
            text += ", ascending=False"
        return text + ")"
    if k == "groupby_agg":
        by = op.get("by")
        by_text = _dumps(by) if isinstance(by, str) else _render_column_list(by)
        agg = list(op.get("agg"))
        if len(agg) == 1:
            col, fn = agg[0]
            return f'{op.get("table")}.groupby({by_text})[{_dumps(col)}].{fn}()'
        body = ", ".join(f"{_dumps(c)}: {_dumps(fn)}" for c, fn in agg)
        return f'{op.get("table")}.groupby({by_text}).agg({{{body}}})'
    if k == "fillna":
        base = op.get("table")
        if op.get("column") is not None:
            base = f'{base}[{_dumps(op.get("column"))}]'
        return f'{base}.fillna({render_literal(op.get("value"))})'
    if k == "str_replace":
        return (
            f'{op.get("table")}[{_dumps(op.get("column"))}].str.replace('
            f'{_dumps(op.get("pattern"))}, {_dumps(op.get("replacement"))})'
        )
    if k == "rename":
        body = ", ".join(
            f"{_dumps(a)}: {_dumps(b)}" for a, b in op.get("mapping").items()
        )
        return f'{op.get("table")}.rename(columns={{{body}}})'
    if k == "drop_duplicates":
        subset = op.get("subset")
        if subset is None:
            return f'{op.get("table")}.drop_duplicates()'
        return f'{op.get("table")}.drop_duplicates(subset={_render_column_list(subset)})'
    if k == "head":
        n = op.get("n")
        arg = "" if n == 5 else str(n)
        return f'{op.get("table")}.head({arg})'
    if k == "astype":
        return (
            f'{op.get("table")}[{_dumps(op.get("column"))}].astype('
            f'{_dumps(op.get("dtype"))})'
        )
    raise OpError(f"cannot render kind {k!r}")
