"""Statement grammar: parsing, lowering to operators, rendering, execution.

A cell is a sequence of statements, one operator per statement. Every
statement binds a name:

    name = load_csv("file.csv")          ingestion
    name = <operator expression>         table-valued operators
    name["col"] = <value expression>     column assignment
    name["col"] = name["col"].fillna(v)  column-rewriting operators

Operator expressions are a closed set of call/subscript shapes; anything
else is a parse error, never a silent fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import tokens as tk
from .ops import (
    AGG_FUNCTIONS,
    Arith,
    BoolOp,
    ColumnRef,
    Compare,
    IsIn,
    Literal,
    Not,
    Predicate,
    StrContains,
    TransformOp,
    ValueExpr,
    apply_transform,
    render_expr,
    render_literal,
    render_op,
)
from .table import DataTable, Environment, TableError, load_csv

_DTYPE_NAMES = ("int", "integer", "float", "str", "string", "bool", "boolean")


class ParseError(TableError):
    tag = "parse"


# --- expression AST (parser-level, pre-lowering) -----------------------------


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Attr:
    obj: "Expr"
    name: str


@dataclass(frozen=True)
class Call:
    fn: "Expr"
    args: tuple = ()
    kwargs: tuple = ()  # of (name, Expr)


@dataclass(frozen=True)
class Subscript:
    obj: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class DictLit:
    pairs: tuple  # of (Expr, Expr)


@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class BinExpr:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryExpr:
    op: str
    operand: "Expr"


Expr = Union[Name, Attr, Call, Subscript, ListLit, DictLit, Const, BinExpr, UnaryExpr]

_PRECEDENCE = {
    "|": 1,
    "&": 2,
    "==": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
}

_COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, toks: list[tk.Token], source: str):
        self.toks = toks
        self.source = source
        self.pos = 0

    def peek(self) -> Optional[tk.Token]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def advance(self) -> tk.Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of statement")
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> tk.Token:
        tok = self.peek()
        if tok is None or not tok.is_op(text):
            got = tok.text if tok else "end of statement"
            raise ParseError(f"expected {text!r}, got {got!r}")
        return self.advance()

    def expect_name(self) -> tk.Token:
        tok = self.peek()
        if tok is None or tok.type != tk.NAME:
            got = tok.text if tok else "end of statement"
            raise ParseError(f"expected a name, got {got!r}")
        return self.advance()

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    # expressions -------------------------------------------------------

    def parse_expr(self, min_prec: int = 1) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is None or tok.type != tk.OP or tok.text not in _PRECEDENCE:
                break
            prec = _PRECEDENCE[tok.text]
            if prec < min_prec:
                break
            self.advance()
            right = self.parse_expr(prec + 1)
            left = BinExpr(tok.text, left, right)
        return left

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok.is_op("~"):
            self.advance()
            return UnaryExpr("~", self.parse_unary())
        if tok is not None and tok.is_op("-"):
            self.advance()
            return UnaryExpr("-", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        node = self.parse_atom()
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.is_op("."):
                self.advance()
                node = Attr(node, self.expect_name().text)
            elif tok.is_op("("):
                self.advance()
                args, kwargs = self.parse_call_args()
                node = Call(node, tuple(args), tuple(kwargs))
            elif tok.is_op("["):
                self.advance()
                index = self.parse_expr()
                self.expect_op("]")
                node = Subscript(node, index)
            else:
                break
        return node

    def parse_call_args(self) -> tuple[list, list]:
        args: list[Expr] = []
        kwargs: list[tuple[str, Expr]] = []
        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError("unclosed call")
            if tok.is_op(")"):
                self.advance()
                return args, kwargs
            nxt = self.toks[self.pos + 1] if self.pos + 1 < len(self.toks) else None
            if tok.type == tk.NAME and nxt is not None and nxt.is_op("="):
                self.advance()
                self.advance()
                kwargs.append((tok.text, self.parse_expr()))
            else:
                if kwargs:
                    raise ParseError("positional argument after keyword argument")
                args.append(self.parse_expr())
            tok = self.peek()
            if tok is not None and tok.is_op(","):
                self.advance()

    def parse_atom(self) -> Expr:
        tok = self.advance()
        if tok.type == tk.NAME:
            if tok.text in tk.KEYWORD_LITERALS:
                return Const(tk.KEYWORD_LITERALS[tok.text])
            return Name(tok.text)
        if tok.type == tk.NUMBER:
            return Const(tk.number_value(tok))
        if tok.type == tk.STRING:
            if not tok.terminated:
                raise ParseError("unterminated string")
            return Const(tok.value)
        if tok.is_op("("):
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if tok.is_op("["):
            items = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise ParseError("unclosed list")
                if nxt.is_op("]"):
                    self.advance()
                    return ListLit(tuple(items))
                items.append(self.parse_expr())
                nxt = self.peek()
                if nxt is not None and nxt.is_op(","):
                    self.advance()
        if tok.is_op("{"):
            pairs = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise ParseError("unclosed dict")
                if nxt.is_op("}"):
                    self.advance()
                    return DictLit(tuple(pairs))
                key = self.parse_expr()
                self.expect_op(":")
                pairs.append((key, self.parse_expr()))
                nxt = self.peek()
                if nxt is not None and nxt.is_op(","):
                    self.advance()
        raise ParseError(f"unexpected token {tok.text!r}")


# --- statements ---------------------------------------------------------------


@dataclass
class LoadCsvStatement:
    binding: str
    path: str
    delimiter: str = ","


@dataclass
class OpStatement:
    binding: str
    op: TransformOp


Statement = Union[LoadCsvStatement, OpStatement]


def parse_statement(text: str) -> Statement:
    """Parse one complete statement. Raises ParseError on anything partial."""
    toks = tk.tokenize(text)
    if not toks:
        raise ParseError("empty statement")
    p = _Parser(toks, text)
    name = p.expect_name().text
    nxt = p.peek()
    if nxt is not None and nxt.is_op("["):
        p.advance()
        col_tok = p.advance()
        if col_tok.type != tk.STRING or not col_tok.terminated:
            raise ParseError("column assignment needs a quoted column name")
        p.expect_op("]")
        p.expect_op("=")
        rhs = p.parse_expr()
        if not p.at_end():
            raise ParseError(f"trailing input after statement: {p.peek().text!r}")
        return _lower_column_assign(name, col_tok.value, rhs)
    p.expect_op("=")
    rhs = p.parse_expr()
    if not p.at_end():
        raise ParseError(f"trailing input after statement: {p.peek().text!r}")
    return _lower_binding(name, rhs)


def statement_is_complete(text: str) -> bool:
    try:
        parse_statement(text)
        return True
    except TableError:
        return False


# --- lowering helpers ---------------------------------------------------------


def _literal_value(expr: Expr):
    """Constant value of a literal expression, or raise."""
    if isinstance(expr, Const):
        return expr.value
    if (
        isinstance(expr, UnaryExpr)
        and expr.op == "-"
        and isinstance(expr.operand, Const)
        and isinstance(expr.operand.value, (int, float))
        and not isinstance(expr.operand.value, bool)
    ):
        return -expr.operand.value
    raise ParseError(f"expected a literal value, got {expr!r}")


def _is_literal(expr: Expr) -> bool:
    try:
        _literal_value(expr)
        return True
    except TableError:
        return False


def _match_colref(expr: Expr) -> Optional[ColumnRef]:
    if (
        isinstance(expr, Subscript)
        and isinstance(expr.obj, Name)
        and isinstance(expr.index, Const)
        and isinstance(expr.index.value, str)
    ):
        return ColumnRef(expr.obj.id, expr.index.value)
    return None


def _string_value(expr: Expr, what: str) -> str:
    if isinstance(expr, Const) and isinstance(expr.value, str):
        return expr.value
    raise ParseError(f"{what} must be a quoted string")


def _string_list(expr: Expr, what: str) -> list[str]:
    if isinstance(expr, ListLit):
        return [_string_value(item, what) for item in expr.items]
    raise ParseError(f"{what} must be a list of quoted strings")


def _string_or_list(expr: Expr, what: str):
    if isinstance(expr, Const) and isinstance(expr.value, str):
        return expr.value
    return _string_list(expr, what)


def _kwargs_dict(kwargs: tuple, allowed: tuple[str, ...], kind: str) -> dict:
    out = {}
    for key, value in kwargs:
        if key not in allowed:
            raise ParseError(f"{kind} does not take a {key!r} argument")
        if key in out:
            raise ParseError(f"duplicate argument {key!r}")
        out[key] = value
    return out


def lower_predicate(expr: Expr, table: str) -> Predicate:
    """Lower a parsed expression to a predicate over one table's columns."""
    if isinstance(expr, BinExpr) and expr.op in ("&", "|"):
        return BoolOp(
            expr.op, lower_predicate(expr.left, table), lower_predicate(expr.right, table)
        )
    if isinstance(expr, UnaryExpr) and expr.op == "~":
        return Not(lower_predicate(expr.operand, table))
    if isinstance(expr, BinExpr) and expr.op in _COMPARISONS:
        return Compare(
            expr.op,
            _lower_operand(expr.left, table),
            _lower_operand(expr.right, table),
        )
    if isinstance(expr, Call) and isinstance(expr.fn, Attr):
        base = expr.fn.obj
        if expr.fn.name == "isin":
            col = _require_table_colref(base, table, "isin")
            if len(expr.args) != 1 or expr.kwargs:
                raise ParseError("isin takes a single list of values")
            if not isinstance(expr.args[0], ListLit):
                raise ParseError("isin takes a list of values")
            values = tuple(_literal_value(v) for v in expr.args[0].items)
            return IsIn(col, values)
        if (
            expr.fn.name == "contains"
            and isinstance(base, Attr)
            and base.name == "str"
        ):
            col = _require_table_colref(base.obj, table, "str.contains")
            if len(expr.args) != 1 or expr.kwargs:
                raise ParseError("str.contains takes a single string")
            return StrContains(col, _string_value(expr.args[0], "str.contains pattern"))
    raise ParseError("expression is not a row predicate")


def _require_table_colref(expr: Expr, table: str, what: str) -> ColumnRef:
    col = _match_colref(expr)
    if col is None:
        raise ParseError(f'{what} needs a column reference like {table}["col"]')
    if col.table != table:
        raise ParseError(
            f"{what} references table {col.table!r}; only {table!r} is in scope"
        )
    return col


def _lower_operand(expr: Expr, table: str):
    col = _match_colref(expr)
    if col is not None:
        if col.table != table:
            raise ParseError(
                f"comparison references table {col.table!r}; only {table!r} is in scope"
            )
        return col
    return Literal(_literal_value(expr))


def lower_value_expr(expr: Expr, table: str) -> ValueExpr:
    """Lower a parsed expression to a column-valued expression over ``table``."""
    col = _match_colref(expr)
    if col is not None:
        if col.table != table:
            raise ParseError(
                f"value expression references table {col.table!r}; "
                f"only {table!r} is in scope"
            )
        return col
    if isinstance(expr, BinExpr) and expr.op in ("+", "-", "*", "/"):
        return Arith(
            expr.op,
            lower_value_expr(expr.left, table),
            lower_value_expr(expr.right, table),
        )
    if _is_literal(expr):
        return Literal(_literal_value(expr))
    raise ParseError("expression is not a column value expression")


def _callee_chain(expr: Expr) -> Optional[tuple]:
    """Flatten Attr chains over a Name: pd.merge -> ("pd", "merge")."""
    parts: list[str] = []
    node = expr
    while isinstance(node, Attr):
        parts.append(node.name)
        node = node.obj
    if isinstance(node, Name):
        parts.append(node.id)
        return tuple(reversed(parts))
    return None


def lower_op_expr(expr: Expr) -> TransformOp:
    """Lower a complete right-hand side to a TransformOp, or raise."""
    # subscript shapes: filter and column projection
    if isinstance(expr, Subscript) and isinstance(expr.obj, Name):
        table = expr.obj.id
        if isinstance(expr.index, ListLit):
            return TransformOp(
                "select_columns",
                {"table": table, "columns": _string_list(expr.index, "column list")},
            )
        if isinstance(expr.index, Const) and isinstance(expr.index.value, str):
            raise ParseError(
                "a bare column reference is not a statement; "
                "did you mean a column assignment?"
            )
        return TransformOp(
            "filter", {"table": table, "predicate": lower_predicate(expr.index, table)}
        )
    if not isinstance(expr, Call):
        raise ParseError("statement does not match a known operator shape")
    return _lower_call(expr)


def _lower_call(expr: Call) -> TransformOp:
    fn = expr.fn
    if not isinstance(fn, Attr):
        raise ParseError("statement does not match a known operator shape")
    method = fn.name
    base = fn.obj

    if method == "merge":
        return _lower_merge(expr, base)
    if method == "concat" and isinstance(base, Name) and base.id == "pd":
        if len(expr.args) != 1 or not isinstance(expr.args[0], ListLit):
            raise ParseError("pd.concat takes a single list of tables")
        _kwargs_dict(expr.kwargs, (), "pd.concat")
        names = []
        for item in expr.args[0].items:
            if not isinstance(item, Name):
                raise ParseError("pd.concat list items must be table names")
            names.append(item.id)
        return TransformOp("concat", {"tables": names})
    if method == "sort_values" and isinstance(base, Name):
        kw = _kwargs_dict(expr.kwargs, ("by", "ascending"), "sort_values")
        if expr.args:
            if len(expr.args) > 1 or "by" in kw:
                raise ParseError("sort_values takes one sort key argument")
            kw["by"] = expr.args[0]
        if "by" not in kw:
            raise ParseError("sort_values needs by=")
        args = {"table": base.id, "by": _string_or_list(kw["by"], "sort key")}
        if "ascending" in kw:
            value = _literal_value(kw["ascending"])
            if not isinstance(value, bool):
                raise ParseError("ascending must be True or False")
            args["ascending"] = value
        return TransformOp("sort_values", args)
    if method == "fillna":
        if len(expr.args) != 1 or expr.kwargs:
            raise ParseError("fillna takes a single fill value")
        value = _literal_value(expr.args[0])
        col = _match_colref(base)
        if col is not None:
            return TransformOp(
                "fillna", {"table": col.table, "column": col.column, "value": value}
            )
        if isinstance(base, Name):
            return TransformOp("fillna", {"table": base.id, "value": value})
        raise ParseError("fillna applies to a table or a column reference")
    if method == "replace" and isinstance(base, Attr) and base.name == "str":
        col = _match_colref(base.obj)
        if col is None:
            raise ParseError('str.replace needs a column reference like df["col"]')
        if len(expr.args) != 2 or expr.kwargs:
            raise ParseError("str.replace takes a pattern and a replacement")
        return TransformOp(
            "str_replace",
            {
                "table": col.table,
                "column": col.column,
                "pattern": _string_value(expr.args[0], "pattern"),
                "replacement": _string_value(expr.args[1], "replacement"),
            },
        )
    if method == "rename" and isinstance(base, Name):
        kw = _kwargs_dict(expr.kwargs, ("columns",), "rename")
        if expr.args or "columns" not in kw:
            raise ParseError("rename takes columns={...}")
        if not isinstance(kw["columns"], DictLit):
            raise ParseError("rename takes columns={...}")
        mapping = {}
        for key, value in kw["columns"].pairs:
            mapping[_string_value(key, "rename key")] = _string_value(
                value, "rename value"
            )
        return TransformOp("rename", {"table": base.id, "mapping": mapping})
    if method == "drop_duplicates" and isinstance(base, Name):
        kw = _kwargs_dict(expr.kwargs, ("subset",), "drop_duplicates")
        if expr.args:
            raise ParseError("drop_duplicates takes only subset=")
        args = {"table": base.id}
        if "subset" in kw:
            args["subset"] = _string_or_list(kw["subset"], "subset")
        return TransformOp("drop_duplicates", args)
    if method == "head" and isinstance(base, Name):
        if expr.kwargs or len(expr.args) > 1:
            raise ParseError("head takes at most one row count")
        args = {"table": base.id}
        if expr.args:
            n = _literal_value(expr.args[0])
            if not isinstance(n, int) or isinstance(n, bool):
                raise ParseError("head count must be an integer")
            args["n"] = n
        return TransformOp("head", args)
    if method == "astype":
        col = _match_colref(base)
        if col is None:
            raise ParseError('astype needs a column reference like df["col"]')
        if len(expr.args) != 1 or expr.kwargs:
            raise ParseError("astype takes a single dtype name")
        dtype = _string_value(expr.args[0], "dtype")
        if dtype not in _DTYPE_NAMES:
            raise ParseError(
                f"unknown dtype {dtype!r}; expected one of {', '.join(_DTYPE_NAMES)}"
            )
        return TransformOp(
            "astype", {"table": col.table, "column": col.column, "dtype": dtype}
        )
    if method in AGG_FUNCTIONS or method == "agg":
        op = _lower_groupby(expr, method)
        if op is not None:
            return op
    raise ParseError("statement does not match a known operator shape")


def _lower_merge(expr: Call, base: Expr) -> TransformOp:
    if isinstance(base, Name) and base.id == "pd":
        if len(expr.args) != 2:
            raise ParseError("pd.merge takes two tables")
        left_e, right_e = expr.args
    else:
        if not isinstance(base, Name):
            raise ParseError("merge applies to a table name")
        if len(expr.args) != 1:
            raise ParseError("merge takes the right table as its argument")
        left_e, right_e = base, expr.args[0]
    if not isinstance(left_e, Name) or not isinstance(right_e, Name):
        raise ParseError("merge operands must be table names")
    kw = _kwargs_dict(expr.kwargs, ("on", "left_on", "right_on", "how"), "merge")
    args = {"left": left_e.id, "right": right_e.id}
    if "on" in kw:
        if "left_on" in kw or "right_on" in kw:
            raise ParseError("merge takes either on= or left_on=/right_on=, not both")
        key = _string_value(kw["on"], "join key")
        args["left_on"] = key
        args["right_on"] = key
    else:
        if "left_on" in kw:
            args["left_on"] = _string_value(kw["left_on"], "join key")
        if "right_on" in kw:
            args["right_on"] = _string_value(kw["right_on"], "join key")
    if "how" in kw:
        args["how"] = _string_value(kw["how"], "join type")
    return TransformOp("merge", args)


def _lower_groupby(expr: Call, method: str) -> Optional[TransformOp]:
    fn = expr.fn
    assert isinstance(fn, Attr)
    base = fn.obj

    def match_groupby(node: Expr) -> Optional[tuple[str, object]]:
        if (
            isinstance(node, Call)
            and isinstance(node.fn, Attr)
            and node.fn.name == "groupby"
            and isinstance(node.fn.obj, Name)
        ):
            kw = _kwargs_dict(node.kwargs, ("by",), "groupby")
            key = None
            if node.args:
                if len(node.args) > 1 or "by" in kw:
                    raise ParseError("groupby takes one key argument")
                key = node.args[0]
            elif "by" in kw:
                key = kw["by"]
            if key is None:
                raise ParseError("groupby needs a key")
            return node.fn.obj.id, _string_or_list(key, "group key")
        return None

    if method == "agg":
        grouped = match_groupby(base)
        if grouped is None:
            return None
        if len(expr.args) != 1 or expr.kwargs or not isinstance(expr.args[0], DictLit):
            raise ParseError("agg takes a dict of column: function")
        agg = []
        for key, value in expr.args[0].pairs:
            col = _string_value(key, "aggregation column")
            fn_name = _string_value(value, "aggregation function")
            if fn_name not in AGG_FUNCTIONS:
                raise ParseError(
                    f"unknown aggregation {fn_name!r}; "
                    f"expected one of {', '.join(AGG_FUNCTIONS)}"
                )
            agg.append((col, fn_name))
        table, by = grouped
        return TransformOp("groupby_agg", {"table": table, "by": by, "agg": agg})
    # single-column form: t.groupby(key)["col"].fn()
    if (
        isinstance(base, Subscript)
        and isinstance(base.index, Const)
        and isinstance(base.index.value, str)
    ):
        grouped = match_groupby(base.obj)
        if grouped is None:
            return None
        if expr.args or expr.kwargs:
            raise ParseError(f"{method}() takes no arguments here")
        table, by = grouped
        return TransformOp(
            "groupby_agg",
            {"table": table, "by": by, "agg": [(base.index.value, method)]},
        )
    return None


def _lower_binding(binding: str, rhs: Expr) -> Statement:
    if (
        isinstance(rhs, Call)
        and isinstance(rhs.fn, Name)
        and rhs.fn.id == "load_csv"
    ):
        if len(rhs.args) != 1:
            raise ParseError("load_csv takes a single path")
        kw = _kwargs_dict(rhs.kwargs, ("delimiter",), "load_csv")
        path = _string_value(rhs.args[0], "path")
        delimiter = (
            _string_value(kw["delimiter"], "delimiter") if "delimiter" in kw else ","
        )
        return LoadCsvStatement(binding, path, delimiter)
    op = lower_op_expr(rhs)
    if op.kind in ("str_replace", "astype") or (
        op.kind == "fillna" and op.get("column") is not None
    ):
        table = op.get("table")
        if binding != table:
            raise ParseError(
                f'{op.kind} produces a column; write {table}["col"] = ... instead'
            )
        if op.kind in ("str_replace", "astype"):
            op.args["target_column"] = op.get("column")
    return OpStatement(binding, op)


def _lower_column_assign(table: str, column: str, rhs: Expr) -> Statement:
    try:
        op = lower_op_expr(rhs)
    except TableError:
        op = None
    if op is not None and op.kind in ("str_replace", "astype", "fillna"):
        if op.get("table") != table:
            raise ParseError(
                f"column assignment target {table!r} does not match "
                f"source table {op.get('table')!r}"
            )
        if op.kind == "fillna":
            if op.get("column") != column:
                raise ParseError(
                    "fillna writes back to its own column; "
                    f"expected {op.get('column')!r} on the left-hand side"
                )
        else:
            op.args["target_column"] = column
        return OpStatement(table, op)
    expr = lower_value_expr(rhs, table)
    return OpStatement(
        table,
        TransformOp(
            "assign_column", {"table": table, "target_column": column, "expr": expr}
        ),
    )


# --- rendering ----------------------------------------------------------------


def _q(s: str) -> str:
    return render_literal(s)


def render_statement(stmt: Statement) -> str:
    """Canonical source text for a statement (round-trips through parsing)."""
    if isinstance(stmt, LoadCsvStatement):
        text = f"{stmt.binding} = load_csv({_q(stmt.path)}"
        if stmt.delimiter != ",":
            text += f", delimiter={_q(stmt.delimiter)}"
        return text + ")"
    op = stmt.op
    if op.kind == "assign_column":
        return (
            f'{op.get("table")}[{_q(op.get("target_column"))}] = '
            + render_expr(op.get("expr"))
        )
    if op.kind in ("str_replace", "astype"):
        target = op.get("target_column") or op.get("column")
        return f'{op.get("table")}[{_q(target)}] = {render_op(op)}'
    if op.kind == "fillna" and op.get("column") is not None:
        return f'{op.get("table")}[{_q(op.get("column"))}] = {render_op(op)}'
    return f"{stmt.binding} = {render_op(op)}"


# --- cell splitting and execution ----------------------------------------------


def split_statements(text: str) -> list[tuple[int, str]]:
    """Split cell text into (offset, statement) pairs.

    Statements end at newlines outside brackets and strings; blank and
    comment-only segments are dropped.
    """
    segments: list[tuple[int, str]] = []
    depth = 0
    quote: Optional[str] = None
    escaped = False
    in_comment = False
    start = 0
    for i, ch in enumerate(text):
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            elif ch == "\n":
                # strings never span lines; treat as closed and split here
                quote = None
                if depth == 0:
                    segments.append((start, text[start:i]))
                    start = i + 1
            continue
        if in_comment:
            if ch == "\n":
                in_comment = False
                if depth == 0:
                    segments.append((start, text[start:i]))
                    start = i + 1
            continue
        if ch == "#":
            in_comment = True
        elif ch in "\"'":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        elif ch == "\n" and depth == 0:
            segments.append((start, text[start:i]))
            start = i + 1
    segments.append((start, text[start:]))
    out = []
    for offset, segment in segments:
        stripped = segment.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lead = len(segment) - len(segment.lstrip())
        out.append((offset + lead, segment.strip()))
    return out


_CLOSER = {"(": ")", "[": "]", "{": "}"}


def auto_close(statement: str) -> str:
    """Append the closers a partial statement still owes.

    An open string literal is closed first, then open brackets innermost
    to outermost.  Used to test whether a partial statement plus a
    candidate already pins down a complete operation.
    """
    stack: list[str] = []
    quote: Optional[str] = None
    escaped = False
    for ch in statement:
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch in "([{":
            stack.append(_CLOSER[ch])
        elif ch in ")]}":
            if stack:
                stack.pop()
    closed = statement
    if quote is not None:
        closed += quote
    return closed + "".join(reversed(stack))


def parse_cell(text: str) -> list[Statement]:
    return [parse_statement(segment) for _, segment in split_statements(text)]


def execute_statement(
    stmt: Statement,
    env: Environment,
    *,
    data_dir: str = ".",
    categorical_threshold: int = 50,
) -> dict[str, DataTable]:
    """Run one statement; returns the binding it produces (env untouched)."""
    if isinstance(stmt, LoadCsvStatement):
        path = Path(stmt.path)
        if not path.is_absolute():
            path = Path(data_dir) / path
        table = load_csv(
            path,
            name=stmt.binding,
            delimiter=stmt.delimiter,
            categorical_threshold=categorical_threshold,
        )
        return {stmt.binding: table}
    result = apply_transform(stmt.op, env)
    return {stmt.binding: result.rename_table(stmt.binding)}
