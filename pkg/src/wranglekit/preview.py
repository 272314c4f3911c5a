"""Data-view highlighting and instant transformation previews.

While a statement is being typed, ``compute_highlight`` decides which table
cards the client should expand and which columns to mark, based on the
partial statement plus the currently focused completion candidate.  Once the
statement (with the focused candidate virtually appended) pins down a
complete operation, ``compute_preview`` executes it over a bounded row
sample and reports one of three payload forms: a column diff, a row-filter
marking, or an original/result table pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .completion import CompletionItem
from .context import CodeContext
from .ops import (
    MISSING,
    TransformOp,
    apply_transform,
    eval_predicate,
    filled_tables,
    op_column_refs,
    predicate_literals,
)
from .profiling import ROW_SAMPLE_K, RowSample
from .statements import (
    OpStatement,
    ParseError,
    Statement,
    auto_close,
    parse_statement,
)
from .table import DataTable, Environment, TableError
from .tokens import TokenizeError

PREVIEW_SAMPLE_ROWS = 200
VIEWPORT_COLUMNS = 6

COLUMN_DIFF_KINDS = ("str_replace", "astype",)


# ---------------------------------------------------------------------------
# Highlighting


@dataclass(frozen=True)
class HighlightSpec:
    expand_tables: tuple[str, ...] = ()
    collapse_others: bool = True
    show_sample_rows: dict[str, bool] = field(default_factory=dict)
    highlight_columns: tuple[tuple[str, str], ...] = ()
    anchored_columns: tuple[tuple[str, str], ...] = ()
    missing_names: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "expand_tables": list(self.expand_tables),
            "collapse_others": self.collapse_others,
            "show_sample_rows": dict(self.show_sample_rows),
            "highlight_columns": [list(pair) for pair in self.highlight_columns],
            "anchored_columns": [list(pair) for pair in self.anchored_columns],
            "missing_names": list(self.missing_names),
        }


def compute_highlight(
    ctx: CodeContext,
    focused: Optional[CompletionItem],
    env: Environment,
    *,
    viewport_columns: int = VIEWPORT_COLUMNS,
) -> HighlightSpec:
    """Tables to expand and columns to mark for the current cursor state.

    Names that do not exist in the environment are reported in
    ``missing_names`` instead of being highlighted.
    """

    tables: list[str] = []
    columns: list[tuple[str, str]] = []
    missing: list[str] = []

    def add_table(name: Optional[str]):
        if not name or name in tables:
            return
        if env.has(name):
            tables.append(name)
        elif name not in missing:
            missing.append(name)

    def add_column(table: Optional[str], column: Optional[str]):
        if not table or not column:
            return
        if env.has(table) and env.lookup(table).has_column(column):
            if (table, column) not in columns:
                columns.append((table, column))
                add_table(table)
        else:
            label = f"{table}.{column}"
            if label not in missing:
                missing.append(label)

    for name in ctx.tables:
        add_table(name)
    if ctx.op is not None:
        for table, column in op_column_refs(ctx.op):
            add_column(table, column)
    slot = ctx.active_slot
    if slot is not None:
        if slot.table and slot.column:
            add_column(slot.table, slot.column)
        # committed siblings of a list slot are mentions too
        if slot.kind == "column" and slot.table:
            for name in slot.taken:
                add_column(slot.table, name)
        elif slot.kind == "table":
            for name in slot.taken:
                add_table(name)

    if focused is not None:
        for name in focused.mentioned_tables:
            add_table(name)
        for table, column in focused.mentioned_columns:
            add_column(table, column)
        for name in focused.unknown_names:
            if name not in missing:
                missing.append(name)

    anchored = []
    for table, column in columns:
        if env.lookup(table).column_names.index(column) >= viewport_columns:
            anchored.append((table, column))
    highlighted_tables = {table for table, _ in columns}
    return HighlightSpec(
        expand_tables=tuple(tables),
        collapse_others=True,
        show_sample_rows={t: t in highlighted_tables for t in tables},
        highlight_columns=tuple(columns),
        anchored_columns=tuple(anchored),
        missing_names=tuple(missing),
    )


# ---------------------------------------------------------------------------
# Preview readiness and classification


def closed_statement(
    ctx: CodeContext, focused: Optional[CompletionItem]
) -> Optional[Statement]:
    """Parse the partial statement plus the focused candidate, with open
    syntax auto-closed; None when that text does not pin down a statement."""

    text = ctx.statement + (focused.text if focused is not None else "")
    if not text.strip():
        return None
    try:
        return parse_statement(auto_close(text))
    except (ParseError, TokenizeError):
        return None


def preview_ready(ctx: CodeContext, focused: Optional[CompletionItem]) -> bool:
    stmt = closed_statement(ctx, focused)
    if not isinstance(stmt, OpStatement):
        return False
    return not stmt.op.missing_required()


def classify_form(op: TransformOp, env: Optional[Environment] = None) -> str:
    """Which of the three preview forms a fully-filled operation gets."""

    if op.kind == "filter":
        return "row_filter"
    if op.kind in COLUMN_DIFF_KINDS:
        return "column_diff"
    if op.kind == "fillna" and _arg(op, "column") is not None:
        return "column_diff"
    if op.kind == "assign_column":
        table = _arg(op, "table")
        target = _arg(op, "target_column")
        if (
            env is not None
            and isinstance(table, str)
            and env.has(table)
            and isinstance(target, str)
            and env.lookup(table).has_column(target)
        ):
            return "column_diff"
        return "table_pair"
    return "table_pair"


def _arg(op: TransformOp, name: str):
    value = op.args.get(name)
    return None if value is MISSING else value


# ---------------------------------------------------------------------------
# Preview computation


@dataclass(frozen=True)
class PreviewResult:
    form: str  # column_diff | row_filter | table_pair
    ok: bool = True
    error: Optional[str] = None
    error_tag: Optional[str] = None  # data | grammar
    table: Optional[str] = None
    sample_based: bool = False
    # column_diff
    column: Optional[str] = None
    new_column: Optional[str] = None
    original_values: Optional[tuple] = None
    new_values: Optional[tuple] = None
    changed_mask: Optional[tuple[bool, ...]] = None
    # row_filter
    deleted_rows: Optional[tuple[int, ...]] = None
    matched_literals: Optional[tuple[tuple[Optional[str], object], ...]] = None
    # table_pair
    original: Optional[RowSample] = None
    result: Optional[RowSample] = None

    def to_payload(self) -> dict:
        payload: dict = {"form": self.form, "ok": self.ok}
        if not self.ok:
            payload["error"] = self.error
            payload["error_tag"] = self.error_tag
            return payload
        payload["sample_based"] = self.sample_based
        if self.table is not None:
            payload["table"] = self.table
        if self.form == "column_diff":
            payload.update(
                column=self.column,
                new_column=self.new_column,
                original_values=list(self.original_values),
                new_values=list(self.new_values),
                changed_mask=list(self.changed_mask),
            )
        elif self.form == "row_filter":
            payload.update(
                deleted_rows=list(self.deleted_rows),
                matched_literals=[list(pair) for pair in self.matched_literals],
            )
        elif self.form == "table_pair":
            payload.update(
                original=self.original.to_payload(),
                result=self.result.to_payload(),
            )
        return payload


def _primary_table_name(op: TransformOp) -> Optional[str]:
    for slot in ("table", "left"):
        value = _arg(op, slot)
        if isinstance(value, str):
            return value
    tables = _arg(op, "tables")
    if isinstance(tables, (list, tuple)) and tables:
        return tables[0]
    return None


def _display_sample(table: DataTable, name: str) -> RowSample:
    return RowSample(
        table=name,
        columns=tuple(table.column_names),
        rows=tuple(table.row(i) for i in range(min(ROW_SAMPLE_K, table.n_rows))),
    )


def compute_preview(
    ctx: CodeContext,
    focused: Optional[CompletionItem],
    env: Environment,
    *,
    sample_rows: int = PREVIEW_SAMPLE_ROWS,
) -> PreviewResult:
    """Execute the completed operation over a bounded sample and diff it.

    Never touches the live environment; execution failures come back as a
    structured diagnostic payload.
    """

    stmt = closed_statement(ctx, focused)
    if not isinstance(stmt, OpStatement) or stmt.op.missing_required():
        return PreviewResult(
            form="none", ok=False, error="statement is not complete", error_tag="grammar"
        )
    op = stmt.op
    referenced = filled_tables(op)
    sampled: dict[str, DataTable] = {}
    sample_based = False
    for name in referenced:
        if not env.has(name):
            return PreviewResult(
                form=classify_form(op, env),
                ok=False,
                error=f"no table named {name!r}",
                error_tag="data",
            )
        source = env.lookup(name)
        if source.n_rows > sample_rows:
            sample_based = True
        sampled[name] = source.head(sample_rows)
    sample_env = Environment(bindings=sampled, version=env.version)

    form = classify_form(op, env)
    try:
        result = apply_transform(op, sample_env)
    except TableError as exc:
        return PreviewResult(form=form, ok=False, error=str(exc), error_tag="data")

    primary = _primary_table_name(op)
    if form == "column_diff":
        source_table = sampled[primary]
        src_col = _arg(op, "column") or _arg(op, "target_column")
        new_col = _arg(op, "target_column") or src_col
        original_values = source_table.column(src_col).values
        new_values = result.column(new_col).values
        mask = tuple(o != n for o, n in zip(original_values, new_values))
        return PreviewResult(
            form=form,
            table=primary,
            sample_based=sample_based,
            column=src_col,
            new_column=new_col,
            original_values=tuple(original_values),
            new_values=tuple(new_values),
            changed_mask=mask,
        )
    if form == "row_filter":
        source_table = sampled[primary]
        keep = eval_predicate(op.args["predicate"], source_table)
        deleted = tuple(i for i, kept in enumerate(keep) if not kept)
        literals = tuple(predicate_literals(op.args["predicate"]))
        return PreviewResult(
            form=form,
            table=primary,
            sample_based=sample_based,
            deleted_rows=deleted,
            matched_literals=literals,
        )
    return PreviewResult(
        form=form,
        table=primary,
        sample_based=sample_based,
        original=_display_sample(sampled[primary], primary),
        result=_display_sample(result, "result"),
    )
