"""Candidate generation: rule-based single-token and model-backed multi-token.

Single-token candidates finish the token being typed (a table name, column
name, cell value, or enum member) straight from the environment and its
profiles.  Multi-token candidates come from a pluggable model client fed a
four-part prompt (code context, data context, task instruction, format
control); whatever the model returns is validated against the statement
grammar and checked against live names — invalid lines are dropped, unknown
names are flagged but kept.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, replace
from typing import Optional

from .context import CodeContext, load_rule_file
from .ops import TransformOp, filled_tables, op_column_refs
from .profiling import (
    DataContextBundle,
    ProfileStore,
    sample_values,
    value_text,
)
from .statements import (
    LoadCsvStatement,
    OpStatement,
    ParseError,
    auto_close,
    parse_statement,
)
from .table import Environment, value_to_display
from .tokens import TokenizeError


@dataclass(frozen=True)
class CompletionItem:
    text: str  # appended verbatim at the cursor
    label: str  # full-token display form
    kind: str  # single_token | multi_token
    provenance: str  # rule | model
    score: int = 0
    mentioned_tables: tuple[str, ...] = ()
    mentioned_columns: tuple[tuple[str, str], ...] = ()  # (table, column)
    completes_operation: bool = False
    verified: bool = True
    unknown_names: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "text": self.text,
            "label": self.label,
            "kind": self.kind,
            "provenance": self.provenance,
            "score": self.score,
            "mentioned_tables": list(self.mentioned_tables),
            "mentioned_columns": [list(pair) for pair in self.mentioned_columns],
            "completes_operation": self.completes_operation,
            "verified": self.verified,
            "unknown_names": list(self.unknown_names),
        }


# ---------------------------------------------------------------------------
# Completion-time syntax checks


def statement_would_complete(statement: str) -> bool:
    """True when the text, with open syntax auto-closed, parses as a full
    statement with no required slot missing."""

    try:
        stmt = parse_statement(auto_close(statement))
    except (ParseError, TokenizeError):
        return False
    if isinstance(stmt, OpStatement):
        return not stmt.op.missing_required()
    return True


def _quote_wrap(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _suffix_item(full: str, prefix: str, quoted: bool, needs_quotes: bool) -> Optional[str]:
    """Insertion text that turns the typed prefix into ``full``."""

    if quoted:
        if not full.startswith(prefix):
            return None
        return full[len(prefix):] + '"'
    if needs_quotes:
        if prefix:  # an unquoted prefix cannot become a string literal
            return None
        return _quote_wrap(full)
    if not full.startswith(prefix):
        return None
    remainder = full[len(prefix):]
    return remainder or None


def _filled_table_args(op: Optional[TransformOp]) -> set[str]:
    return set(filled_tables(op)) if op is not None else set()


def single_token_candidates(
    ctx: CodeContext,
    bundle: DataContextBundle,
    env: Environment,
    *,
    store: Optional[ProfileStore] = None,
    seed: int = 0,
    cap: int = 50,
) -> list[CompletionItem]:
    slot = ctx.active_slot
    if slot is None or slot.kind in ("none", "free"):
        return []
    taken = set(slot.taken)
    items: list[CompletionItem] = []

    def add(text: str, label: str, columns=(), tables=()):
        items.append(
            CompletionItem(
                text=text,
                label=label,
                kind="single_token",
                provenance="rule",
                score=len(items),
                mentioned_tables=tuple(tables),
                mentioned_columns=tuple(columns),
                completes_operation=statement_would_complete(ctx.statement + text),
            )
        )

    if slot.kind == "table":
        names = [t.name for t in bundle.table_contexts]
        if not names:
            names = list(env.bindings)
        exclude = taken | _filled_table_args(ctx.op)
        for name in names:
            if name in exclude or not name.startswith(slot.prefix):
                continue
            remainder = name[len(slot.prefix):]
            if remainder:
                add(remainder, name, tables=(name,))
    elif slot.kind == "column":
        if slot.table is None or not env.has(slot.table):
            return []
        entry = store.get(slot.table) if store is not None else None
        columns = (
            list(entry.table.column_names)
            if entry is not None
            else env.lookup(slot.table).column_names
        )
        for name in columns:
            if name in taken:
                continue
            text = _suffix_item(name, slot.prefix, slot.quoted, needs_quotes=True)
            if text is not None:
                add(text, name, columns=((slot.table, name),))
    elif slot.kind == "value":
        if (
            slot.table is None
            or slot.column is None
            or not env.has(slot.table)
            or not env.lookup(slot.table).has_column(slot.column)
        ):
            return []
        column = env.lookup(slot.table).column(slot.column)
        values = sample_values(
            column, slot.prefix, cap, seed=seed, table_name=slot.table
        )
        for value in values:
            if slot.quoted and not isinstance(value, str):
                continue
            text = _suffix_item(
                value_text(value),
                slot.prefix,
                slot.quoted,
                needs_quotes=isinstance(value, str),
            )
            if text is not None:
                add(text, value_text(value), columns=((slot.table, slot.column),))
    elif slot.kind == "enum":
        members = list(slot.values)
        bare = set(members) <= {"True", "False"}
        for member in members:
            if member in taken:
                continue
            text = _suffix_item(member, slot.prefix, slot.quoted, needs_quotes=not bare)
            if text is not None:
                add(text, member)
    return items


# ---------------------------------------------------------------------------
# Prompt assembly


@dataclass(frozen=True)
class Prompt:
    code_context: str
    data_context: str
    task_instruction: str
    format_control: str

    def render(self) -> str:
        return "\n\n".join(
            (
                self.code_context,
                self.data_context,
                self.task_instruction,
                self.format_control,
            )
        )

    def to_payload(self) -> dict:
        return {
            "code_context": self.code_context,
            "data_context": self.data_context,
            "task_instruction": self.task_instruction,
            "format_control": self.format_control,
        }


FREQUENT_IN_PROMPT = 10


def _table_block(profile, rows, include_rows: bool, include_columns: bool) -> str:
    n_rows, n_cols = profile.shape
    lines = [f"Table {profile.name}: {n_rows} rows x {n_cols} columns"]
    if include_columns:
        lines.append("  columns: " + ", ".join(profile.column_names))
    if include_rows and rows is not None and rows.rows:
        lines.append("  first rows:")
        lines.append("    " + " | ".join(rows.columns))
        for row in rows.rows:
            lines.append("    " + " | ".join(value_to_display(v) for v in row))
    return "\n".join(lines)


def _column_block(profile, include_values: bool) -> str:
    lines = [
        f"Column {profile.table}.{profile.name}: dtype {profile.dtype}, "
        f"{profile.null_count} nulls, {profile.cardinality} distinct, "
        f"sortedness {profile.sortedness}"
    ]
    if include_values:
        if profile.value_format:
            lines.append(f"  value format: {profile.value_format}")
        if profile.unique_values:
            lines.append(
                "  values: " + ", ".join(value_text(v) for v in profile.unique_values)
            )
        if profile.value_frequency:
            lines.append(
                "  frequent: "
                + ", ".join(
                    f"{value_text(v)} ({n})"
                    for v, n in profile.value_frequency[:FREQUENT_IN_PROMPT]
                )
            )
        if profile.value_range is not None:
            lo, hi = profile.value_range
            lines.append(f"  range: {value_text(lo)} .. {value_text(hi)}")
        if profile.sample_points:
            lines.append(
                "  sample points: "
                + ", ".join(value_text(v) for v in profile.sample_points)
            )
    return "\n".join(lines)


def _data_context_text(
    bundle: DataContextBundle,
    template: dict,
    include_rows: bool,
    include_values: bool,
    include_columns: bool,
) -> str:
    rows_by_table = {r.table: r for r in bundle.row_contexts}
    blocks = []
    seen_rows = set()
    for profile in bundle.table_contexts:
        rows = rows_by_table.get(profile.name)
        if rows is not None:
            seen_rows.add(profile.name)
        blocks.append(_table_block(profile, rows, include_rows, include_columns))
    for sample in bundle.row_contexts:
        if sample.table not in seen_rows and include_rows and sample.rows:
            blocks.append(
                _table_block(
                    _rows_only_profile(sample), sample, include_rows, include_columns
                )
            )
    for profile in bundle.column_contexts:
        blocks.append(_column_block(profile, include_values))
    if not blocks:
        blocks = [template["no_tables_marker"]]
    return template["data_header"] + "\n" + "\n".join(blocks)


def _rows_only_profile(sample):
    from .profiling import TableProfile

    return TableProfile(
        name=sample.table,
        shape=(len(sample.rows), len(sample.columns)),
        column_names=sample.columns,
    )


def build_prompt(
    complete_code: str,
    ctx: CodeContext,
    bundle: DataContextBundle,
    *,
    max_candidates: int = 2,
    max_chars: int = 8000,
) -> Prompt:
    """Render the four prompt parts; over budget, shed detail in fixed order
    (row samples, then value lists, then column name lists) and never drop
    table names."""

    template = load_rule_file("prompt_template.json")
    code_context = template["code_header"] + "\n" + complete_code.rstrip("\n")
    task_instruction = template["task_instruction"]
    format_control = template["format_control"].format(max_candidates=max_candidates)

    for include_rows, include_values, include_columns in (
        (True, True, True),
        (False, True, True),
        (False, False, True),
        (False, False, False),
    ):
        data_context = _data_context_text(
            bundle, template, include_rows, include_values, include_columns
        )
        prompt = Prompt(code_context, data_context, task_instruction, format_control)
        if len(prompt.render()) <= max_chars:
            return prompt
    return prompt


# ---------------------------------------------------------------------------
# Model clients


class ModelError(Exception):
    """The model endpoint failed or answered unusably."""


class ModelClient:
    identity = "abstract"

    def generate(self, prompt: Prompt) -> str:  # pragma: no cover - interface
        raise NotImplementedError


class MockModelClient(ModelClient):
    """Deterministic client: replays scripted responses keyed by the partial
    statement (the last line of the prompt's code context)."""

    identity = "mock"

    def __init__(self, responses: dict[str, str]):
        self.responses = dict(responses)
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path) -> "MockModelClient":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(payload.get("responses", payload))

    def generate(self, prompt: Prompt) -> str:
        lines = [ln for ln in prompt.code_context.splitlines() if ln.strip()]
        key = lines[-1] if lines else ""
        self.calls.append(key)
        if key in self.responses:
            return self.responses[key]
        return self.responses.get("*", "")


class HttpModelClient(ModelClient):
    identity = "http"

    def __init__(self, endpoint: str, api_key: Optional[str] = None, timeout: float = 10.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def generate(self, prompt: Prompt) -> str:
        body = json.dumps(
            {**prompt.to_payload(), "max_tokens": 256, "temperature": 0}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        if self.api_key:
            request.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ModelError(str(exc)) from exc
        if not isinstance(payload, dict) or "text" not in payload:
            raise ModelError("model response had no text field")
        return str(payload["text"])


# ---------------------------------------------------------------------------
# Model output parsing and validation

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def parse_model_output(raw: str) -> tuple[list[str], list[str]]:
    """Extract candidate continuations from a fenced block."""

    if not raw.strip():
        return [], ["model returned an empty response"]
    match = _FENCE.search(raw)
    if match is None:
        return [], ["model output had no fenced code block"]
    lines = [line.rstrip() for line in match.group(1).splitlines()]
    continuations = [line for line in lines if line.strip()]
    if not continuations:
        return [], ["model code block was empty"]
    return continuations, []


def _statement_names(stmt) -> tuple[list[str], list[tuple[str, str]]]:
    """Tables and (table, column) pairs a parsed statement refers to."""

    if isinstance(stmt, LoadCsvStatement):
        return [], []  # the binding is created, not referenced
    return filled_tables(stmt.op), op_column_refs(stmt.op)


def _verify_names(
    tables: list[str], columns: list[tuple[str, str]], env: Environment
) -> list[str]:
    unknown = []
    for table in tables:
        if not env.has(table):
            unknown.append(table)
    for table, column in columns:
        if env.has(table) and not env.lookup(table).has_column(column):
            unknown.append(f"{table}.{column}")
    return unknown


def multi_token_candidates(
    prompt: Prompt,
    client: ModelClient,
    ctx: CodeContext,
    env: Environment,
    *,
    max_candidates: int = 2,
) -> tuple[list[CompletionItem], list[str]]:
    try:
        raw = client.generate(prompt)
    except Exception as exc:  # degrade on any client fault, never crash
        return [], [f"model client failed: {exc}"]
    continuations, diagnostics = parse_model_output(raw)
    items: list[CompletionItem] = []
    for continuation in continuations:
        if len(items) >= max_candidates:
            break
        full = ctx.statement + continuation
        try:
            stmt = parse_statement(auto_close(full))
        except (ParseError, TokenizeError) as exc:
            diagnostics.append(f"dropped unparseable candidate {continuation!r}: {exc}")
            continue
        tables, columns = _statement_names(stmt)
        unknown = _verify_names(tables, columns, env)
        completes = (
            not stmt.op.missing_required() if isinstance(stmt, OpStatement) else True
        )
        items.append(
            CompletionItem(
                text=continuation,
                label=continuation,
                kind="multi_token",
                provenance="model",
                score=len(items),
                mentioned_tables=tuple(t for t in tables if env.has(t)),
                mentioned_columns=tuple(
                    (t, c)
                    for t, c in columns
                    if env.has(t) and env.lookup(t).has_column(c)
                ),
                completes_operation=completes,
                verified=not unknown,
                unknown_names=tuple(unknown),
            )
        )
    return items, diagnostics


# ---------------------------------------------------------------------------
# Ranking


def rank(items: list[CompletionItem], ctx: CodeContext) -> list[CompletionItem]:
    """Rule items first (profile order), then verified model items, then
    unverified ones; duplicates collapse onto the earliest occurrence."""

    def group(item: CompletionItem) -> int:
        if item.provenance == "rule":
            return 0
        return 1 if item.verified else 2

    ordered = sorted(enumerate(items), key=lambda pair: (group(pair[1]), pair[0]))
    seen: set[str] = set()
    final: list[CompletionItem] = []
    for _, item in ordered:
        if item.text in seen:
            continue
        seen.add(item.text)
        final.append(replace(item, score=len(final)))
    return final


# ---------------------------------------------------------------------------
# One-call pipeline


@dataclass(frozen=True)
class CompletionResult:
    items: tuple[CompletionItem, ...]
    prompt: Optional[Prompt]
    diagnostics: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "items": [item.to_payload() for item in self.items],
            "diagnostics": list(self.diagnostics),
        }


def generate_completions(
    ctx: CodeContext,
    bundle: DataContextBundle,
    env: Environment,
    *,
    store: Optional[ProfileStore] = None,
    client: Optional[ModelClient] = None,
    preceding_code: str = "",
    seed: int = 0,
    cap: int = 50,
    max_candidates: int = 2,
    max_prompt_chars: int = 8000,
) -> CompletionResult:
    diagnostics: list[str] = []
    try:
        rule_items = single_token_candidates(
            ctx, bundle, env, store=store, seed=seed, cap=cap
        )
    except Exception as exc:  # degrade, never go silent
        rule_items = []
        diagnostics.append(f"rule completion failed: {exc}")
    prompt = None
    model_items: list[CompletionItem] = []
    if ctx.mode in ("in_signature", "pattern") and ctx.statement.strip():
        code = preceding_code if preceding_code.strip() else ctx.statement
        prompt = build_prompt(
            code, ctx, bundle, max_candidates=max_candidates, max_chars=max_prompt_chars
        )
        if client is not None:
            model_items, model_diags = multi_token_candidates(
                prompt, client, ctx, env, max_candidates=max_candidates
            )
            diagnostics.extend(model_diags)
    items = rank(rule_items + model_items, ctx)
    if not items:
        diagnostics.append("no candidates")
    return CompletionResult(
        items=tuple(items), prompt=prompt, diagnostics=tuple(diagnostics)
    )
