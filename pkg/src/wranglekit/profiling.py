"""Table, column, and row-level summaries of the live environment.

Every bound table gets three layers of description after each run:

* ``TableProfile`` — name, shape, ordered column names.
* ``ColumnProfile`` — per-column statistics: dtype, null count, sortedness,
  cardinality, plus dtype-specific extras (sampled unique values, value
  frequencies and a value-format template for text columns; range and
  sample points for numeric columns).
* ``RowSample`` — the leading rows verbatim, preserving cell adjacency.

``ProfileStore`` caches these per environment version and re-profiles only
the bindings that actually changed.  ``select_contexts`` narrows the store
to the pieces relevant to a cursor context, driven by the operator-class
rules, and ``sample_values`` provides seeded, prefix-filtered value lookups
for completion.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .context import CodeContext, context_levels
from .ops import MISSING, TABLE_SLOTS, op_column_refs
from .table import Column, DataTable, Environment

UNIQUE_VALUE_CAP = 50
ROW_SAMPLE_K = 15
NUMERIC_SAMPLE_POINTS = 5


# ---------------------------------------------------------------------------
# Profile records


@dataclass(frozen=True)
class TableProfile:
    name: str
    shape: tuple[int, int]  # (n_rows, n_cols)
    column_names: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "shape": list(self.shape),
            "column_names": list(self.column_names),
        }


@dataclass(frozen=True)
class ColumnProfile:
    table: str
    name: str
    dtype: str
    null_count: int
    sortedness: str  # ascending | descending | none
    cardinality: int
    unique_values: Optional[tuple] = None
    value_frequency: Optional[tuple[tuple[object, int], ...]] = None
    value_format: Optional[str] = None
    value_range: Optional[tuple] = None
    sample_points: Optional[tuple] = None

    def to_payload(self) -> dict:
        payload = {
            "table": self.table,
            "name": self.name,
            "dtype": self.dtype,
            "null_count": self.null_count,
            "sortedness": self.sortedness,
            "cardinality": self.cardinality,
        }
        if self.unique_values is not None:
            payload["unique_values"] = list(self.unique_values)
        if self.value_frequency is not None:
            payload["value_frequency"] = [[v, c] for v, c in self.value_frequency]
        if self.value_format is not None:
            payload["value_format"] = self.value_format
        if self.value_range is not None:
            payload["value_range"] = list(self.value_range)
        if self.sample_points is not None:
            payload["sample_points"] = list(self.sample_points)
        return payload


@dataclass(frozen=True)
class RowSample:
    table: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]  # first K rows, column order preserved

    def to_payload(self) -> dict:
        return {
            "table": self.table,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
        }


@dataclass(frozen=True)
class TableContexts:
    """All three context layers for one table."""

    table: TableProfile
    columns: tuple[ColumnProfile, ...]
    rows: RowSample

    def column(self, name: str) -> ColumnProfile:
        for profile in self.columns:
            if profile.name == name:
                return profile
        raise KeyError(name)

    def to_payload(self) -> dict:
        return {
            "table": self.table.to_payload(),
            "columns": [profile.to_payload() for profile in self.columns],
            "rows": self.rows.to_payload(),
        }


# ---------------------------------------------------------------------------
# Profiling computations


def derived_rng(seed: int, *parts) -> random.Random:
    """Deterministic RNG for one sampling decision.

    The stream depends on the session seed and on what is being sampled, so
    unrelated samples never share or perturb each other's sequences.
    """

    key = repr((seed,) + parts).encode("utf-8")
    return random.Random(zlib.crc32(key))


def sortedness_of(values: Sequence) -> str:
    """Direction of the non-null value sequence, or ``none``.

    Constant runs count as ascending; fewer than two non-null values give
    no signal and report ``none``.
    """

    non_null = [v for v in values if v is not None]
    if len(non_null) < 2:
        return "none"
    ascending = True
    descending = True
    for prev, cur in zip(non_null, non_null[1:]):
        if prev > cur:
            ascending = False
        if prev < cur:
            descending = False
        if not ascending and not descending:
            return "none"
    if ascending:
        return "ascending"
    return "descending"


def _distinct_in_order(values: Sequence) -> list:
    seen = set()
    out = []
    for v in values:
        if v is None or v in seen:
            continue
        seen.add(v)
        out.append(v)
    return out


def _sample_in_order(items: list, cap: int, rng: random.Random) -> list:
    if len(items) <= cap:
        return list(items)
    picked = sorted(rng.sample(range(len(items)), cap))
    return [items[i] for i in picked]


def value_text(value) -> str:
    """Canonical completion text of a cell value (never quoted)."""

    if value is None:
        return ""
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- value-format templates


def _skeleton(value: str) -> tuple:
    """Split a string into (kind, text) runs: digit, letter, or literal."""

    runs = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch.isdigit():
            kind = "digit"
            j = i
            while j < len(value) and value[j].isdigit():
                j += 1
        elif ch.isalpha():
            kind = "letter"
            j = i
            while j < len(value) and value[j].isalpha():
                j += 1
        else:
            kind = "literal"
            j = i + 1
        runs.append((kind, value[i:j]))
        i = j
    return tuple(runs)


def _skeleton_shape(runs: tuple) -> tuple:
    """Skeleton with letter texts erased, for grouping values by shape."""

    return tuple(
        (kind, text) if kind == "literal" else (kind, "") for kind, text in runs
    )


def _render_template(shape: tuple, letter_texts: dict[int, Optional[str]]) -> str:
    parts = []
    for idx, (kind, text) in enumerate(shape):
        if kind == "digit":
            parts.append("D+")
        elif kind == "letter":
            constant = letter_texts.get(idx)
            parts.append(f"'{constant}'" if constant is not None else "L+")
        else:
            parts.append(text)
    return "".join(parts)


def value_format_of(samples: Sequence[str]) -> Optional[str]:
    """Character-class template of the majority of the sampled strings.

    Digit runs become ``D+``.  Letter runs become the literal text in
    quotes when every majority-shape sample agrees on it, otherwise
    ``L+``.  Other characters pass through verbatim.  Ties between
    equally common shapes break toward the lexicographically smaller
    rendered template.
    """

    texts = [s for s in samples if isinstance(s, str) and s != ""]
    if not texts:
        return None
    by_shape: dict[tuple, list[tuple]] = {}
    for text in texts:
        runs = _skeleton(text)
        by_shape.setdefault(_skeleton_shape(runs), []).append(runs)
    best = max(
        by_shape.items(),
        key=lambda item: (len(item[1]), _neg_lex(_render_template(item[0], {}))),
    )
    shape, members = best
    letter_texts: dict[int, Optional[str]] = {}
    for idx, (kind, _) in enumerate(shape):
        if kind != "letter":
            continue
        seen = {runs[idx][1] for runs in members}
        letter_texts[idx] = seen.pop() if len(seen) == 1 else None
    return _render_template(shape, letter_texts)


def _neg_lex(text: str) -> tuple:
    # max() tie-break helper: prefer lexicographically smaller strings.
    return tuple(-ord(c) for c in text)


def profile_column(
    table_name: str,
    column: Column,
    *,
    seed: int = 0,
    unique_cap: int = UNIQUE_VALUE_CAP,
) -> ColumnProfile:
    values = column.values
    null_count = sum(1 for v in values if v is None)
    distinct = _distinct_in_order(values)
    base = {
        "table": table_name,
        "name": column.name,
        "dtype": column.dtype.tag,
        "null_count": null_count,
        "sortedness": sortedness_of(values),
        "cardinality": len(distinct),
    }
    if column.dtype.is_numeric:
        non_null = [v for v in values if v is not None]
        rng = derived_rng(seed, "points", table_name, column.name)
        points = _sample_in_order(distinct, NUMERIC_SAMPLE_POINTS, rng)
        return ColumnProfile(
            **base,
            value_range=(min(non_null), max(non_null)) if non_null else None,
            sample_points=tuple(sorted(points)),
        )
    rng = derived_rng(seed, "uniques", table_name, column.name)
    uniques = _sample_in_order(distinct, unique_cap, rng)
    counts: dict = {}
    for v in values:
        if v is None:
            continue
        counts[v] = counts.get(v, 0) + 1
    frequency = sorted(counts.items(), key=lambda vc: (-vc[1], str(vc[0])))
    fmt = None
    if column.dtype.is_stringy:
        fmt = value_format_of([value_text(v) for v in uniques])
    return ColumnProfile(
        **base,
        unique_values=tuple(uniques),
        value_frequency=tuple(frequency[:unique_cap]),
        value_format=fmt,
    )


def profile_table(
    table: DataTable,
    *,
    seed: int = 0,
    unique_cap: int = UNIQUE_VALUE_CAP,
    sample_k: int = ROW_SAMPLE_K,
) -> TableContexts:
    table_profile = TableProfile(
        name=table.name,
        shape=(table.n_rows, table.n_cols),
        column_names=tuple(table.column_names),
    )
    columns = tuple(
        profile_column(table.name, col, seed=seed, unique_cap=unique_cap)
        for col in table.columns
    )
    rows = RowSample(
        table=table.name,
        columns=tuple(table.column_names),
        rows=tuple(table.row(i) for i in range(min(sample_k, table.n_rows))),
    )
    return TableContexts(table=table_profile, columns=columns, rows=rows)


# ---------------------------------------------------------------------------
# Store and refresh


@dataclass(frozen=True)
class ProfileStore:
    """Immutable snapshot of profiles for one environment version."""

    version: int = -1
    entries: dict[str, TableContexts] = field(default_factory=dict)
    sources: dict[str, DataTable] = field(default_factory=dict)
    last_profiled: tuple[str, ...] = ()

    @staticmethod
    def empty() -> "ProfileStore":
        return ProfileStore()

    def get(self, table: str) -> Optional[TableContexts]:
        return self.entries.get(table)

    def table_names(self) -> list[str]:
        return list(self.entries)


def refresh(
    env: Environment,
    store: ProfileStore,
    *,
    seed: int = 0,
    unique_cap: int = UNIQUE_VALUE_CAP,
    sample_k: int = ROW_SAMPLE_K,
) -> ProfileStore:
    """Bring the store up to the environment version.

    Only bindings whose table object changed since the stored version are
    re-profiled; unchanged entries are carried over, deleted bindings are
    dropped.  An already-current store is returned as-is.
    """

    if env.version < store.version:
        raise ValueError(
            f"environment version {env.version} is older than store {store.version}"
        )
    if env.version == store.version:
        return store
    entries: dict[str, TableContexts] = {}
    sources: dict[str, DataTable] = {}
    profiled: list[str] = []
    for name, table in env.bindings.items():
        if store.sources.get(name) is table:
            entries[name] = store.entries[name]
        else:
            entries[name] = profile_table(
                table, seed=seed, unique_cap=unique_cap, sample_k=sample_k
            )
            profiled.append(name)
        sources[name] = table
    return ProfileStore(
        version=env.version,
        entries=entries,
        sources=sources,
        last_profiled=tuple(profiled),
    )


# ---------------------------------------------------------------------------
# Context selection


@dataclass(frozen=True)
class DataContextBundle:
    operator_class: str
    table_contexts: tuple[TableProfile, ...]
    column_contexts: tuple[ColumnProfile, ...]
    row_contexts: tuple[RowSample, ...]
    rationale: dict[str, str]

    def to_payload(self) -> dict:
        return {
            "operator_class": self.operator_class,
            "table_contexts": [t.to_payload() for t in self.table_contexts],
            "column_contexts": [c.to_payload() for c in self.column_contexts],
            "row_contexts": [r.to_payload() for r in self.row_contexts],
            "rationale": dict(self.rationale),
        }


def _table_slot_open(ctx: CodeContext) -> bool:
    # Join-candidate widening only applies when a known operator still
    # needs a table; for unknown calls the class-level narrowing decides.
    if ctx.op is None:
        return False
    if ctx.active_slot is not None and ctx.active_slot.kind == "table":
        return True
    for slot in TABLE_SLOTS:
        if slot in ctx.op.args and ctx.op.args[slot] is MISSING:
            return True
    return False


def select_contexts(
    ctx: CodeContext, store: ProfileStore, env: Environment
) -> DataContextBundle:
    """Narrow the profile store to what the cursor context needs.

    Stage 1 picks context levels from the operator class; stage 2 narrows
    to the tables and columns implied by the filled and missing slots.
    """

    op_class = ctx.op_class
    levels = context_levels(op_class)
    rationale: dict[str, str] = {"operator_class": op_class}

    mentioned = [t for t in ctx.tables if t in store.entries]
    candidates: list[str] = []
    if _table_slot_open(ctx):
        candidates = [t for t in store.entries if t not in mentioned]
    focal = mentioned + candidates
    if not focal and op_class == "others":
        focal = store.table_names()
        candidates = list(focal)

    table_contexts: list[TableProfile] = []
    if levels["table_profiles"]:
        for name in focal:
            table_contexts.append(store.entries[name].table)
            rationale[f"table:{name}"] = (
                "join candidate" if name in candidates else "mentioned in statement"
            )

    column_refs: list[tuple[str, str]] = []
    if ctx.active_slot is not None and ctx.active_slot.column:
        column_refs.append((ctx.active_slot.table, ctx.active_slot.column))
    if ctx.op is not None:
        for ref in op_column_refs(ctx.op):
            if ref not in column_refs:
                column_refs.append(ref)

    column_contexts: list[ColumnProfile] = []
    if levels["column_profiles"]:
        for table, column in column_refs:
            entry = store.get(table) if table else None
            if entry is None:
                continue
            try:
                profile = entry.column(column)
            except KeyError:
                continue
            column_contexts.append(profile)
            rationale[f"column:{table}.{column}"] = "referenced by statement"

    row_contexts: list[RowSample] = []
    if levels["row_samples"]:
        for name in mentioned:
            row_contexts.append(store.entries[name].rows)
            rationale[f"rows:{name}"] = "mentioned in statement"

    return DataContextBundle(
        operator_class=op_class,
        table_contexts=tuple(table_contexts),
        column_contexts=tuple(column_contexts),
        row_contexts=tuple(row_contexts),
        rationale=rationale,
    )


# ---------------------------------------------------------------------------
# Value sampling for completion


def sample_values(
    column: Column,
    prefix: str = "",
    cap: int = UNIQUE_VALUE_CAP,
    *,
    seed: int = 0,
    table_name: str = "",
) -> list:
    """Distinct column values whose text starts with ``prefix``.

    Results keep first-occurrence order; when more than ``cap`` values
    match, a seeded sample is taken so repeated calls agree.
    """

    if cap < 1:
        raise ValueError("cap must be at least 1")
    matches = [
        v
        for v in _distinct_in_order(column.values)
        if value_text(v).startswith(prefix)
    ]
    rng = derived_rng(seed, "values", table_name, column.name, prefix, cap)
    return _sample_in_order(matches, cap, rng)
