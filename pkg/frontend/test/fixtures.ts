/* Payload builders for tests: shaped exactly like the engine's JSON. */

import {
  ColumnProfile,
  HighlightSpec,
  StateSnapshot,
  TableEntry,
} from "../src/protocol.js";

export function makeEntry(
  name: string,
  columns: string[],
  rowCount: number,
): TableEntry {
  const profiles: ColumnProfile[] = columns.map((col) => ({
    table: name,
    name: col,
    dtype: "categorical",
    null_count: 0,
    sortedness: "none",
    cardinality: rowCount,
    unique_values: [],
  }));
  const rows = Array.from({ length: rowCount }, (_, r) =>
    columns.map((col) => `${col}${r}`),
  );
  return {
    table: { name, shape: [rowCount, columns.length], column_names: columns },
    columns: profiles,
    rows: { table: name, columns, rows },
  };
}

export function makeSnapshot(entries: TableEntry[]): StateSnapshot {
  return {
    session: "test",
    env_version: 1,
    profiles_version: 1,
    tables: entries,
    cells: [],
    draft: { code: "", cursor: 0 },
  };
}

export function makeHighlight(partial: Partial<HighlightSpec>): HighlightSpec {
  return {
    expand_tables: [],
    collapse_others: true,
    show_sample_rows: {},
    highlight_columns: [],
    anchored_columns: [],
    missing_names: [],
    ...partial,
  };
}
