/* Side-panel model: one card per live table, driven entirely by engine
   payloads. The panel never invents state — the rendered highlight set
   is exactly the last highlight_update, the preview overlay is exactly
   the last preview_update, and both clear when a snapshot replaces the
   tables they referred to.

   Invariants kept here:
   - at most one preview overlay at a time;
   - the anchored strip lists exactly the engine's anchored_columns, in
     payload order;
   - unknown table names in an update are skipped with a console
     diagnostic instead of fabricating a card. */

import {
  HighlightSpec,
  PreviewPayload,
  StateSnapshot,
  TableEntry,
} from "./protocol.js";

export const SAMPLE_GRID_ROWS = 15; // leading rows shown when a card expands

export interface DataViewState {
  entries: TableEntry[]; // snapshot order (sorted by name, engine-side)
  expanded: Set<string>;
  highlight: HighlightSpec | null;
  preview: PreviewPayload | null;
  /** card the preview overlay is attached to, when it names a live table */
  previewTable: string | null;
}

export function initialDataViewState(): DataViewState {
  return {
    entries: [],
    expanded: new Set(),
    highlight: null,
    preview: null,
    previewTable: null,
  };
}

export function applySnapshot(state: DataViewState, snap: StateSnapshot): DataViewState {
  const names = new Set(snap.tables.map((e) => e.table.name));
  const expanded = new Set([...state.expanded].filter((n) => names.has(n)));
  return {
    entries: snap.tables,
    expanded,
    // stale decorations would point at columns that may no longer exist
    highlight: null,
    preview: null,
    previewTable: null,
  };
}

export function applyHighlight(state: DataViewState, spec: HighlightSpec): DataViewState {
  const known = new Set(state.entries.map((e) => e.table.name));
  const expanded = spec.collapse_others ? new Set<string>() : new Set(state.expanded);
  for (const name of spec.expand_tables) {
    if (!known.has(name)) {
      console.warn(`highlight_update names unknown table ${JSON.stringify(name)}; card skipped`);
      continue;
    }
    expanded.add(name);
  }
  return { ...state, expanded, highlight: spec };
}

export function applyPreview(state: DataViewState, preview: PreviewPayload): DataViewState {
  let previewTable: string | null = null;
  if (preview.ok) {
    const target =
      preview.table ?? (preview.form === "table_pair" ? preview.original.table : null);
    if (target !== null) {
      const known = state.entries.some((e) => e.table.name === target);
      if (!known) {
        console.warn(
          `preview_update names unknown table ${JSON.stringify(target)}; overlay skipped`,
        );
        return { ...state, preview: null, previewTable: null };
      }
      previewTable = target;
    }
  }
  // replacing, not stacking: at most one overlay is ever visible
  return { ...state, preview, previewTable };
}

export function clearPreview(state: DataViewState): DataViewState {
  if (state.preview === null) return state;
  return { ...state, preview: null, previewTable: null };
}

export function toggleCard(state: DataViewState, name: string): DataViewState {
  const expanded = new Set(state.expanded);
  if (expanded.has(name)) expanded.delete(name);
  else expanded.add(name);
  return { ...state, expanded };
}

// --- render-model helpers (pure; the DOM layer stays dumb) -------------------

export function isExpanded(state: DataViewState, name: string): boolean {
  return state.expanded.has(name);
}

export function showsSampleRows(state: DataViewState, name: string): boolean {
  if (!isExpanded(state, name)) return false;
  if (state.highlight === null) return true; // expanded by hand
  return state.highlight.show_sample_rows[name] ?? true;
}

export function highlightedColumns(state: DataViewState, name: string): Set<string> {
  const out = new Set<string>();
  if (state.highlight === null) return out;
  for (const [table, column] of state.highlight.highlight_columns) {
    if (table === name) out.add(column);
  }
  return out;
}

export function anchoredColumns(state: DataViewState): [string, string][] {
  return state.highlight === null ? [] : state.highlight.anchored_columns;
}
