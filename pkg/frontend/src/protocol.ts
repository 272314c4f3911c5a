/* Frame and payload types for the engine's session protocol.
   These mirror the JSON the server actually sends; nothing here is
   invented client-side. See docs/protocol.md in the engine repo. */

export type ClientType =
  | "execute_cell"
  | "completion_request"
  | "focus_changed"
  | "accept_item";

export type ServerType =
  | "state_snapshot"
  | "completion_response"
  | "highlight_update"
  | "preview_update"
  | "error";

export interface Frame<T = unknown> {
  type: ServerType;
  seq: number;
  superseded: boolean;
  payload: T;
}

// --- state_snapshot ---------------------------------------------------------

export interface TableHeader {
  name: string;
  shape: [number, number]; // rows, cols
  column_names: string[];
}

export interface ColumnProfile {
  table: string;
  name: string;
  dtype: string;
  null_count: number;
  sortedness: "ascending" | "descending" | "none";
  cardinality: number;
  unique_values?: unknown[];
  value_frequency?: [unknown, number][];
  value_format?: string;
  value_range?: [unknown, unknown];
  sample_points?: unknown[];
}

export interface RowSample {
  table: string;
  columns: string[];
  rows: unknown[][];
}

/** One snapshot entry: all three context layers for a live table. */
export interface TableEntry {
  table: TableHeader;
  columns: ColumnProfile[];
  rows: RowSample;
}

export interface StateSnapshot {
  session: string;
  env_version: number;
  profiles_version: number;
  tables: TableEntry[];
  cells: string[];
  draft: { code: string; cursor: number };
  report?: { statements: number; bindings: string[] };
}

// --- completion_response ----------------------------------------------------

export interface CompletionItem {
  text: string; // exact insertion at the cursor
  label: string; // full-token display form
  kind: "single_token" | "multi_token";
  provenance: "rule" | "model";
  score: number;
  mentioned_tables: string[];
  mentioned_columns: [string, string][];
  completes_operation: boolean;
  verified: boolean;
  unknown_names: string[];
}

export interface CompletionResponse {
  list_seq: number;
  items: CompletionItem[];
  diagnostics: string[];
  focused: number | null;
}

// --- highlight_update / preview_update ---------------------------------------

export interface HighlightSpec {
  expand_tables: string[];
  collapse_others: boolean;
  show_sample_rows: Record<string, boolean>;
  highlight_columns: [string, string][];
  anchored_columns: [string, string][];
  missing_names: string[];
}

export interface HighlightUpdate {
  focused: number | null;
  highlight: HighlightSpec;
}

export interface PreviewColumnDiff {
  form: "column_diff";
  ok: true;
  sample_based: boolean;
  table: string;
  column: string;
  new_column: string;
  original_values: unknown[];
  new_values: unknown[];
  changed_mask: boolean[];
}

export interface PreviewRowFilter {
  form: "row_filter";
  ok: true;
  sample_based: boolean;
  table: string;
  deleted_rows: number[];
  matched_literals: [string | null, unknown][];
}

export interface PreviewTablePair {
  form: "table_pair";
  ok: true;
  sample_based: boolean;
  table?: string;
  original: RowSample;
  result: RowSample;
}

export interface PreviewFailure {
  form: string;
  ok: false;
  error: string;
  error_tag: "data" | "grammar";
}

export type PreviewPayload =
  | PreviewColumnDiff
  | PreviewRowFilter
  | PreviewTablePair
  | PreviewFailure;

export interface PreviewUpdate {
  focused: number | null;
  preview: PreviewPayload;
}

export interface ErrorPayload {
  message: string;
  tag: "grammar" | "data" | "protocol";
}

/** Narrow an incoming frame by its type tag. */
export function isFrame(value: unknown): value is Frame {
  if (typeof value !== "object" || value === null) return false;
  const f = value as Record<string, unknown>;
  return (
    typeof f.type === "string" &&
    typeof f.seq === "number" &&
    typeof f.superseded === "boolean" &&
    "payload" in f
  );
}
