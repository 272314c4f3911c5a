/* Editor model: executed cells (the engine's history), the draft cell
   being typed, and the live completion list.

   Invariants kept here:
   - when the list is non-empty there is exactly one focused item, and
     its index is within bounds;
   - the list belongs to one engine response (listSeq); anything older
     is dead the moment a newer response lands. */

import { CompletionItem, CompletionResponse, StateSnapshot } from "./protocol.js";

export interface CompletionListState {
  listSeq: number;
  items: CompletionItem[];
  focused: number; // always valid while items is non-empty
  diagnostics: string[];
}

export interface EditorState {
  cells: string[]; // executed sources, engine-owned
  draft: string;
  cursor: number;
  completion: CompletionListState | null;
  /** seq of the completion_request we are waiting on, if any */
  pendingSeq: number | null;
}

export function initialEditorState(): EditorState {
  return { cells: [], draft: "", cursor: 0, completion: null, pendingSeq: null };
}

export function applySnapshot(state: EditorState, snap: StateSnapshot): EditorState {
  // a report means a cell just ran: its source moved into history and the
  // editor opens a fresh draft. Without one (greeting, accept_item) the
  // engine's draft is authoritative — accept inserts text server-side.
  const ranCell = snap.report !== undefined;
  return {
    ...state,
    cells: snap.cells.slice(),
    draft: ranCell ? "" : snap.draft.code,
    cursor: ranCell ? 0 : snap.draft.cursor,
    // either way the old list no longer describes the draft
    completion: null,
  };
}

export function applyCompletionResponse(
  state: EditorState,
  seq: number,
  resp: CompletionResponse,
): EditorState {
  if (state.completion !== null && seq < state.completion.listSeq) {
    return state; // a newer list is already showing
  }
  if (resp.items.length === 0) {
    return { ...state, completion: null, pendingSeq: null };
  }
  const focused = clampIndex(resp.focused ?? 0, resp.items.length);
  return {
    ...state,
    pendingSeq: null,
    completion: {
      listSeq: resp.list_seq,
      items: resp.items,
      focused,
      diagnostics: resp.diagnostics,
    },
  };
}

export function moveFocus(state: EditorState, delta: number): EditorState {
  if (state.completion === null) return state;
  const n = state.completion.items.length;
  const focused = (state.completion.focused + delta + n) % n;
  return { ...state, completion: { ...state.completion, focused } };
}

export function closeCompletion(state: EditorState): EditorState {
  if (state.completion === null) return state;
  return { ...state, completion: null };
}

export function setDraft(state: EditorState, draft: string, cursor: number): EditorState {
  return { ...state, draft, cursor };
}

function clampIndex(index: number, length: number): number {
  if (index < 0) return 0;
  if (index >= length) return length - 1;
  return index;
}
