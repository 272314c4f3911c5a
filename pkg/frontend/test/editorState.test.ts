import { describe, expect, it } from "vitest";

import {
  applyCompletionResponse,
  applySnapshot,
  initialEditorState,
  moveFocus,
} from "../src/editorState.js";
import { CompletionItem, CompletionResponse } from "../src/protocol.js";
import { makeSnapshot } from "./fixtures.js";

function item(label: string): CompletionItem {
  return {
    text: label,
    label,
    kind: "single_token",
    provenance: "rule",
    score: 0,
    mentioned_tables: [],
    mentioned_columns: [],
    completes_operation: false,
    verified: true,
    unknown_names: [],
  };
}

function response(labels: string[], listSeq = 1): CompletionResponse {
  return { list_seq: listSeq, items: labels.map(item), diagnostics: [], focused: 0 };
}

describe("completion list state", () => {
  it("keeps exactly one in-bounds focused item while the list is non-empty", () => {
    let state = applyCompletionResponse(initialEditorState(), 1, response(["a", "b", "c"]));
    expect(state.completion?.focused).toBe(0);
    state = moveFocus(state, -1); // wraps
    expect(state.completion?.focused).toBe(2);
    state = moveFocus(state, 1);
    expect(state.completion?.focused).toBe(0);
  });

  it("clamps an out-of-range focus hint from the payload", () => {
    const resp = { ...response(["a", "b"]), focused: 9 };
    const state = applyCompletionResponse(initialEditorState(), 1, resp);
    expect(state.completion?.focused).toBe(1);
  });

  it("an empty response closes the list", () => {
    let state = applyCompletionResponse(initialEditorState(), 1, response(["a"]));
    state = applyCompletionResponse(state, 2, response([], 2));
    expect(state.completion).toBeNull();
  });

  it("a response older than the showing list is ignored", () => {
    let state = applyCompletionResponse(initialEditorState(), 5, response(["new"], 5));
    state = applyCompletionResponse(state, 3, response(["stale"], 3));
    expect(state.completion?.items.map((i) => i.label)).toEqual(["new"]);
  });
});

describe("snapshot application", () => {
  it("a run-cell snapshot moves the draft into history and clears it", () => {
    const withDraft = {
      ...initialEditorState(),
      draft: "x = movies.head(3)",
      cursor: 18,
    };
    const snap = {
      ...makeSnapshot([]),
      cells: ["x = movies.head(3)"],
      draft: { code: "x = movies.head(3)", cursor: 18 },
      report: { statements: 1, bindings: ["x"] },
    };
    const state = applySnapshot(withDraft, snap);
    expect(state.cells).toEqual(["x = movies.head(3)"]);
    expect(state.draft).toBe("");
    expect(state.cursor).toBe(0);
  });

  it("an accept snapshot adopts the engine's grown draft verbatim", () => {
    const snap = {
      ...makeSnapshot([]),
      draft: { code: 'x = movies.sort_values(by="netflixTitle"', cursor: 41 },
    };
    const state = applySnapshot(initialEditorState(), snap);
    expect(state.draft).toBe('x = movies.sort_values(by="netflixTitle"');
    expect(state.cursor).toBe(41);
    expect(state.completion).toBeNull(); // the list died with the old draft
  });
});
