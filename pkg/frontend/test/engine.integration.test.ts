/* End-to-end against a live engine in mock-model mode: spawn the server,
   speak the real protocol over a WebSocket, and feed every payload through
   the same state/render modules the app uses. What these tests assert on
   the DOM is exactly what a browser session would show. */

import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  applyHighlight,
  applyPreview,
  applySnapshot,
  DataViewState,
  initialDataViewState,
} from "../src/dataView.js";
import { renderDataView } from "../src/render.js";
import {
  CompletionResponse,
  Frame,
  HighlightUpdate,
  PreviewUpdate,
  StateSnapshot,
  isFrame,
} from "../src/protocol.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const ENGINE_DATA = path.resolve(HERE, "../../tests/data");
const TCP_PORT = 18965;
const HTTP_PORT = 18966;

const LOAD_CELL = 'movies = load_csv("movies.csv")\nratings = load_csv("ratings.csv")';
const MERGE_DRAFT = "joined = movies.merge(ratings";
const MERGE_CELL = 'joined = movies.merge(ratings, left_on="netflixTitle", right_on="title")';
const FILTER_DRAFT = 'big = movies[movies["releaseYear"] > ';
const SORT_DRAFT = 'x = movies.sort_values(by="n';
const SELECT_CELL = 'joined2 = joined[["netflixTitle", "durationOfTime"]]';
const REPLACE_DRAFT =
  'joined2["durationOfTime"] = joined2["durationOfTime"].str.replace(" minutes"';

class FrameQueue {
  private frames: Frame[] = [];
  private waiters: ((f: Frame) => void)[] = [];

  push(frame: Frame): void {
    const waiter = this.waiters.shift();
    if (waiter !== undefined) waiter(frame);
    else this.frames.push(frame);
  }

  pull(timeoutMs = 10000): Promise<Frame> {
    const ready = this.frames.shift();
    if (ready !== undefined) return Promise.resolve(ready);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for a frame")),
        timeoutMs,
      );
      this.waiters.push((f) => {
        clearTimeout(timer);
        resolve(f);
      });
    });
  }
}

let server: ChildProcess;
let ws: WebSocket;
const queue = new FrameQueue();
let seq = 0;

function send(type: string, payload: Record<string, unknown>): number {
  seq += 1;
  ws.send(JSON.stringify({ type, seq, payload }));
  return seq;
}

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 25000;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${HTTP_PORT}/healthz`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("engine did not come up in time");
}

beforeAll(async () => {
  server = spawn(
    "wranglekit",
    [
      "serve",
      "--data-dir",
      ENGINE_DATA,
      "--mock-model",
      path.join(ENGINE_DATA, "mock_responses.json"),
      "--port",
      String(TCP_PORT),
      "--http-port",
      String(HTTP_PORT),
    ],
    { stdio: "ignore" },
  );
  await waitForHealth();
  ws = new WebSocket(`ws://127.0.0.1:${HTTP_PORT}/ws`);
  ws.on("message", (data) => {
    const parsed = JSON.parse(String(data));
    if (isFrame(parsed)) queue.push(parsed);
  });
  await new Promise<void>((resolve, reject) => {
    ws.once("open", resolve);
    ws.once("error", reject);
  });
});

afterAll(() => {
  ws?.close();
  server?.kill();
});

describe("live engine session", () => {
  let view: DataViewState = initialDataViewState();
  let root: HTMLElement;
  let mergeListSeq = 0;

  const repaint = () => renderDataView(root, view);

  /** Pull a full completion bundle: response, highlight, and — whenever the
      focused candidate completes the statement — the preview that follows. */
  async function pullBundle(reqSeq: number): Promise<{
    response: CompletionResponse;
    highlight: HighlightUpdate;
    preview: PreviewUpdate | null;
  }> {
    const first = await queue.pull();
    expect(first.type).toBe("completion_response");
    expect(first.seq).toBe(reqSeq);
    const response = first.payload as CompletionResponse;
    const second = await queue.pull();
    expect(second.type).toBe("highlight_update");
    const highlight = second.payload as HighlightUpdate;
    const focused =
      response.focused === null ? undefined : response.items[response.focused];
    let preview: PreviewUpdate | null = null;
    if (focused !== undefined && focused.completes_operation) {
      const third = await queue.pull();
      expect(third.type).toBe("preview_update");
      preview = third.payload as PreviewUpdate;
    }
    return { response, highlight, preview };
  }

  beforeAll(() => {
    root = document.createElement("div");
    document.body.appendChild(root);
  });

  it("greets with an empty snapshot before any request", async () => {
    const greeting = await queue.pull();
    expect(greeting.type).toBe("state_snapshot");
    expect(greeting.seq).toBe(0);
    expect((greeting.payload as StateSnapshot).tables).toEqual([]);
  });

  it("executing a cell delivers all three context layers per table", async () => {
    send("execute_cell", { source: LOAD_CELL });
    const frame = await queue.pull();
    expect(frame.type).toBe("state_snapshot");
    const snap = frame.payload as StateSnapshot;
    expect(snap.env_version).toBe(1);
    expect(snap.profiles_version).toBe(1);
    const movies = snap.tables.find((t) => t.table.name === "movies");
    expect(movies).toBeDefined();
    expect(movies!.columns.map((c) => c.name)).toEqual(movies!.table.column_names);
    // sample grid contract: the engine sends at most 15 leading rows
    expect(movies!.rows.rows.length).toBe(Math.min(15, movies!.table.shape[0]));

    view = applySnapshot(view, snap);
    repaint();
    expect(root.querySelectorAll(".table-card")).toHaveLength(2);
  });

  it("a join draft highlights the key columns and previews the joined table", async () => {
    const reqSeq = send("completion_request", { code: MERGE_DRAFT });
    const { response, highlight, preview } = await pullBundle(reqSeq);
    expect(response.items.length).toBeGreaterThan(0);
    mergeListSeq = response.list_seq;

    expect(highlight.highlight.highlight_columns).toContainEqual(["movies", "netflixTitle"]);
    expect(highlight.highlight.expand_tables).toContain("movies");

    expect(preview).not.toBeNull();
    const pair = preview!.preview;
    if (!pair.ok || pair.form !== "table_pair") {
      throw new Error(`expected a table_pair preview, got ${JSON.stringify(pair).slice(0, 120)}`);
    }

    view = applyHighlight(view, highlight.highlight);
    view = applyPreview(view, pair);
    repaint();
    const card = root.querySelector(".table-card[data-table='movies']");
    expect(card?.className).toContain("expanded");
    const result = card?.querySelector(".pair-result .sample-grid");
    expect(result).not.toBeNull();
    expect(result!.querySelectorAll("tbody tr").length).toBeLessThanOrEqual(15);
  });

  it("accepting the focused item grows the draft server-side", async () => {
    send("accept_item", { list_seq: mergeListSeq, index: 0 });
    const frame = await queue.pull();
    expect(frame.type).toBe("state_snapshot");
    const snap = frame.payload as StateSnapshot;
    expect(snap.draft.code).toBe(MERGE_CELL);
    expect(snap.draft.cursor).toBe(snap.draft.code.length);
    expect(snap.env_version).toBe(1); // accepting never executes
  });

  it("running the accepted draft adds the joined table and clears overlays", async () => {
    send("execute_cell", { source: MERGE_CELL });
    const frame = await queue.pull();
    const snap = frame.payload as StateSnapshot;
    expect(snap.env_version).toBe(2);
    expect(snap.tables.map((t) => t.table.name)).toContain("joined");

    view = applySnapshot(view, snap);
    repaint();
    expect(root.querySelectorAll(".table-card")).toHaveLength(3);
    expect(root.querySelector(".pair-result")).toBeNull();
  });

  it("a filter draft tints exactly the rows the engine would delete", async () => {
    const reqSeq = send("completion_request", { code: FILTER_DRAFT });
    const { response, highlight, preview } = await pullBundle(reqSeq);
    expect(response.items.length).toBeGreaterThan(0);
    expect(preview).not.toBeNull();
    const filter = preview!.preview;
    if (!filter.ok || filter.form !== "row_filter") {
      throw new Error(`expected a row_filter preview, got ${JSON.stringify(filter).slice(0, 120)}`);
    }

    view = applyHighlight(view, highlight.highlight);
    view = applyPreview(view, filter);
    repaint();
    const rows = [
      ...root.querySelectorAll(".table-card[data-table='movies'] .sample-row"),
    ];
    const tinted = rows.flatMap((el, i) => (el.className.includes("deleted") ? [i] : []));
    expect(tinted).toEqual(filter.deleted_rows.filter((i) => i < 15));
    expect(tinted.length).toBeGreaterThan(0);
    expect(root.querySelector(".filter-summary")?.textContent).toContain("deleted");
  });

  it("a quoted-prefix completion lists matching columns and marks them relevant", async () => {
    const reqSeq = send("completion_request", { code: SORT_DRAFT });
    const { response, highlight } = await pullBundle(reqSeq);
    expect(response.items.map((i) => i.label)).toEqual(["netflixTitle", "nf_type"]);

    view = applyHighlight(view, highlight.highlight);
    repaint();
    const marked = root.querySelectorAll(
      ".table-card[data-table='movies'] .schema-row.relevant",
    );
    expect([...marked].map((el) => (el as HTMLElement).dataset.column)).toEqual([
      "netflixTitle",
    ]);
  });

  it("a suffix-strip draft previews the rewritten column with bold changed cells", async () => {
    send("execute_cell", { source: SELECT_CELL });
    const snapFrame = await queue.pull();
    view = applySnapshot(view, snapFrame.payload as StateSnapshot);

    const reqSeq = send("completion_request", { code: REPLACE_DRAFT });
    const { highlight, preview } = await pullBundle(reqSeq);
    expect(preview).not.toBeNull();
    const diff = preview!.preview;
    if (!diff.ok || diff.form !== "column_diff") {
      throw new Error(`expected a column_diff preview, got ${JSON.stringify(diff).slice(0, 120)}`);
    }
    expect(diff.new_values).toEqual(
      diff.original_values.map((v) => String(v).replace(" minutes", "")),
    );

    view = applyHighlight(view, highlight.highlight);
    view = applyPreview(view, diff);
    repaint();
    const card = root.querySelector(".table-card[data-table='joined2']");
    expect(card).not.toBeNull();
    const shown = card!.querySelectorAll(".sample-row").length;
    const bold = card!.querySelectorAll("td.preview.changed").length;
    expect(bold).toBe(diff.changed_mask.slice(0, shown).filter(Boolean).length);
    expect(bold).toBeGreaterThan(0);
  });

  it("after a request burst the newest request's frames land last and win", async () => {
    const oldSeq = send("completion_request", { code: MERGE_DRAFT });
    const newSeq = send("completion_request", { code: FILTER_DRAFT });
    const collected: Frame[] = [];
    for (let i = 0; i < 6; i += 1) collected.push(await queue.pull());
    const oldFrames = collected.filter((f) => f.seq === oldSeq);
    const newFrames = collected.filter((f) => f.seq === newSeq);
    expect(oldFrames).toHaveLength(3);
    expect(newFrames).toHaveLength(3);
    // requests are answered one at a time: every old frame precedes every new one
    expect(collected.findIndex((f) => f.seq === newSeq)).toBe(3);
    expect(newFrames.every((f) => f.superseded !== true)).toBe(true);

    // replaying arrival order the way the app does leaves the newest
    // request's list and preview on screen
    let shownList: number | null = null;
    let shownPreview: PreviewUpdate | null = null;
    for (const frame of collected) {
      if (frame.superseded === true) continue; // the connection layer drops these
      if (frame.type === "completion_response") shownList = frame.seq;
      if (frame.type === "preview_update") shownPreview = frame.payload as PreviewUpdate;
    }
    expect(shownList).toBe(newSeq);
    const last = shownPreview!.preview;
    expect(last.ok && last.form === "row_filter").toBe(true);
  });
});
