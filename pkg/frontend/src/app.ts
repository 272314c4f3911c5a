/* Application shell: wires the engine connection to the editor pane and
   the data view side panel.

   Layout is a fixed right split — the data view stays out of the code's
   way; the divider is draggable. Losing the socket keeps the editor fully
   usable: completions, highlights and previews simply stop updating and
   the status badge says so. */

import { EngineConnection } from "./connection.js";
import {
  applyHighlight,
  applyPreview,
  applySnapshot,
  DataViewState,
  initialDataViewState,
  toggleCard,
} from "./dataView.js";
import { CompletionWidget } from "./completionWidget.js";
import { renderDataView } from "./render.js";
import {
  ErrorPayload,
  Frame,
  HighlightUpdate,
  PreviewUpdate,
  StateSnapshot,
} from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing #${id} in the page shell`);
  return found as T;
}

export function startApp(): void {
  const cellsEl = el<HTMLElement>("cells");
  const input = el<HTMLTextAreaElement>("draft");
  const listEl = el<HTMLElement>("completion-list");
  const panel = el<HTMLElement>("data-view");
  const badge = el<HTMLElement>("status-badge");
  const statusLine = el<HTMLElement>("status-line");
  const runButton = el<HTMLButtonElement>("run");
  const divider = el<HTMLElement>("divider");

  let dataView: DataViewState = initialDataViewState();
  const repaint = () => renderDataView(panel, dataView);

  const connection = new EngineConnection({
    url: `ws://${location.host}/ws`,
    onStatus: (status) => {
      badge.dataset.status = status;
      badge.textContent = status === "open" ? "connected" : status;
      input.disabled = false; // the editor never locks up on the socket
    },
    onFrame: (frame) => {
      widget.handleFrame(frame);
      dispatchToPanel(frame);
    },
  });

  const widget = new CompletionWidget({
    input,
    listEl,
    send: (type, payload) => connection.send(type, payload),
    onState: (state) => {
      cellsEl.textContent = "";
      state.cells.forEach((source, i) => {
        const cell = document.createElement("pre");
        cell.className = "cell";
        cell.dataset.index = String(i);
        cell.textContent = source;
        cellsEl.appendChild(cell);
      });
    },
  });

  function dispatchToPanel(frame: Frame): void {
    switch (frame.type) {
      case "state_snapshot":
        dataView = applySnapshot(dataView, frame.payload as StateSnapshot);
        break;
      case "highlight_update":
        dataView = applyHighlight(
          dataView,
          (frame.payload as HighlightUpdate).highlight,
        );
        break;
      case "preview_update":
        dataView = applyPreview(dataView, (frame.payload as PreviewUpdate).preview);
        break;
      case "error": {
        const err = frame.payload as ErrorPayload;
        statusLine.textContent = `${err.tag} error: ${err.message}`;
        statusLine.classList.add("error");
        return; // nothing changed in the panel
      }
      default:
        return;
    }
    statusLine.textContent = "";
    statusLine.classList.remove("error");
    repaint();
  }

  panel.addEventListener("click", (ev) => {
    const header = (ev.target as HTMLElement).closest(".card-header");
    if (header === null) return;
    const card = header.closest<HTMLElement>(".table-card");
    const name = card?.dataset.table;
    if (name !== undefined) {
      dataView = toggleCard(dataView, name);
      repaint();
    }
  });

  runButton.addEventListener("click", () => widget.runDraft());

  // draggable right split
  let dragging = false;
  divider.addEventListener("mousedown", () => {
    dragging = true;
    document.body.classList.add("dragging");
  });
  window.addEventListener("mouseup", () => {
    dragging = false;
    document.body.classList.remove("dragging");
  });
  window.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    const width = Math.min(
      Math.max(window.innerWidth - ev.clientX, 240),
      window.innerWidth - 280,
    );
    document.documentElement.style.setProperty("--panel-width", `${width}px`);
  });

  connection.connect();
}

// auto-start when loaded as the page bundle (tests import pieces directly)
if (typeof document !== "undefined" && document.getElementById("data-view") !== null) {
  startApp();
}
