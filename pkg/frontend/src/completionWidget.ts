/* The completion dropdown and its keyboard protocol.

   Typing schedules one debounced completion_request per burst; arrow keys
   move focus locally *and* tell the engine (focus_changed) so highlights
   and previews follow; Enter/Tab accepts (accept_item — the engine does
   the insertion and the next snapshot carries the grown draft); Escape
   closes the list without a message.

   The editor never blocks on the network: list updates are strictly
   additive overlays on an always-editable textarea. */

import { debounce, Debounced } from "./debounce.js";
import {
  applyCompletionResponse,
  applySnapshot,
  closeCompletion,
  EditorState,
  initialEditorState,
  moveFocus,
  setDraft,
} from "./editorState.js";
import {
  CompletionItem,
  CompletionResponse,
  Frame,
  StateSnapshot,
} from "./protocol.js";

export const COMPLETION_DEBOUNCE_MS = 150;

/** Fixed two-icon vocabulary: where a candidate came from. */
export function itemIcon(item: CompletionItem): string {
  return item.provenance === "rule" ? "▦" : "✦"; // ▦ data token, ✦ generated
}

export type SendFn = (
  type: "completion_request" | "focus_changed" | "accept_item" | "execute_cell",
  payload: Record<string, unknown>,
) => number | null;

export interface CompletionWidgetOptions {
  input: HTMLTextAreaElement;
  listEl: HTMLElement;
  send: SendFn;
  debounceMs?: number;
  /** called after every state change so the host can re-render cells etc. */
  onState?: (state: EditorState) => void;
}

export class CompletionWidget {
  state: EditorState = initialEditorState();
  private requestCompletion: Debounced<[]>;
  private opts: CompletionWidgetOptions;

  constructor(opts: CompletionWidgetOptions) {
    this.opts = opts;
    this.requestCompletion = debounce(
      () => this.sendCompletionRequest(),
      opts.debounceMs ?? COMPLETION_DEBOUNCE_MS,
    );
    opts.input.addEventListener("input", () => this.handleInput());
    opts.input.addEventListener("keydown", (ev) => this.handleKeydown(ev));
    this.renderList();
  }

  // --- outgoing ---------------------------------------------------------------

  private handleInput(): void {
    const { input } = this.opts;
    this.setState(
      setDraft(this.state, input.value, input.selectionStart ?? input.value.length),
    );
    this.requestCompletion();
  }

  private sendCompletionRequest(): void {
    this.opts.send("completion_request", {
      code: this.state.draft,
      cursor: this.state.cursor,
    });
  }

  private handleKeydown(ev: KeyboardEvent): void {
    const list = this.state.completion;
    if (list === null) {
      if (ev.key === "Enter" && (ev.ctrlKey || ev.metaKey)) {
        ev.preventDefault();
        this.runDraft();
      }
      return;
    }
    switch (ev.key) {
      case "ArrowDown":
      case "ArrowUp": {
        ev.preventDefault();
        const next = moveFocus(this.state, ev.key === "ArrowDown" ? 1 : -1);
        this.setState(next);
        this.opts.send("focus_changed", {
          list_seq: list.listSeq,
          index: next.completion?.focused ?? 0,
        });
        break;
      }
      case "Enter":
      case "Tab":
        ev.preventDefault();
        if (ev.key === "Enter" && (ev.ctrlKey || ev.metaKey)) {
          this.runDraft();
          break;
        }
        this.opts.send("accept_item", {
          list_seq: list.listSeq,
          index: list.focused,
        });
        // the engine's snapshot will deliver the grown draft; the list is
        // consumed server-side the moment the accept lands
        this.setState(closeCompletion(this.state));
        break;
      case "Escape":
        ev.preventDefault();
        this.setState(closeCompletion(this.state));
        break;
      default:
        break;
    }
  }

  /** Run the current draft as a cell (the Run button and Ctrl+Enter path). */
  runDraft(): void {
    const source = this.state.draft;
    if (source.trim() === "") return;
    this.requestCompletion.cancel(); // the burst is moot once the cell runs
    this.opts.send("execute_cell", { source });
  }

  // --- incoming ---------------------------------------------------------------

  handleFrame(frame: Frame): void {
    switch (frame.type) {
      case "completion_response":
        this.setState(
          applyCompletionResponse(
            this.state,
            frame.seq,
            frame.payload as CompletionResponse,
          ),
        );
        break;
      case "state_snapshot": {
        this.setState(applySnapshot(this.state, frame.payload as StateSnapshot));
        const { input } = this.opts;
        input.value = this.state.draft;
        input.selectionStart = input.selectionEnd = this.state.cursor;
        break;
      }
      default:
        break;
    }
  }

  // --- rendering ---------------------------------------------------------------

  private setState(state: EditorState): void {
    this.state = state;
    this.renderList();
    this.opts.onState?.(state);
  }

  private renderList(): void {
    const { listEl } = this.opts;
    listEl.textContent = "";
    const list = this.state.completion;
    if (list === null) {
      listEl.classList.add("hidden");
      return;
    }
    listEl.classList.remove("hidden");
    list.items.forEach((item, index) => {
      const row = document.createElement("div");
      row.className = index === list.focused ? "completion-item focused" : "completion-item";
      row.dataset.index = String(index);
      const icon = document.createElement("span");
      icon.className = `item-icon ${item.provenance}`;
      icon.textContent = itemIcon(item);
      const label = document.createElement("span");
      label.className = "item-label";
      label.textContent = item.label;
      row.append(icon, label);
      if (!item.verified) {
        const flag = document.createElement("span");
        flag.className = "item-unverified";
        flag.textContent = `unknown: ${item.unknown_names.join(", ")}`;
        row.appendChild(flag);
      }
      row.addEventListener("mousedown", (ev) => {
        ev.preventDefault(); // keep the textarea focused
        this.opts.send("accept_item", { list_seq: list.listSeq, index });
        this.setState(closeCompletion(this.state));
      });
      listEl.appendChild(row);
    });
  }
}
