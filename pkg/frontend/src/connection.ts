/* WebSocket link to the engine.

   One connection = one engine session. Outgoing messages get a
   monotonically increasing seq; incoming frames are dispatched in arrival
   order (the server already serializes per connection). Frames marked
   superseded are dropped here so no downstream consumer ever sees a
   stale response. */

import { ClientType, Frame, isFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

/** The subset of the WebSocket API the connection needs; lets tests and
    the Node integration harness substitute their own socket. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface ConnectionOptions {
  url: string;
  socketFactory?: (url: string) => SocketLike;
  /** Reconnect delay; 0 disables reconnecting (tests). */
  reconnectMs?: number;
  onFrame: (frame: Frame) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

export class EngineConnection {
  private socket: SocketLike | null = null;
  private nextSeq = 1;
  private opts: Required<Pick<ConnectionOptions, "reconnectMs">> &
    ConnectionOptions;
  private closedByUs = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  status: ConnectionStatus = "closed";

  constructor(options: ConnectionOptions) {
    this.opts = { reconnectMs: 1000, ...options };
  }

  connect(): void {
    this.closedByUs = false;
    const factory =
      this.opts.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.setStatus("connecting");
    const socket = factory(this.opts.url);
    this.socket = socket;
    socket.onopen = () => this.setStatus("open");
    socket.onmessage = (ev) => this.receive(ev.data);
    socket.onerror = () => {
      /* onclose follows; the badge flips there */
    };
    socket.onclose = () => {
      this.socket = null;
      this.setStatus("closed");
      if (!this.closedByUs && this.opts.reconnectMs > 0) {
        this.reconnectTimer = setTimeout(
          () => this.connect(),
          this.opts.reconnectMs,
        );
      }
    };
  }

  close(): void {
    this.closedByUs = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
  }

  /** Send one client message; returns its seq, or null when offline
      (assistant features are additive — never queue, never throw). */
  send(type: ClientType, payload: Record<string, unknown>): number | null {
    if (this.status !== "open" || this.socket === null) return null;
    const seq = this.nextSeq++;
    this.socket.send(JSON.stringify({ type, seq, payload }));
    return seq;
  }

  private receive(data: unknown): void {
    let parsed: unknown;
    try {
      parsed = JSON.parse(String(data));
    } catch {
      console.warn("engine sent a frame that is not valid JSON");
      return;
    }
    if (!isFrame(parsed)) {
      console.warn("engine sent a malformed frame", parsed);
      return;
    }
    if (parsed.superseded) return; // stale by the time it arrived
    this.opts.onFrame(parsed);
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.opts.onStatus?.(status);
  }
}
