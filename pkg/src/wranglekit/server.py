"""Socket servers exposing sessions to local tools and the browser UI.

Two transports carry the same JSON frames:

* a plain TCP socket speaking newline-delimited JSON, for editors, tests,
  and scripted clients;
* an HTTP server that upgrades ``/ws`` to a WebSocket for the browser
  client and serves the static UI bundle next to it.

Every connection gets its own :class:`~wranglekit.session.Session`, so
requests within a connection are handled strictly in order while separate
clients never share state.  Each handler drains everything the client has
already sent before dispatching, which is what lets a rapid burst of
completion requests supersede one another.
"""

from __future__ import annotations

import base64
import hashlib
import json
import select
import socket
import socketserver
import struct
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .session import Session, SessionConfig, make_frame

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>wranglekit</title></head>
<body><h1>wranglekit engine</h1>
<p>The protocol endpoint is at <code>/ws</code>. No UI bundle is configured;
start the server with a frontend directory to serve one.</p></body></html>
"""


def _dump_frame(frame: dict) -> bytes:
    return json.dumps(frame, ensure_ascii=False).encode("utf-8") + b"\n"


def _parse_lines(lines: list[bytes]) -> tuple[list[dict], list[dict]]:
    """Decode NDJSON payloads: (messages, error frames for bad lines)."""
    messages: list[dict] = []
    errors: list[dict] = []
    for line in lines:
        text = line.strip()
        if not text:
            continue
        try:
            messages.append(json.loads(text))
        except ValueError:
            errors.append(make_frame(
                "error", 0, {"message": "frame is not valid JSON", "tag": "protocol"}
            ))
    return messages, errors


# ---------------------------------------------------------------------------
# NDJSON over TCP


class _NDJSONHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:  # pragma: no cover - exercised via live socket
        session = Session.create(self.server.session_config)
        sock = self.request
        try:
            sock.sendall(_dump_frame(session.snapshot_frame()))
            buffer = b""
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    return
                buffer += chunk
                if b"\n" not in buffer:
                    continue
                *lines, buffer = buffer.split(b"\n")
                messages, bad = _parse_lines(lines)
                for frame in bad:
                    sock.sendall(_dump_frame(frame))
                for frame in session.handle_all(messages):
                    sock.sendall(_dump_frame(frame))
        except (ConnectionError, BrokenPipeError):
            return


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, config: SessionConfig):
        self.session_config = config
        super().__init__(address, _NDJSONHandler)


# ---------------------------------------------------------------------------
# WebSocket framing (RFC 6455, server side, text frames only)


class WebSocketError(Exception):
    pass


def websocket_accept_value(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_ws_frame(payload: bytes, opcode: int = 0x1) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def decode_ws_frame(buffer: bytes) -> Optional[tuple[int, bytes, int]]:
    """(opcode, payload, bytes consumed) or None while the frame is short."""
    if len(buffer) < 2:
        return None
    first, second = buffer[0], buffer[1]
    if not first & 0x80:
        raise WebSocketError("fragmented client frames are not supported")
    opcode = first & 0x0F
    masked = bool(second & 0x80)
    length = second & 0x7F
    offset = 2
    if length == 126:
        if len(buffer) < offset + 2:
            return None
        (length,) = struct.unpack_from(">H", buffer, offset)
        offset += 2
    elif length == 127:
        if len(buffer) < offset + 8:
            return None
        (length,) = struct.unpack_from(">Q", buffer, offset)
        offset += 8
    if not masked:
        raise WebSocketError("client frames must be masked")
    if len(buffer) < offset + 4 + length:
        return None
    mask = buffer[offset : offset + 4]
    offset += 4
    raw = buffer[offset : offset + length]
    payload = bytes(b ^ mask[i % 4] for i, b in enumerate(raw))
    return opcode, payload, offset + length


class _WsConnection:
    """Byte buffer in, complete text messages out; control frames answered."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = b""
        self.closed = False

    def send_text(self, text: str) -> None:
        self.sock.sendall(encode_ws_frame(text.encode("utf-8")))

    def _pop_messages(self) -> list[str]:
        messages: list[str] = []
        while True:
            frame = decode_ws_frame(self.buffer)
            if frame is None:
                return messages
            opcode, payload, consumed = frame
            self.buffer = self.buffer[consumed:]
            if opcode == 0x1:
                messages.append(payload.decode("utf-8"))
            elif opcode == 0x9:  # ping
                self.sock.sendall(encode_ws_frame(payload, opcode=0xA))
            elif opcode == 0x8:  # close
                self.sock.sendall(encode_ws_frame(payload, opcode=0x8))
                self.closed = True
                return messages

    def read_batch(self) -> list[str]:
        """Block for at least one text message, then drain what's buffered."""
        while not self.closed:
            messages = self._pop_messages()
            if self.closed or messages:
                # pull in anything else that already arrived
                while True:
                    readable, _, _ = select.select([self.sock], [], [], 0)
                    if not readable:
                        break
                    chunk = self.sock.recv(65536)
                    if not chunk:
                        self.closed = True
                        break
                    self.buffer += chunk
                messages.extend(self._pop_messages())
                return messages
            chunk = self.sock.recv(65536)
            if not chunk:
                self.closed = True
                break
            self.buffer += chunk
        return []


# ---------------------------------------------------------------------------
# HTTP: static bundle + /ws upgrade


class _HttpHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "wranglekit"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def do_GET(self) -> None:
        if self.path == "/ws":
            self._upgrade_websocket()
            return
        if self.path == "/healthz":
            self._send_bytes(b'{"ok": true}\n', "application/json")
            return
        self._serve_static()

    def do_HEAD(self) -> None:
        if self.path == "/ws":
            self.send_error(400, "expected a WebSocket upgrade")
            return
        if self.path == "/healthz":
            self._send_bytes(b'{"ok": true}\n', "application/json")
            return
        self._serve_static()

    # -- websocket ----------------------------------------------------------

    def _upgrade_websocket(self) -> None:
        key = self.headers.get("Sec-WebSocket-Key")
        if (
            self.headers.get("Upgrade", "").lower() != "websocket"
            or not key
        ):
            self.send_error(400, "expected a WebSocket upgrade")
            return
        accept = websocket_accept_value(key)
        self.send_response_only(101, "Switching Protocols")
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", accept)
        self.end_headers()
        self.close_connection = True

        session = Session.create(self.server.session_config)
        conn = _WsConnection(self.connection)
        try:
            conn.send_text(json.dumps(session.snapshot_frame(), ensure_ascii=False))
            while not conn.closed:
                texts = conn.read_batch()
                messages, bad = _parse_lines([t.encode("utf-8") for t in texts])
                for frame in bad:
                    conn.send_text(json.dumps(frame, ensure_ascii=False))
                for frame in session.handle_all(messages):
                    conn.send_text(json.dumps(frame, ensure_ascii=False))
        except (ConnectionError, BrokenPipeError, WebSocketError):
            pass

    # -- static files ---------------------------------------------------------

    def _serve_static(self) -> None:
        root: Optional[Path] = self.server.frontend_dir
        path = self.path.split("?", 1)[0]
        if path == "/":
            path = "/index.html"
        if root is None:
            if path == "/index.html":
                self._send_bytes(_PLACEHOLDER_PAGE.encode("utf-8"), _CONTENT_TYPES[".html"])
            else:
                self.send_error(404, "no UI bundle configured")
            return
        target = (root / path.lstrip("/")).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self.send_error(404, "not found")
            return
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(target.read_bytes(), content_type)

    def _send_bytes(self, body: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)


class _HTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, config: SessionConfig, frontend_dir: Optional[Path]):
        self.session_config = config
        self.frontend_dir = frontend_dir
        super().__init__(address, _HttpHandler)


# ---------------------------------------------------------------------------
# Facade


class SessionServer:
    """Runs both transports; ``port``/``http_port`` 0 picks free ports."""

    def __init__(
        self,
        config: Optional[SessionConfig] = None,
        *,
        host: str = "127.0.0.1",
        port: int = 8765,
        http_port: int = 8766,
        frontend_dir: Optional[str] = None,
    ):
        self.config = config or SessionConfig()
        front = Path(frontend_dir) if frontend_dir else None
        self._tcp = _TCPServer((host, port), self.config)
        self._http = _HTTPServer((host, http_port), self.config, front)
        self._threads: list[threading.Thread] = []

    @property
    def tcp_address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    @property
    def http_address(self) -> tuple[str, int]:
        return self._http.server_address[:2]

    def start(self) -> None:
        """Serve both transports on background threads (for embedding/tests)."""
        for server in (self._tcp, self._http):
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)

    def serve_forever(self) -> None:  # pragma: no cover - blocking entry point
        self.start()
        try:
            for thread in self._threads:
                thread.join()
        except KeyboardInterrupt:
            self.shutdown()

    def shutdown(self) -> None:
        for server in (self._tcp, self._http):
            server.shutdown()
            server.server_close()
