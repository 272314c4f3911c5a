"""Transport tests: NDJSON over TCP, the WebSocket bridge, static files.

Frame-level helpers are unit-tested against hand-built byte sequences (and
the RFC 6455 worked example for the handshake); the live-socket tests then
check that both transports return exactly the frames a directly-driven
session produces.
"""

from __future__ import annotations

import base64
import json
import os
import socket
import struct

import pytest

from wranglekit.server import (
    SessionServer,
    WebSocketError,
    decode_ws_frame,
    encode_ws_frame,
    websocket_accept_value,
)
from wranglekit.session import Session, SessionConfig

from conftest import DATA_DIR


def server_config() -> SessionConfig:
    return SessionConfig(
        data_dir=str(DATA_DIR),
        mock_responses=str(DATA_DIR / "mock_responses.json"),
    )


@pytest.fixture(scope="module")
def server():
    # safe to share: every connection gets its own session
    srv = SessionServer(server_config(), port=0, http_port=0)
    srv.start()
    yield srv
    srv.shutdown()


# --- websocket framing units --------------------------------------------------


def test_handshake_matches_the_protocol_worked_example():
    # independent known-answer pair from the protocol specification
    assert (
        websocket_accept_value("dGhlIHNhbXBsZSBub25jZQ==")
        == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="
    )


def mask_client_frame(payload: bytes, opcode: int = 0x1, fin: bool = True) -> bytes:
    mask = b"\x01\x02\x03\x04"
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    first = (0x80 if fin else 0) | opcode
    if len(payload) < 126:
        head = bytes([first, 0x80 | len(payload)])
    elif len(payload) < 1 << 16:
        head = bytes([first, 0x80 | 126]) + struct.pack(">H", len(payload))
    else:
        head = bytes([first, 0x80 | 127]) + struct.pack(">Q", len(payload))
    return head + mask + masked


@pytest.mark.parametrize("size", [0, 1, 125, 126, 300, 70000])
def test_masked_frames_decode_to_their_payload(size):
    payload = bytes((i * 7) % 256 for i in range(size))
    frame = mask_client_frame(payload)
    opcode, decoded, consumed = decode_ws_frame(frame + b"tail")
    assert (opcode, decoded) == (0x1, payload)
    assert consumed == len(frame)


def test_partial_frames_return_none_until_complete():
    frame = mask_client_frame(b"hello over the wire")
    for cut in (0, 1, 3, len(frame) - 1):
        assert decode_ws_frame(frame[:cut]) is None
    assert decode_ws_frame(frame) is not None


def test_unmasked_and_fragmented_client_frames_are_rejected():
    with pytest.raises(WebSocketError):
        decode_ws_frame(encode_ws_frame(b"server-style frame") + b"")
    with pytest.raises(WebSocketError):
        decode_ws_frame(mask_client_frame(b"part", fin=False))


def test_server_frames_are_unmasked_with_fin_set():
    frame = encode_ws_frame(b"abc")
    assert frame[0] == 0x81
    assert frame[1] == 3  # no mask bit
    assert frame[2:] == b"abc"


# --- NDJSON over TCP ------------------------------------------------------------


class NdjsonClient:
    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=5)
        self.reader = self.sock.makefile("rb")

    def send(self, *messages: dict) -> None:
        blob = b"".join(
            json.dumps(m, ensure_ascii=False).encode() + b"\n" for m in messages
        )
        self.sock.sendall(blob)

    def send_raw(self, blob: bytes) -> None:
        self.sock.sendall(blob)

    def read(self, n: int) -> list[dict]:
        return [json.loads(self.reader.readline()) for _ in range(n)]

    def close(self) -> None:
        self.sock.close()


def test_tcp_connection_greets_with_a_snapshot(server):
    client = NdjsonClient(server.tcp_address)
    greeting = client.read(1)[0]
    assert greeting["type"] == "state_snapshot"
    assert greeting["seq"] == 0
    assert greeting["payload"]["env_version"] == 0
    client.close()


def test_tcp_frames_match_a_directly_driven_session(server):
    requests = [
        {"type": "execute_cell", "seq": 1,
         "payload": {"source": 'movies = load_csv("movies.csv")'}},
        {"type": "completion_request", "seq": 2,
         "payload": {"code": 'x = movies.sort_values(by="'}},
        {"type": "focus_changed", "seq": 3, "payload": {"list_seq": 2, "index": 1}},
    ]
    reference = Session.create(server_config())
    expected = [frame for req in requests for frame in reference.handle(req)]

    client = NdjsonClient(server.tcp_address)
    client.read(1)  # greeting
    for req in requests:
        client.send(req)
    got = client.read(len(expected))
    assert json.dumps(got, sort_keys=True) == json.dumps(expected, sort_keys=True)
    client.close()


def test_rapid_batch_supersedes_older_request(server):
    client = NdjsonClient(server.tcp_address)
    client.read(1)
    client.send({"type": "execute_cell", "seq": 1,
                 "payload": {"source": 'movies = load_csv("movies.csv")'}})
    client.read(1)
    client.send(
        {"type": "completion_request", "seq": 2,
         "payload": {"code": 'x = movies.sort_values(by="'}},
        {"type": "completion_request", "seq": 3,
         "payload": {"code": 'x = movies.sort_values(by="c'}},
    )
    frames = client.read(6)
    assert {f["seq"] for f in frames} == {2, 3}
    for frame in frames:
        assert frame["superseded"] is (frame["seq"] == 2)
    client.close()


def test_invalid_json_line_gets_a_protocol_error(server):
    client = NdjsonClient(server.tcp_address)
    client.read(1)
    client.send_raw(b"this is not json\n")
    frame = client.read(1)[0]
    assert frame["type"] == "error"
    assert frame["payload"]["tag"] == "protocol"
    # the connection stays usable afterwards
    client.send({"type": "execute_cell", "seq": 1, "payload": {"source": ""}})
    assert client.read(1)[0]["type"] == "state_snapshot"
    client.close()


def test_connections_do_not_share_state(server):
    first = NdjsonClient(server.tcp_address)
    first.read(1)
    first.send({"type": "execute_cell", "seq": 1,
                "payload": {"source": 'movies = load_csv("movies.csv")'}})
    assert first.read(1)[0]["payload"]["env_version"] == 1

    second = NdjsonClient(server.tcp_address)
    assert second.read(1)[0]["payload"]["env_version"] == 0
    first.close()
    second.close()


# --- HTTP + WebSocket ------------------------------------------------------------


def http_get(address, path, extra_headers=(), method="GET") -> tuple[int, bytes, dict]:
    host, port = address
    sock = socket.create_connection(address, timeout=5)
    lines = [f"{method} {path} HTTP/1.1", f"Host: {host}", "Connection: close"]
    lines.extend(extra_headers)
    sock.sendall(("\r\n".join(lines) + "\r\n\r\n").encode())
    blob = b""
    while True:
        chunk = sock.recv(65536)
        if not chunk:
            break
        blob += chunk
    sock.close()
    head, _, body = blob.partition(b"\r\n\r\n")
    status = int(head.split(b" ", 2)[1])
    headers = {}
    for line in head.split(b"\r\n")[1:]:
        name, _, value = line.decode().partition(":")
        headers[name.strip().lower()] = value.strip()
    return status, body, headers


def test_healthz_and_placeholder_page(server):
    status, body, _ = http_get(server.http_address, "/healthz")
    assert status == 200 and json.loads(body) == {"ok": True}
    status, body, headers = http_get(server.http_address, "/")
    assert status == 200
    assert b"wranglekit" in body
    assert headers["content-type"].startswith("text/html")


def test_static_bundle_serving_and_traversal_guard(tmp_path):
    (tmp_path / "index.html").write_text("<html>ui</html>", encoding="utf-8")
    (tmp_path / "app.js").write_text("console.log(1)", encoding="utf-8")
    srv = SessionServer(
        server_config(), port=0, http_port=0, frontend_dir=str(tmp_path)
    )
    srv.start()
    try:
        status, body, _ = http_get(srv.http_address, "/")
        assert (status, body) == (200, b"<html>ui</html>")
        status, body, headers = http_get(srv.http_address, "/app.js")
        assert status == 200 and b"console.log" in body
        assert headers["content-type"].startswith("text/javascript")
        status, _, _ = http_get(srv.http_address, "/missing.js")
        assert status == 404
        status, _, _ = http_get(srv.http_address, "/../pyproject.toml")
        assert status == 404
    finally:
        srv.shutdown()


def test_head_requests_send_headers_without_body(server):
    status, body, headers = http_get(server.http_address, "/healthz", method="HEAD")
    assert status == 200
    assert body == b""
    assert headers["content-type"] == "application/json"
    assert int(headers["content-length"]) > 0
    status, body, headers = http_get(server.http_address, "/", method="HEAD")
    assert status == 200 and body == b""
    assert headers["content-type"].startswith("text/html")


class WsClient:
    def __init__(self, address):
        host, _ = address
        self.sock = socket.create_connection(address, timeout=5)
        key = base64.b64encode(os.urandom(16)).decode()
        self.sock.sendall(
            (
                f"GET /ws HTTP/1.1\r\nHost: {host}\r\nUpgrade: websocket\r\n"
                f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
                "Sec-WebSocket-Version: 13\r\n\r\n"
            ).encode()
        )
        blob = b""
        while b"\r\n\r\n" not in blob:
            blob += self.sock.recv(4096)
        head, _, self.buffer = blob.partition(b"\r\n\r\n")
        assert b" 101 " in head.split(b"\r\n")[0]
        expected = websocket_accept_value(key)
        assert f"Sec-WebSocket-Accept: {expected}".encode() in head

    def send(self, message: dict) -> None:
        self.sock.sendall(
            mask_client_frame(json.dumps(message, ensure_ascii=False).encode())
        )

    def send_control(self, opcode: int, payload: bytes = b"") -> None:
        self.sock.sendall(mask_client_frame(payload, opcode=opcode))

    def read_frame(self) -> tuple[int, bytes]:
        while True:
            if len(self.buffer) >= 2:
                length = self.buffer[1] & 0x7F
                offset = 2
                if length == 126:
                    if len(self.buffer) >= 4:
                        (length,) = struct.unpack_from(">H", self.buffer, 2)
                        offset = 4
                    else:
                        length = None
                elif length == 127:
                    if len(self.buffer) >= 10:
                        (length,) = struct.unpack_from(">Q", self.buffer, 2)
                        offset = 10
                    else:
                        length = None
                if length is not None and len(self.buffer) >= offset + length:
                    opcode = self.buffer[0] & 0x0F
                    payload = self.buffer[offset : offset + length]
                    self.buffer = self.buffer[offset + length :]
                    return opcode, payload
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("socket closed")
            self.buffer += chunk

    def read(self) -> dict:
        opcode, payload = self.read_frame()
        assert opcode == 0x1
        return json.loads(payload)

    def close(self) -> None:
        self.sock.close()


def test_websocket_carries_the_same_protocol(server):
    reference = Session.create(server_config())
    requests = [
        {"type": "execute_cell", "seq": 1,
         "payload": {"source": 'movies = load_csv("movies.csv")'}},
        {"type": "completion_request", "seq": 2,
         "payload": {"code": 'x = movies.sort_values(by="'}},
    ]
    expected = [frame for req in requests for frame in reference.handle(req)]

    ws = WsClient(server.http_address)
    greeting = ws.read()
    assert greeting["type"] == "state_snapshot"
    got = []
    for req in requests:
        ws.send(req)
    while len(got) < len(expected):
        got.append(ws.read())
    assert json.dumps(got, sort_keys=True) == json.dumps(expected, sort_keys=True)
    ws.close()


def test_websocket_answers_ping_and_close(server):
    ws = WsClient(server.http_address)
    ws.read()  # greeting
    ws.send_control(0x9, b"marco")
    opcode, payload = ws.read_frame()
    assert (opcode, payload) == (0xA, b"marco")
    ws.send_control(0x8)
    opcode, _ = ws.read_frame()
    assert opcode == 0x8
    ws.close()


def test_plain_get_on_ws_path_is_rejected(server):
    status, _, _ = http_get(server.http_address, "/ws")
    assert status == 400
