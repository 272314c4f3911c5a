"""Session state and the JSON message protocol.

A :class:`Session` owns the executed cell history, the live
:class:`~wranglekit.table.Environment`, and the matching
:class:`~wranglekit.profiling.ProfileStore`.  Clients talk to it through
small JSON frames (``{"type", "seq", "payload"}``); every response frame
echoes the request's ``seq`` so transcripts line up, and responses to a
completion request that has already been overtaken by a newer one are
marked ``superseded``.

Only two message types mutate state: ``execute_cell`` (runs a whole cell
transactionally and bumps the environment version exactly once) and
``accept_item`` (inserts the focused candidate's text into the draft cell).
Everything else is a pure read.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .completion import (
    CompletionItem,
    CompletionResult,
    HttpModelClient,
    MockModelClient,
    ModelClient,
    generate_completions,
)
from .context import CodeContext, detect
from .preview import (
    PREVIEW_SAMPLE_ROWS,
    VIEWPORT_COLUMNS,
    compute_highlight,
    compute_preview,
    preview_ready,
)
from .profiling import ProfileStore, refresh, select_contexts
from .statements import ParseError, parse_statement, split_statements, execute_statement
from .table import Environment, TableError
from .tokens import TokenizeError

CLIENT_MESSAGE_TYPES = (
    "execute_cell",
    "completion_request",
    "focus_changed",
    "accept_item",
)
SERVER_MESSAGE_TYPES = (
    "state_snapshot",
    "completion_response",
    "highlight_update",
    "preview_update",
    "error",
)

ENDPOINT_ENV_VAR = "WRANGLEKIT_MODEL_ENDPOINT"
API_KEY_ENV_VAR = "WRANGLEKIT_MODEL_API_KEY"


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class SessionConfig:
    """Tunables for one session; JSON file and env vars feed into this."""

    session_id: str = "local"
    seed: int = 0
    value_cap: int = 50
    max_candidates: int = 2
    max_prompt_chars: int = 8000
    viewport_columns: int = VIEWPORT_COLUMNS
    preview_sample_rows: int = PREVIEW_SAMPLE_ROWS
    data_dir: str = "."
    model_endpoint: str = ""
    model_api_key: str = ""
    mock_responses: str = ""  # path to a mock fixture; takes precedence

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionConfig":
        unknown = set(raw) - {f.name for f in cls.__dataclass_fields__.values()}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "SessionConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def with_environ(self, environ=os.environ) -> "SessionConfig":
        """Fill the model endpoint/key from the process environment."""
        updates = {}
        if not self.model_endpoint and environ.get(ENDPOINT_ENV_VAR):
            updates["model_endpoint"] = environ[ENDPOINT_ENV_VAR]
        if not self.model_api_key and environ.get(API_KEY_ENV_VAR):
            updates["model_api_key"] = environ[API_KEY_ENV_VAR]
        return replace(self, **updates) if updates else self


def resolve_model_client(config: SessionConfig) -> Optional[ModelClient]:
    if config.mock_responses:
        return MockModelClient.from_file(config.mock_responses)
    if config.model_endpoint:
        return HttpModelClient(config.model_endpoint, config.model_api_key or None)
    return None


# ---------------------------------------------------------------------------
# Frames


def make_frame(type_: str, seq: int, payload: dict, *, superseded: bool = False) -> dict:
    return {"type": type_, "seq": seq, "superseded": superseded, "payload": payload}


def _error_frame(seq: int, message: str, tag: str, **extra) -> dict:
    payload = {"message": message, "tag": tag}
    payload.update(extra)
    return make_frame("error", seq, payload)


# ---------------------------------------------------------------------------
# Session


@dataclass
class Session:
    """One editing session: executed cells, live tables, their profiles."""

    config: SessionConfig = field(default_factory=SessionConfig)
    client: Optional[ModelClient] = None
    env: Environment = field(default_factory=Environment)
    profiles: ProfileStore = field(default_factory=ProfileStore.empty)
    cells: list[str] = field(default_factory=list)
    draft_code: str = ""
    draft_cursor: int = 0

    # completion-list bookkeeping
    _list_seq: int = -1
    _items: tuple[CompletionItem, ...] = ()
    _ctx: Optional[CodeContext] = None
    _focused: Optional[int] = None
    _newest_completion_seq: int = -1

    @classmethod
    def create(cls, config: Optional[SessionConfig] = None) -> "Session":
        config = config or SessionConfig()
        return cls(config=config, client=resolve_model_client(config))

    def snapshot_frame(self, seq: int = 0) -> dict:
        """A state_snapshot frame, e.g. greeting a freshly connected client."""
        return make_frame("state_snapshot", seq, self._snapshot_payload())

    # -- dispatch ----------------------------------------------------------

    def note_incoming(self, message: dict) -> None:
        """Record arrival before processing, so newer requests can
        supersede older ones that are still waiting in the same batch."""
        if (
            isinstance(message, dict)
            and message.get("type") == "completion_request"
            and isinstance(message.get("seq"), int)
        ):
            self._newest_completion_seq = max(
                self._newest_completion_seq, message["seq"]
            )

    def handle(self, message: dict) -> list[dict]:
        """Process one client frame; returns the response frames in order."""
        if not isinstance(message, dict):
            return [_error_frame(0, "frame must be a JSON object", "protocol")]
        seq = message.get("seq")
        if not isinstance(seq, int):
            return [_error_frame(0, "frame needs an integer seq", "protocol")]
        type_ = message.get("type")
        payload = message.get("payload")
        if payload is None:
            payload = {}
        if not isinstance(payload, dict):
            return [_error_frame(seq, "payload must be a JSON object", "protocol")]
        self.note_incoming(message)
        if type_ == "execute_cell":
            return self._handle_execute(seq, payload)
        if type_ == "completion_request":
            return self._handle_completion(seq, payload)
        if type_ == "focus_changed":
            return self._handle_focus(seq, payload)
        if type_ == "accept_item":
            return self._handle_accept(seq, payload)
        return [_error_frame(seq, f"unknown message type: {type_!r}", "protocol")]

    def handle_all(self, messages: list[dict]) -> list[dict]:
        """Process a batch that arrived together (e.g. rapid typing)."""
        for message in messages:
            self.note_incoming(message)
        frames: list[dict] = []
        for message in messages:
            frames.extend(self.handle(message))
        return frames

    # -- execute_cell --------------------------------------------------------

    def _handle_execute(self, seq: int, payload: dict) -> list[dict]:
        source = payload.get("source")
        if not isinstance(source, str):
            return [_error_frame(seq, "execute_cell needs a source string", "protocol")]

        segments = split_statements(source)
        if not segments:
            return [make_frame("state_snapshot", seq, self._snapshot_payload(
                report={"statements": 0, "bindings": []}))]

        statements = []
        for index, (_, text) in enumerate(segments):
            try:
                statements.append(parse_statement(text))
            except (ParseError, TokenizeError) as exc:
                return [_error_frame(
                    seq, str(exc), "grammar", statement_index=index
                )]

        # run against a scratch copy; the live environment only moves on success
        working = self.env.snapshot()
        scratch = Environment(bindings=working, version=self.env.version)
        touched: list[str] = []
        for index, stmt in enumerate(statements):
            try:
                produced = execute_statement(
                    stmt, scratch, data_dir=self.config.data_dir
                )
            except (TableError, OSError) as exc:
                return [_error_frame(seq, str(exc), "data", statement_index=index)]
            working.update(produced)
            for name in produced:
                if name not in touched:
                    touched.append(name)

        self.env.commit(working)
        self.profiles = refresh(self.env, self.profiles, seed=self.config.seed)
        self.cells.append(source)
        report = {"statements": len(statements), "bindings": touched}
        return [make_frame("state_snapshot", seq, self._snapshot_payload(report=report))]

    def _snapshot_payload(self, *, report: Optional[dict] = None) -> dict:
        # Full three-layer profiles, same entry shape the CLI `profile`
        # command prints: the data view is entirely payload-driven, so the
        # snapshot must carry schemas and sample rows, not just headers.
        tables = [
            self.profiles.entries[name].to_payload()
            for name in sorted(self.profiles.table_names())
        ]
        payload = {
            "session": self.config.session_id,
            "env_version": self.env.version,
            "profiles_version": self.profiles.version,
            "tables": tables,
            "cells": list(self.cells),
            "draft": {"code": self.draft_code, "cursor": self.draft_cursor},
        }
        if report is not None:
            payload["report"] = report
        return payload

    # -- completion_request ---------------------------------------------------

    def _handle_completion(self, seq: int, payload: dict) -> list[dict]:
        code = payload.get("code")
        if not isinstance(code, str):
            return [_error_frame(
                seq, "completion_request needs a code string", "protocol"
            )]
        cursor = payload.get("cursor", len(code))
        if not isinstance(cursor, int) or not 0 <= cursor <= len(code):
            return [_error_frame(seq, f"cursor out of range: {cursor!r}", "protocol")]

        self.draft_code, self.draft_cursor = code, cursor
        ctx = detect(code, cursor)
        bundle = select_contexts(ctx, self.profiles, self.env)
        preceding = "\n".join(self.cells + [code[:cursor]]) if self.cells else code[:cursor]
        result: CompletionResult = generate_completions(
            ctx,
            bundle,
            self.env,
            store=self.profiles,
            client=self.client,
            preceding_code=preceding,
            seed=self.config.seed,
            cap=self.config.value_cap,
            max_candidates=self.config.max_candidates,
            max_prompt_chars=self.config.max_prompt_chars,
        )
        superseded = seq < self._newest_completion_seq
        self._list_seq = seq
        self._items = result.items
        self._ctx = ctx
        self._focused = 0 if result.items else None

        response_payload = {
            "list_seq": seq,
            "items": [item.to_payload() for item in result.items],
            "diagnostics": list(result.diagnostics),
            "focused": self._focused,
        }
        frames = [make_frame(
            "completion_response", seq, response_payload, superseded=superseded
        )]
        frames.extend(self._view_frames(seq, superseded=superseded))
        return frames

    def _view_frames(self, seq: int, *, superseded: bool = False) -> list[dict]:
        """highlight_update (+ preview_update when ready) for the focus."""
        ctx = self._ctx
        if ctx is None:
            return []
        focused_item = (
            self._items[self._focused] if self._focused is not None else None
        )
        spec = compute_highlight(
            ctx, focused_item, self.env,
            viewport_columns=self.config.viewport_columns,
        )
        frames = [make_frame(
            "highlight_update",
            seq,
            {"focused": self._focused, "highlight": spec.to_payload()},
            superseded=superseded,
        )]
        if focused_item is not None and preview_ready(ctx, focused_item):
            preview = compute_preview(
                ctx, focused_item, self.env,
                sample_rows=self.config.preview_sample_rows,
            )
            frames.append(make_frame(
                "preview_update",
                seq,
                {"focused": self._focused, "preview": preview.to_payload()},
                superseded=superseded,
            ))
        return frames

    # -- focus_changed ----------------------------------------------------------

    def _check_list_reference(self, seq: int, payload: dict) -> Optional[dict]:
        """Error frame when the referenced completion list is not current."""
        list_seq = payload.get("list_seq", self._list_seq)
        if self._list_seq < 0 or not self._items:
            return _error_frame(seq, "no completion list to act on", "protocol")
        if list_seq != self._list_seq:
            return _error_frame(
                seq,
                f"completion list {list_seq} superseded by {self._list_seq}",
                "protocol",
            )
        index = payload.get("index")
        if not isinstance(index, int) or not 0 <= index < len(self._items):
            return _error_frame(seq, f"item index out of range: {index!r}", "protocol")
        return None

    def _handle_focus(self, seq: int, payload: dict) -> list[dict]:
        problem = self._check_list_reference(seq, payload)
        if problem is not None:
            return [problem]
        self._focused = payload["index"]
        return self._view_frames(seq)

    # -- accept_item --------------------------------------------------------------

    def _handle_accept(self, seq: int, payload: dict) -> list[dict]:
        problem = self._check_list_reference(seq, payload)
        if problem is not None:
            return [problem]
        item = self._items[payload["index"]]
        cursor = self.draft_cursor
        self.draft_code = (
            self.draft_code[:cursor] + item.text + self.draft_code[cursor:]
        )
        self.draft_cursor = cursor + len(item.text)
        # the inserted text invalidates the list the item came from
        self._list_seq = -1
        self._items = ()
        self._ctx = None
        self._focused = None
        return [make_frame("state_snapshot", seq, self._snapshot_payload(
            report={"accepted": item.label}))]
