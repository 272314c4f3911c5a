"""Command-line front door: serve the protocol or run one-shot queries.

``serve`` starts both sockets and blocks.  ``complete``, ``preview``, and
``profile`` are one-shot: they build a throwaway session from CSV files
plus an optional script, print a single JSON document, and exit.  Exit
codes: 0 success, 1 runtime failure (diagnostic JSON on stdout), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .context import detect
from .preview import compute_preview
from .profiling import profile_table, refresh
from .session import Session, SessionConfig
from .statements import split_statements
from .table import TableError, load_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wranglekit",
        description="Data-context-aware completion engine for table-wrangling scripts.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser, *, script: bool) -> None:
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--seed", type=int, help="sampling seed override")
        sub.add_argument("--data-dir", help="directory for load_csv() paths")
        sub.add_argument(
            "--mock-model",
            metavar="FIXTURE",
            help="JSON fixture of canned model responses instead of a live endpoint",
        )
        sub.add_argument(
            "--csv",
            action="append",
            default=[],
            metavar="NAME=PATH",
            help="preload a CSV as a table (NAME= optional; file stem otherwise)",
        )
        if script:
            sub.add_argument("--script", required=True, help="script file to analyze")
            cursor = sub.add_mutually_exclusive_group()
            cursor.add_argument("--cursor", type=int, help="byte offset of the cursor")
            cursor.add_argument(
                "--cursor-end",
                action="store_true",
                help="place the cursor at the end of the script (default)",
            )

    serve = commands.add_parser("serve", help="run the protocol servers")
    common(serve, script=False)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765, help="NDJSON TCP port")
    serve.add_argument("--http-port", type=int, default=8766, help="HTTP/WebSocket port")
    serve.add_argument("--frontend", help="static UI bundle directory")

    complete = commands.add_parser("complete", help="one-shot completion at a cursor")
    common(complete, script=True)

    preview = commands.add_parser("preview", help="one-shot preview of the statement at a cursor")
    common(preview, script=True)

    profile = commands.add_parser("profile", help="print profiles for CSV tables")
    common(profile, script=False)

    return parser


def _config_from_args(args: argparse.Namespace) -> SessionConfig:
    config = (
        SessionConfig.from_file(args.config) if args.config else SessionConfig()
    )
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.data_dir is not None:
        overrides["data_dir"] = args.data_dir
    if getattr(args, "mock_model", None):
        overrides["mock_responses"] = args.mock_model
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config.with_environ()


def _csv_specs(raw: list[str]) -> list[tuple[str, str]]:
    specs = []
    for entry in raw:
        if "=" in entry:
            name, path = entry.split("=", 1)
        else:
            name, path = Path(entry).stem, entry
        if not name.isidentifier():
            raise ValueError(f"table name {name!r} is not a valid identifier")
        specs.append((name, path))
    return specs


def _preload(session: Session, specs: list[tuple[str, str]]) -> None:
    if not specs:
        return
    bindings = session.env.snapshot()
    for name, path in specs:
        bindings[name] = load_csv(path, name)
    session.env.commit(bindings)
    session.profiles = refresh(session.env, session.profiles, seed=session.config.seed)


def _split_script(text: str, cursor: Optional[int]) -> tuple[str, str, int]:
    """(prefix cell, draft text, cursor within draft) at the given offset."""
    if cursor is None:
        cursor = len(text)
    if not 0 <= cursor <= len(text):
        raise ValueError(f"cursor {cursor} outside the script (length {len(text)})")
    segments = split_statements(text[:cursor])
    if not segments:
        return "", text, cursor
    offset, _ = segments[-1]
    return text[:offset], text[offset:], cursor - offset


def _print_json(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")


def _fail(message: str, tag: str = "data", **extra) -> int:
    doc = {"error": message, "tag": tag}
    doc.update(extra)
    _print_json(doc)
    return 1


def _session_at_cursor(args: argparse.Namespace) -> tuple[Session, str, int] | int:
    """Build a session, run the script up to the cursor's statement.

    Returns (session, draft, cursor) or an exit code on failure.
    """
    config = _config_from_args(args)
    session = Session.create(config)
    _preload(session, _csv_specs(args.csv))
    text = Path(args.script).read_text(encoding="utf-8")
    prefix, draft, cursor = _split_script(
        text, None if args.cursor_end else args.cursor
    )
    if prefix.strip():
        frames = session.handle(
            {"type": "execute_cell", "seq": 1, "payload": {"source": prefix}}
        )
        if frames[0]["type"] == "error":
            payload = frames[0]["payload"]
            return _fail(
                payload["message"],
                payload["tag"],
                statement_index=payload.get("statement_index"),
            )
    return session, draft, cursor


def _cmd_complete(args: argparse.Namespace) -> int:
    built = _session_at_cursor(args)
    if isinstance(built, int):
        return built
    session, draft, cursor = built
    frames = session.handle(
        {
            "type": "completion_request",
            "seq": 2,
            "payload": {"code": draft, "cursor": cursor},
        }
    )
    _print_json(frames[0]["payload"])
    return 0


def _cmd_preview(args: argparse.Namespace) -> int:
    built = _session_at_cursor(args)
    if isinstance(built, int):
        return built
    session, draft, cursor = built
    ctx = detect(draft, cursor)
    result = compute_preview(
        ctx, None, session.env, sample_rows=session.config.preview_sample_rows
    )
    _print_json(result.to_payload())
    return 0 if result.ok else 1


def _cmd_profile(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    specs = _csv_specs(args.csv)
    if not specs:
        return _fail("profile needs at least one --csv", "protocol")
    tables = [
        profile_table(load_csv(path, name), seed=config.seed).to_payload()
        for name, path in specs
    ]
    _print_json({"tables": tables})
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:  # pragma: no cover - blocking
    from .server import SessionServer

    config = _config_from_args(args)
    server = SessionServer(
        config,
        host=args.host,
        port=args.port,
        http_port=args.http_port,
        frontend_dir=args.frontend,
    )
    host, port = server.tcp_address
    _, http_port = server.http_address
    print(f"NDJSON protocol on {host}:{port}", file=sys.stderr)
    print(f"HTTP/WebSocket UI on http://{host}:{http_port}/", file=sys.stderr)
    server.serve_forever()
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "complete": _cmd_complete,
    "preview": _cmd_preview,
    "profile": _cmd_profile,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TableError, OSError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
