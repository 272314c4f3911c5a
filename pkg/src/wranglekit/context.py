"""Code-context detection for partial statements at a cursor.

Works on the text up to the cursor only. Two detection modes:

- in_signature: the cursor sits inside a call whose signature is known
  (rules/signatures.json); the active parameter says what kind of token
  fits (table, column of some table, value of some column, enum).
- pattern: the cursor sits inside a bracket shape that identifies an
  operator without a call — subscripts for filters and column projection,
  assignment targets, groupby chains (rules/patterns.json).

Matching is innermost-first: the bracket nearest the cursor wins, so a
filter being typed inside a merge argument is reported as the filter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

from . import tokens as tk
from .ops import COLUMN_SLOT_TABLES, OP_SPECS, TransformOp  # noqa: F401 - re-export
from .statements import OpStatement, parse_statement, split_statements
from .table import TableError

_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
_BOOL_OPS = ("&", "|")

# For each kind, which slots hold column names and which table slot they
# refer to. Used by profiling and preview to find the columns an op touches.
@lru_cache(maxsize=None)
def load_rule_file(name: str) -> dict:
    path = resources.files("wranglekit").joinpath("rules").joinpath(name)
    return json.loads(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ActiveSlot:
    """What the cursor position accepts, for candidate generation."""

    name: str  # slot or parameter name ("right_on", "columns", "predicate", ...)
    kind: str  # "table" | "column" | "value" | "enum" | "free" | "none"
    table: Optional[str] = None  # table whose columns/values feed candidates
    column: Optional[str] = None  # column whose values feed candidates
    prefix: str = ""
    quoted: bool = False  # True when typing inside an open string literal
    values: tuple = ()  # fixed candidates for enum slots
    taken: tuple = ()  # sibling items already present (list/dict contexts)


@dataclass
class CodeContext:
    mode: str  # "empty" | "in_signature" | "pattern" | "statement_complete" | "unknown"
    statement: str
    binding: Optional[str] = None
    assign_target: Optional[str] = None
    op: Optional[TransformOp] = None
    active_slot: Optional[ActiveSlot] = None
    tables: list = field(default_factory=list)
    shape: Optional[str] = None  # pattern-mode shape name

    @property
    def op_kind(self) -> Optional[str]:
        return self.op.kind if self.op is not None else None

    @property
    def op_class(self) -> str:
        return operator_class(self.op)

    def to_payload(self) -> dict:
        slot = None
        if self.active_slot is not None:
            slot = {
                "name": self.active_slot.name,
                "kind": self.active_slot.kind,
                "table": self.active_slot.table,
                "column": self.active_slot.column,
                "prefix": self.active_slot.prefix,
                "quoted": self.active_slot.quoted,
            }
        return {
            "mode": self.mode,
            "op_kind": self.op_kind,
            "op_class": self.op_class,
            "statement": self.statement,
            "binding": self.binding,
            "tables": list(self.tables),
            "active_slot": slot,
            "shape": self.shape,
        }


def operator_class(op: Optional[TransformOp]) -> str:
    """Resolve the operator class (dataframe/series/others) from rules."""
    kind = op.kind if op is not None else None
    for rule in load_rule_file("operator_classes.json")["rules"]:
        if rule["kind"] != kind:
            continue
        cond = rule.get("when_filled")
        if cond is not None:
            if op is None or not op.filled(cond) or op.get(cond) is None:
                continue
        return rule["class"]
    return "others"


def context_levels(op_class: str) -> dict:
    classes = load_rule_file("context_rules.json")["classes"]
    return classes.get(op_class, classes["others"])


def _shape_rule(shape: str) -> dict:
    for rule in load_rule_file("patterns.json")["shapes"]:
        if rule["shape"] == shape:
            return rule
    return {"shape": shape, "kind": None, "slot": None, "accepts": "none"}


# --- frame scanning ------------------------------------------------------------


@dataclass
class _Frame:
    opener: tk.Token
    kind: str  # "call" | "subscript" | "list" | "dict" | "group" | "root"
    head: list  # receiver/callee tokens (call and subscript only)
    content: list = field(default_factory=list)


def _postfix_tail_start(content: list) -> int:
    """Index where the trailing postfix expression (receiver chain) begins."""
    i = len(content) - 1
    while i >= 0:
        t = content[i]
        if t.is_op(")", "]"):
            depth = 0
            j = i
            while j >= 0:
                if content[j].is_op(")", "]", "}"):
                    depth += 1
                elif content[j].is_op("(", "[", "{"):
                    depth -= 1
                if depth == 0:
                    break
                j -= 1
            if depth != 0:
                break
            i = j - 1
            continue
        if t.type == tk.NAME:
            i -= 1
            if i >= 0 and content[i].is_op("."):
                i -= 1
                continue
            break
        break
    return i + 1


def _scan_frames(toks: list) -> tuple[list, list]:
    """Build the open-bracket stack at the cursor.

    Returns (root content, open frames outer-to-inner). Closed brackets are
    folded back into their parent's content so each frame's content is a
    flat, balanced token list.
    """
    root = _Frame(opener=None, kind="root", head=[])
    stack = [root]
    for t in toks:
        if t.is_op("(", "[", "{"):
            parent = stack[-1]
            if t.text == "{":
                kind, head = "dict", []
            else:
                start = _postfix_tail_start(parent.content)
                head = parent.content[start:]
                if t.text == "(":
                    kind = "call" if head else "group"
                else:
                    kind = "subscript" if head else "list"
            stack.append(_Frame(t, kind, list(head)))
        elif t.is_op(")", "]", "}"):
            if len(stack) == 1:
                continue  # stray closer in editor text; tolerate
            f = stack.pop()
            stack[-1].content.extend([f.opener, *f.content, t])
        else:
            stack[-1].content.append(t)
    return root.content, stack[1:]


def _split_commas(content: list) -> list[list]:
    segments: list[list] = [[]]
    depth = 0
    for t in content:
        if t.is_op("(", "[", "{"):
            depth += 1
        elif t.is_op(")", "]", "}"):
            depth -= 1
        if depth == 0 and t.is_op(","):
            segments.append([])
        else:
            segments[-1].append(t)
    return segments


def _const_of(seg: list):
    """Literal/name value of a completed argument, or None when complex."""
    if len(seg) == 1:
        t = seg[0]
        if t.type == tk.STRING and t.terminated:
            return t.value
        if t.type == tk.NUMBER:
            return tk.number_value(t)
        if t.type == tk.NAME and t.text in tk.KEYWORD_LITERALS:
            return tk.KEYWORD_LITERALS[t.text]
        if t.type == tk.NAME:
            return _NameValue(t.text)
    if seg and seg[0].is_op("["):
        items = _split_commas(seg[1:-1] if seg[-1].is_op("]") else seg[1:])
        out = []
        for item in items:
            if not item:
                continue
            v = _const_of(item)
            if v is None:
                return None
            out.append(v)
        return out
    return None


class _NameValue(str):
    """A bare identifier argument (table name), distinct from a string."""


def _string_items(content: list) -> tuple:
    """Terminated top-level string values inside a list/dict body."""
    return tuple(
        t.value
        for seg in _split_commas(content)
        for t in seg
        if t.type == tk.STRING and t.terminated
    )


# --- receiver classification -----------------------------------------------------


@dataclass
class _Receiver:
    shape: str  # table/module/function/column/column_str/groupby/groupby_column/other
    table: Optional[str] = None
    column: Optional[str] = None
    by: object = None  # groupby key once parsed


def _strip_balanced_tail(toks: list) -> Optional[tuple[list, list]]:
    """Split off a trailing balanced bracket group: (before, inside)."""
    if not toks or not toks[-1].is_op(")", "]", "}"):
        return None
    depth = 0
    j = len(toks) - 1
    while j >= 0:
        if toks[j].is_op(")", "]", "}"):
            depth += 1
        elif toks[j].is_op("(", "[", "{"):
            depth -= 1
        if depth == 0:
            break
        j -= 1
    if depth != 0:
        return None
    return toks[:j], toks[j + 1 : -1]


def _match_colref(toks: list) -> Optional[tuple[str, str]]:
    if (
        len(toks) == 4
        and toks[0].type == tk.NAME
        and toks[1].is_op("[")
        and toks[2].type == tk.STRING
        and toks[2].terminated
        and toks[3].is_op("]")
    ):
        return toks[0].text, toks[2].value
    return None


def _strip_chained_calls(toks: list) -> list:
    """Drop trailing .method(...) segments: df["A"].fillna("u") -> df["A"]."""
    out = list(toks)
    while True:
        split = _strip_balanced_tail(out)
        if split is None or not out[-1].is_op(")"):
            return out
        before, _ = split
        if (
            len(before) >= 2
            and before[-1].type == tk.NAME
            and before[-2].is_op(".")
        ):
            out = before[:-2]
        else:
            return out


def _classify_receiver(head: list) -> tuple[Optional[str], _Receiver]:
    """Split a call head into (method name, receiver shape)."""
    if not head:
        return None, _Receiver("other")
    if len(head) == 1 and head[0].type == tk.NAME:
        return head[0].text, _Receiver("function")
    if not (head[-1].type == tk.NAME and len(head) >= 3 and head[-2].is_op(".")):
        return None, _Receiver("other")
    method = head[-1].text
    recv = head[:-2]
    if len(recv) == 1 and recv[0].type == tk.NAME:
        if recv[0].text == "pd":
            return method, _Receiver("module")
        return method, _Receiver("table", table=recv[0].text)
    # .str receivers: <colref-chain>.str.method
    if recv[-1].type == tk.NAME and recv[-1].text == "str" and len(recv) >= 3 and recv[-2].is_op("."):
        base = _strip_chained_calls(recv[:-2])
        colref = _match_colref(base)
        if colref is not None:
            return method, _Receiver("column_str", table=colref[0], column=colref[1])
        return method, _Receiver("other")
    # plain column receiver, possibly with chained calls before the method
    base = _strip_chained_calls(recv)
    colref = _match_colref(base)
    if colref is not None:
        return method, _Receiver("column", table=colref[0], column=colref[1])
    grouped = _match_groupby_chain(recv)
    if grouped is not None:
        return method, grouped
    return method, _Receiver("other")


def _match_groupby_chain(toks: list) -> Optional[_Receiver]:
    """Match t.groupby(key) and t.groupby(key)["col"] receiver chains."""
    column = None
    rest = toks
    if rest and rest[-1].is_op("]"):
        split = _strip_balanced_tail(rest)
        if split is None:
            return None
        before, inside = split
        if len(inside) == 1 and inside[0].type == tk.STRING and inside[0].terminated:
            column = inside[0].value
            rest = before
        else:
            return None
    if not (rest and rest[-1].is_op(")")):
        return None
    split = _strip_balanced_tail(rest)
    if split is None:
        return None
    before, inside = split
    if not (
        len(before) == 3
        and before[0].type == tk.NAME
        and before[1].is_op(".")
        and before[2].type == tk.NAME
        and before[2].text == "groupby"
    ):
        return None
    by = None
    segs = [s for s in _split_commas(inside) if s]
    if segs:
        seg = segs[0]
        if len(seg) >= 2 and seg[0].type == tk.NAME and seg[0].text == "by" and seg[1].is_op("="):
            seg = seg[2:]
        value = _const_of(seg)
        if isinstance(value, (str, list)) and not isinstance(value, _NameValue):
            by = value
    shape = "groupby_column" if column is not None else "groupby"
    return _Receiver(shape, table=before[0].text, column=column, by=by)


# --- active segment state -----------------------------------------------------------


@dataclass
class _Tail:
    state: str  # "fresh" | "string" | "name" | "number" | "filled"
    prefix: str = ""
    quoted: bool = False


def _tail_of(seg: list, adjacent: bool) -> _Tail:
    if not seg:
        return _Tail("fresh")
    last = seg[-1]
    if last.type == tk.STRING and not last.terminated:
        return _Tail("string", prefix=last.value, quoted=True)
    if last.type == tk.NAME and adjacent and len(seg) == 1:
        return _Tail("name", prefix=last.text)
    if last.type == tk.NUMBER and adjacent:
        return _Tail("number", prefix=last.text)
    return _Tail("filled")


# --- signature matching ---------------------------------------------------------------


def _find_signature(method: str, shape: str) -> Optional[dict]:
    for sig in load_rule_file("signatures.json")["signatures"]:
        if sig["method"] == method and sig["receiver"] == shape:
            return sig
    return None


def _fill_slot(args: dict, kind: Optional[str], slot: str, value) -> None:
    if value is None or kind is None:
        return
    if isinstance(value, _NameValue):
        value = str(value)
    if slot == "on_both":
        _fill_slot(args, kind, "left_on", value)
        _fill_slot(args, kind, "right_on", value)
        return
    if slot in OP_SPECS[kind].slots:
        args[slot] = value


def _collect_call_args(sig: dict, kind: Optional[str], segments: list[list], args: dict) -> int:
    """Fill op args from completed segments; returns positional count used."""
    positional_used = 0
    for seg in segments:
        if len(seg) >= 2 and seg[0].type == tk.NAME and seg[1].is_op("="):
            name = seg[0].text
            param = sig.get("keywords", {}).get(name)
            if param is not None:
                value = _convert_param(param, seg[2:])
                _fill_slot(args, kind, param["slot"], value)
            continue
        params = sig.get("positional", [])
        if positional_used < len(params):
            param = params[positional_used]
            value = _convert_param(param, seg)
            _fill_slot(args, kind, param["slot"], value)
        positional_used += 1
    return positional_used


def _convert_param(param: dict, seg: list):
    value = _const_of(seg)
    if value is None:
        return None
    ptype = param["type"]
    if ptype == "table":
        return str(value) if isinstance(value, _NameValue) else None
    if ptype == "table_list":
        if isinstance(value, list) and all(isinstance(v, _NameValue) for v in value):
            return [str(v) for v in value]
        return None
    if ptype in ("column", "column_or_list", "value", "enum", "free"):
        if isinstance(value, _NameValue):
            return None
        return value
    if ptype == "value_list":
        return value if isinstance(value, list) else None
    if ptype == "agg_mapping":
        return _dict_pairs_of(seg)
    if ptype == "column_mapping":
        pairs = _dict_pairs_of(seg)
        return dict(pairs) if pairs is not None else None
    return None


def _dict_pairs_of(seg: list) -> Optional[list]:
    if not (seg and seg[0].is_op("{")):
        return None
    body = seg[1:-1] if seg[-1].is_op("}") else seg[1:]
    pairs = []
    for item in _split_commas(body):
        if not item:
            continue
        colon = next((i for i, t in enumerate(item) if t.is_op(":")), None)
        if colon is None:
            return None
        key = _const_of(item[:colon])
        value = _const_of(item[colon + 1 :])
        if not isinstance(key, str) or not isinstance(value, str):
            return None
        pairs.append((key, value))
    return pairs


def _mapping_position(content: list) -> tuple[str, tuple]:
    """Position inside an open dict: ("key"|"value", keys already present)."""
    segs = _split_commas(content)
    active = segs[-1]
    taken = _string_items(content)
    has_colon = any(t.is_op(":") for t in active)
    return ("value" if has_colon else "key"), taken


# --- the detector ----------------------------------------------------------------------


def detect(text: str, cursor: Optional[int] = None) -> CodeContext:
    """Classify the statement fragment that ends at the cursor."""
    if cursor is None:
        cursor = len(text)
    text = text[:cursor]
    if not text.strip() or text.rstrip(" \t").endswith("\n"):
        return CodeContext(mode="empty", statement="")
    segments = split_statements(text)
    if not segments:
        return CodeContext(mode="empty", statement="")
    offset, stmt = segments[-1]
    adjacent = offset + len(stmt) == len(text)
    try:
        toks = tk.tokenize(stmt)
    except tk.TokenizeError:
        return CodeContext(mode="unknown", statement=stmt)
    if not toks:
        return CodeContext(mode="empty", statement="")

    try:
        parsed = parse_statement(stmt)
    except TableError:
        parsed = None
    if parsed is not None:
        op = parsed.op if isinstance(parsed, OpStatement) else None
        return CodeContext(
            mode="statement_complete",
            statement=stmt,
            binding=parsed.binding,
            op=op,
            tables=_op_tables(op),
        )

    binding: Optional[str] = None
    assign_target: Optional[str] = None
    rhs = toks
    if toks[0].type == tk.NAME:
        if len(toks) >= 2 and toks[1].is_op("="):
            binding = toks[0].text
            rhs = toks[2:]
        elif (
            len(toks) >= 5
            and toks[1].is_op("[")
            and toks[2].type == tk.STRING
            and toks[2].terminated
            and toks[3].is_op("]")
            and toks[4].is_op("=")
        ):
            binding = toks[0].text
            assign_target = toks[2].value
            rhs = toks[5:]

    ctx = CodeContext(
        mode="pattern", statement=stmt, binding=binding, assign_target=assign_target
    )

    if not rhs:
        if assign_target is not None:
            ctx.op = TransformOp(
                "assign_column", {"table": binding, "target_column": assign_target}
            )
            ctx.shape = "assign_rhs"
            ctx.active_slot = ActiveSlot("expr", "none", table=binding)
            ctx.tables = [binding]
        else:
            ctx.shape = "binding_rhs"
            ctx.active_slot = ActiveSlot("rhs", "table")
        return ctx

    _, open_frames = _scan_frames(rhs)
    ctx.tables = _mentioned_tables(rhs, binding if assign_target else None)

    if not open_frames:
        _analyze_flat(ctx, rhs, adjacent)
        return ctx

    wrappers = []
    op_frame = None
    for f in reversed(open_frames):
        if f.kind in ("call", "subscript"):
            op_frame = f
            break
        wrappers.append(f)  # innermost first
    if op_frame is None:
        ctx.active_slot = ActiveSlot("unknown", "none")
        return ctx

    if op_frame.kind == "call":
        _analyze_call(ctx, op_frame, wrappers, adjacent)
    else:
        _analyze_subscript(ctx, op_frame, wrappers, adjacent)
    _merge_tables(ctx)
    return ctx


def _op_tables(op: Optional[TransformOp]) -> list:
    if op is None:
        return []
    out = []
    for slot in ("left", "right", "table"):
        if slot in op.args and op.filled(slot):
            out.append(op.get(slot))
    if "tables" in op.args and op.filled("tables"):
        out.extend(op.get("tables"))
    seen = set()
    return [t for t in out if not (t in seen or seen.add(t))]


def _mentioned_tables(rhs: list, extra: Optional[str]) -> list:
    out = [extra] if extra else []
    for i, t in enumerate(rhs):
        if t.type != tk.NAME or t.text == "pd":
            continue
        nxt = rhs[i + 1] if i + 1 < len(rhs) else None
        if nxt is not None and (nxt.is_op(".") or nxt.is_op("[")):
            out.append(t.text)
    seen = set()
    return [t for t in out if not (t in seen or seen.add(t))]


def _merge_tables(ctx: CodeContext) -> None:
    out = _op_tables(ctx.op) + ctx.tables
    seen = set()
    ctx.tables = [t for t in out if not (t in seen or seen.add(t))]


def _analyze_flat(ctx: CodeContext, rhs: list, adjacent: bool) -> None:
    """No open bracket: trailing-token analysis only."""
    tail = _tail_of(rhs, adjacent)
    if ctx.assign_target is not None:
        ctx.op = TransformOp(
            "assign_column", {"table": ctx.binding, "target_column": ctx.assign_target}
        )
        ctx.shape = "assign_rhs"
        ctx.active_slot = ActiveSlot("expr", "none", table=ctx.binding)
        return
    if tail.state == "name" and len(rhs) == 1:
        ctx.shape = "binding_rhs"
        ctx.active_slot = ActiveSlot("rhs", "table", prefix=tail.prefix)
        return
    ctx.active_slot = ActiveSlot("rhs", "none")


def _effective_wrappers(wrappers: list) -> list:
    return [w for w in wrappers if w.kind != "group"]


def _analyze_call(ctx: CodeContext, frame: _Frame, wrappers: list, adjacent: bool) -> None:
    method, recv = _classify_receiver(frame.head)
    sig = _find_signature(method, recv.shape) if method else None
    if sig is None:
        ctx.shape = "call_unknown"
        segs = _split_commas(frame.content)
        tail = _tail_of(segs[-1], adjacent and not wrappers)
        if tail.state in ("fresh", "name") and not _effective_wrappers(wrappers):
            ctx.active_slot = ActiveSlot("arg", "table", prefix=tail.prefix)
        else:
            ctx.active_slot = ActiveSlot("arg", "none")
        return

    ctx.mode = "in_signature"
    kind = sig["op"]
    args: dict = {}
    if kind is not None:
        if sig.get("receiver_slot") and recv.table is not None:
            args[sig["receiver_slot"]] = recv.table
        if sig.get("receiver_column_slot") and recv.column is not None:
            args[sig["receiver_column_slot"]] = recv.column
        if kind == "groupby_agg" and recv.shape in ("groupby", "groupby_column"):
            args["table"] = recv.table
            if recv.by is not None:
                args["by"] = recv.by
            if recv.shape == "groupby_column" and method != "agg":
                args["agg"] = [(recv.column, method)]

    segs = _split_commas(frame.content)
    completed, active = segs[:-1], segs[-1]
    positional_used = 0
    if kind is not None:
        positional_used = _collect_call_args(sig, kind, completed, args)
        ctx.op = TransformOp(kind, args)
    else:
        positional_used = len([s for s in completed if not _is_kwarg(s)])

    param = None
    param_name = None
    if _is_kwarg(active):
        param_name = active[0].text
        param = sig.get("keywords", {}).get(param_name)
        active_value = active[2:]
    else:
        params = sig.get("positional", [])
        if positional_used < len(params):
            param = params[positional_used]
            param_name = param["slot"]
        active_value = active

    ctx.active_slot = _slot_for_param(
        ctx, sig, recv, param, param_name, active_value, wrappers, adjacent
    )


def _is_kwarg(seg: list) -> bool:
    return len(seg) >= 2 and seg[0].type == tk.NAME and seg[1].is_op("=")


def _slot_for_param(
    ctx: CodeContext,
    sig: dict,
    recv: _Receiver,
    param: Optional[dict],
    param_name: Optional[str],
    value_tokens: list,
    wrappers: list,
    adjacent: bool,
) -> ActiveSlot:
    wrappers = _effective_wrappers(wrappers)
    if param is None:
        return ActiveSlot(param_name or "arg", "none")
    name = param["slot"]
    ptype = param["type"]
    of_table = None
    if "of" in param and ctx.op is not None and ctx.op.filled(param["of"]):
        of_table = ctx.op.get(param["of"])
    elif "of" in param and param["of"] in ("table", "left") and recv.table:
        of_table = recv.table

    inner = wrappers[0] if wrappers else None

    def active_of(content: list) -> list:
        return _split_commas(content)[-1]

    if ptype == "table":
        if wrappers:
            return ActiveSlot(name, "none")
        tail = _tail_of(value_tokens, adjacent)
        if tail.state in ("fresh", "name"):
            return ActiveSlot(name, "table", prefix=tail.prefix)
        return ActiveSlot(name, "none")
    if ptype == "table_list":
        if len(wrappers) == 1 and inner.kind == "list":
            tail = _tail_of(active_of(inner.content), adjacent)
            if tail.state in ("fresh", "name"):
                return ActiveSlot(
                    name,
                    "table",
                    prefix=tail.prefix,
                    taken=_name_items(inner.content),
                )
        return ActiveSlot(name, "none")
    if ptype in ("column", "column_or_list"):
        taken = ()
        source = value_tokens
        if wrappers:
            if not (ptype == "column_or_list" and len(wrappers) == 1 and inner.kind == "list"):
                return ActiveSlot(name, "none")
            source = active_of(inner.content)
            taken = _string_items(inner.content)
        tail = _tail_of(source, adjacent)
        if tail.state in ("fresh", "string"):
            return ActiveSlot(
                name, "column", table=of_table, prefix=tail.prefix,
                quoted=tail.quoted, taken=taken,
            )
        return ActiveSlot(name, "none")
    if ptype in ("value", "value_list"):
        column = recv.column if param.get("of_column") == "column" else None
        taken = ()
        source = value_tokens
        if ptype == "value_list":
            if not (len(wrappers) == 1 and inner.kind == "list"):
                return ActiveSlot(name, "none")
            source = active_of(inner.content)
            taken = _string_items(inner.content)
        elif wrappers:
            return ActiveSlot(name, "none")
        tail = _tail_of(source, adjacent)
        if tail.state in ("fresh", "string", "number"):
            return ActiveSlot(
                name, "value", table=recv.table, column=column,
                prefix=tail.prefix, quoted=tail.quoted, taken=taken,
            )
        return ActiveSlot(name, "none")
    if ptype == "enum":
        if wrappers:
            return ActiveSlot(name, "none")
        tail = _tail_of(value_tokens, adjacent)
        quoted_enum = bool(param.get("quoted", True))
        if tail.state == "fresh" or (tail.state == "string" and quoted_enum) or (
            tail.state == "name" and not quoted_enum
        ):
            return ActiveSlot(
                name, "enum", prefix=tail.prefix, quoted=tail.quoted,
                values=tuple(param.get("values", ())),
            )
        return ActiveSlot(name, "none")
    if ptype in ("agg_mapping", "column_mapping"):
        if len(wrappers) == 1 and inner.kind == "dict":
            position, taken = _mapping_position(inner.content)
            segs = _split_commas(inner.content)
            active = segs[-1]
            if position == "key":
                tail = _tail_of(active, adjacent)
                if tail.state in ("fresh", "string"):
                    return ActiveSlot(
                        name, "column", table=of_table or recv.table,
                        prefix=tail.prefix, quoted=tail.quoted, taken=taken,
                    )
                return ActiveSlot(name, "none")
            colon = max(i for i, t in enumerate(active) if t.is_op(":"))
            tail = _tail_of(active[colon + 1 :], adjacent)
            if ptype == "agg_mapping" and tail.state in ("fresh", "string"):
                from .ops import AGG_FUNCTIONS

                return ActiveSlot(
                    name, "enum", prefix=tail.prefix, quoted=tail.quoted,
                    values=tuple(AGG_FUNCTIONS),
                )
            return ActiveSlot(name, "free" if ptype == "column_mapping" else "none")
        return ActiveSlot(name, "none")
    return ActiveSlot(name, "free" if ptype == "free" else "none")


def _name_items(content: list) -> tuple:
    return tuple(
        seg[0].text
        for seg in _split_commas(content)
        if len(seg) == 1 and seg[0].type == tk.NAME
    )


def _analyze_subscript(
    ctx: CodeContext, frame: _Frame, wrappers: list, adjacent: bool
) -> None:
    head = frame.head
    recv_table = head[0].text if len(head) == 1 and head[0].type == tk.NAME else None
    grouped = _match_groupby_chain(head) if recv_table is None else None

    if grouped is not None and grouped.shape == "groupby":
        rule = _shape_rule("groupby_subscript")
        args = {"table": grouped.table}
        if grouped.by is not None:
            args["by"] = grouped.by
        ctx.op = TransformOp(rule["kind"], args)
        ctx.shape = rule["shape"]
        tail = _tail_of(frame.content, adjacent)
        if not wrappers and tail.state in ("fresh", "string"):
            ctx.active_slot = ActiveSlot(
                "agg", "column", table=grouped.table, prefix=tail.prefix, quoted=tail.quoted
            )
        else:
            ctx.active_slot = ActiveSlot("agg", "none")
        return

    if recv_table is None:
        ctx.shape = "subscript_unknown"
        ctx.active_slot = ActiveSlot("subscript", "none")
        return

    # assignment right-hand side: a subscript is a column reference
    if ctx.assign_target is not None:
        ctx.op = TransformOp(
            "assign_column", {"table": ctx.binding, "target_column": ctx.assign_target}
        )
        rule = _shape_rule("assign_colref")
        ctx.shape = rule["shape"]
        tail = _tail_of(frame.content, adjacent)
        if not wrappers and tail.state in ("fresh", "string") and recv_table:
            ctx.active_slot = ActiveSlot(
                "expr", "column", table=recv_table, prefix=tail.prefix, quoted=tail.quoted
            )
        else:
            ctx.active_slot = ActiveSlot("expr", "none")
        return

    effective_wrappers = _effective_wrappers(wrappers)
    # df[[ ... : column projection
    if (
        effective_wrappers
        and effective_wrappers[0].kind == "list"
        and not frame.content
    ):
        rule = _shape_rule("subscript_list")
        ctx.op = TransformOp(rule["kind"], {"table": recv_table})
        ctx.shape = rule["shape"]
        inner = effective_wrappers[0]
        tail = _tail_of(_split_commas(inner.content)[-1], adjacent)
        if tail.state in ("fresh", "string"):
            ctx.active_slot = ActiveSlot(
                rule["slot"], "column", table=recv_table,
                prefix=tail.prefix, quoted=tail.quoted,
                taken=_string_items(inner.content),
            )
        else:
            ctx.active_slot = ActiveSlot(rule["slot"], "none")
        return

    # otherwise we are building a row predicate; groups are transparent
    content = frame.content
    for w in wrappers:
        if w.kind == "group":
            content = w.content
        else:
            ctx.op = TransformOp("filter", {"table": recv_table})
            ctx.shape = "subscript_colref"
            ctx.active_slot = ActiveSlot("predicate", "none", table=recv_table)
            return

    ctx.op = TransformOp("filter", {"table": recv_table})
    eff = _after_last_bool_op(content)
    shape, slot = _predicate_position(eff, recv_table, adjacent)
    ctx.shape = shape
    ctx.active_slot = slot


def _after_last_bool_op(content: list) -> list:
    depth = 0
    cut = 0
    for i, t in enumerate(content):
        if t.is_op("(", "[", "{"):
            depth += 1
        elif t.is_op(")", "]", "}"):
            depth -= 1
        elif depth == 0 and (t.is_op(*_BOOL_OPS) or t.is_op("~")):
            cut = i + 1
    return content[cut:]


def _predicate_position(eff: list, table: str, adjacent: bool) -> tuple[str, ActiveSlot]:
    if not eff:
        rule = _shape_rule("subscript_empty")
        return rule["shape"], ActiveSlot(rule["slot"], rule["accepts"], table=table)
    last = eff[-1]
    # a comparison operator splits lhs/rhs
    cmp_index = None
    depth = 0
    for i, t in enumerate(eff):
        if t.is_op("(", "[", "{"):
            depth += 1
        elif t.is_op(")", "]", "}"):
            depth -= 1
        elif depth == 0 and t.is_op(*_CMP_OPS):
            cmp_index = i
    if cmp_index is not None:
        lhs = eff[:cmp_index]
        rhs = eff[cmp_index + 1 :]
        colref = _match_colref(lhs)
        column = colref[1] if colref is not None and colref[0] == table else None
        tail = _tail_of(rhs, adjacent)
        rule = _shape_rule("compare_rhs")
        if tail.state in ("fresh", "string", "number"):
            return rule["shape"], ActiveSlot(
                rule["slot"], "value", table=table, column=column,
                prefix=tail.prefix, quoted=tail.quoted,
            )
        return rule["shape"], ActiveSlot(rule["slot"], "none", table=table, column=column)
    if len(eff) == 1 and last.type == tk.STRING:
        if not last.terminated:
            rule = _shape_rule("subscript_string")
            return rule["shape"], ActiveSlot(
                rule["slot"], rule["accepts"], table=table,
                prefix=last.value, quoted=True,
            )
        return "subscript_colref", ActiveSlot("predicate", "none", table=table)
    if len(eff) == 1 and last.type == tk.NAME and adjacent:
        rule = _shape_rule("subscript_name")
        return rule["shape"], ActiveSlot(
            rule["slot"], rule["accepts"], table=table, prefix=last.text
        )
    return "subscript_colref", ActiveSlot("predicate", "none", table=table)
