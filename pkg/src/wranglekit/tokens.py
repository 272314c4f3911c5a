"""Tokenizer for the wrangling dialect.

Built for editor text rather than finished programs: an unterminated string
at the cursor becomes a STRING token flagged ``terminated=False`` instead of
an error, so callers can treat the fragment after the quote as a value
prefix. Offsets index into the original text, making the pass lossless.
"""

from __future__ import annotations

from dataclasses import dataclass

from .table import TableError

NAME = "NAME"
NUMBER = "NUMBER"
STRING = "STRING"
OP = "OP"

_TWO_CHAR_OPS = ("==", "!=", "<=", ">=")
_ONE_CHAR_OPS = "()[]{},:.=<>&|~+-*/"

KEYWORD_LITERALS = {"True": True, "False": False}


class TokenizeError(TableError):
    tag = "parse"


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    start: int
    end: int
    value: object = None  # decoded payload for STRING tokens
    terminated: bool = True

    def is_op(self, *texts: str) -> bool:
        return self.type == OP and self.text in texts


def _scan_string(text: str, i: int) -> Token:
    quote = text[i]
    j = i + 1
    out: list[str] = []
    while j < len(text):
        ch = text[j]
        if ch == "\\" and j + 1 < len(text):
            nxt = text[j + 1]
            escapes = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}
            out.append(escapes.get(nxt, "\\" + nxt))
            j += 2
            continue
        if ch == quote:
            return Token(STRING, text[i : j + 1], i, j + 1, "".join(out), True)
        if ch == "\n":
            break
        out.append(ch)
        j += 1
    return Token(STRING, text[i:j], i, j, "".join(out), False)


def _scan_number(text: str, i: int) -> Token:
    j = i
    seen_dot = False
    while j < len(text) and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
        if text[j] == ".":
            # a bare trailing dot is attribute access, not a float
            if j + 1 >= len(text) or not text[j + 1].isdigit():
                break
            seen_dot = True
        j += 1
    if j < len(text) and text[j] in "eE":
        k = j + 1
        if k < len(text) and text[k] in "+-":
            k += 1
        if k < len(text) and text[k].isdigit():
            j = k
            while j < len(text) and text[j].isdigit():
                j += 1
    return Token(NUMBER, text[i:j], i, j)


def tokenize(text: str) -> list[Token]:
    """Tokenize dialect source, tolerating an unterminated final string."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "\"'":
            tok = _scan_string(text, i)
            tokens.append(tok)
            i = tok.end
            continue
        if ch.isdigit() or (
            ch == "." and i + 1 < n and text[i + 1].isdigit()
        ):
            tok = _scan_number(text, i)
            tokens.append(tok)
            i = tok.end
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token(NAME, text[i:j], i, j))
            i = j
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token(OP, two, i, i + 2))
            i += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token(OP, ch, i, i + 1))
            i += 1
            continue
        raise TokenizeError(f"unexpected character {ch!r} at offset {i}")
    return tokens


def has_unterminated_string(tokens: list[Token]) -> bool:
    return bool(tokens) and tokens[-1].type == STRING and not tokens[-1].terminated


def number_value(tok: Token):
    if "." in tok.text or "e" in tok.text or "E" in tok.text:
        return float(tok.text)
    return int(tok.text)
