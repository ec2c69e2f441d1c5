"""Tokenizer for the guard DSL."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal

from .ast import Pos


class GuardSyntaxError(Exception):
    """Lex or parse failure, with position. Formats as file:line:col."""

    def __init__(self, message: str, pos: Pos, source_name: str = "<guard>"):
        super().__init__(f"{source_name}:{pos.line}:{pos.col}: {message}")
        self.message = message
        self.pos = pos
        self.source_name = source_name


KEYWORDS = frozenset(
    "type enum tool mutating fun let check if else in exists default "
    "allow deny not_implemented true false and or not all any filter "
    "count sum ctx list".split()
)

_PUNCT2 = ("->", "==", "!=", "<=", ">=")
_PUNCT1 = "{}()[]<>,:;.+-*/=?"


@dataclass(frozen=True)
class Token:
    kind: str  # ident kw int decimal duration text timestamp punct eof
    value: object
    pos: Pos


def tokenize(source: str, source_name: str = "<guard>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def pos() -> Pos:
        return Pos(line, col)

    def err(msg: str):
        raise GuardSyntaxError(msg, pos(), source_name)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue

        start = pos()
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, start))
            col += j - i
            i = j
            continue

        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                toks.append(Token("decimal", Decimal(source[i:j]), start))
            elif j < n and source[j] in "hd":
                unit = source[j]
                toks.append(Token("duration", (int(source[i:j]), unit), start))
                j += 1
            else:
                toks.append(Token("int", int(source[i:j]), start))
            col += j - i
            i = j
            continue

        if c == '"':
            j = i + 1
            buf = []
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    err("unterminated string")
                if source[j] == "\\":
                    j += 1
                    if j >= n:
                        err("unterminated string")
                    esc = source[j]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc) or err(f"bad escape \\{esc}"))
                else:
                    buf.append(source[j])
                j += 1
            if j >= n:
                err("unterminated string")
            toks.append(Token("text", "".join(buf), start))
            col += j + 1 - i
            i = j + 1
            continue

        if c == "@":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "-:+."):
                j += 1
            raw = source[i + 1:j]
            try:
                ts = datetime.fromisoformat(raw)
            except ValueError:
                err(f"bad timestamp literal @{raw}")
            toks.append(Token("timestamp", ts, start))
            col += j - i
            i = j
            continue

        two = source[i:i + 2]
        if two in _PUNCT2:
            toks.append(Token("punct", two, start))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(Token("punct", c, start))
            i += 1
            col += 1
            continue

        err(f"unexpected character {c!r}")

    toks.append(Token("eof", None, pos()))
    return toks
