"""S-expression reader for SMT-LIB2 text.

Keeps line/column positions so that parse errors can point at the
offending token, and attaches the comments that precede each top-level
form (the goal label is a comment).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class SExpError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Atom:
    text: str
    kind: str  # symbol | numeral | decimal | string | keyword
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)


@dataclass(frozen=True)
class Form:
    """A top-level form with the comments written just before it."""

    expr: Atom | SList
    comments: tuple[str, ...] = ()


_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*\Z")
_NUMERAL = re.compile(r"(0|[1-9][0-9]*)\Z")
_DECIMAL = re.compile(r"(0|[1-9][0-9]*)\.[0-9]+\Z")
_DELIMS = set("()|\";")


def is_simple_symbol(name: str) -> bool:
    return bool(_SIMPLE.match(name))


def quote_symbol(name: str) -> str:
    if is_simple_symbol(name):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"symbol cannot be quoted: {name!r}")
    return f"|{name}|"


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self.pending_comments: list[str] = []

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def skip_ws(self) -> None:
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c.isspace():
                self._advance()
            elif c == ";":
                end = text.find("\n", self.pos)
                end = len(text) if end < 0 else end
                self.pending_comments.append(text[self.pos + 1 : end].strip())
                self._advance(end - self.pos)
            else:
                break

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def read(self) -> Atom | SList:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise SExpError("unexpected end of input", self.line, self.col)
        line, col = self.line, self.col
        c = self.text[self.pos]
        if c == "(":
            self._advance()
            items = []
            while True:
                self.skip_ws()
                if self.pos >= len(self.text):
                    raise SExpError("unbalanced '('", line, col)
                if self.text[self.pos] == ")":
                    self._advance()
                    return SList(tuple(items), line, col)
                items.append(self.read())
        if c == ")":
            raise SExpError("unexpected ')'", line, col)
        if c == "|":
            end = self.text.find("|", self.pos + 1)
            if end < 0:
                raise SExpError("unterminated quoted symbol", line, col)
            name = self.text[self.pos + 1 : end]
            self._advance(end + 1 - self.pos)
            return Atom(name, "symbol", line, col)
        if c == '"':
            i = self.pos + 1
            chars = []
            while True:
                if i >= len(self.text):
                    raise SExpError("unterminated string literal", line, col)
                if self.text[i] == '"':
                    if i + 1 < len(self.text) and self.text[i + 1] == '"':
                        chars.append('"')
                        i += 2
                        continue
                    break
                chars.append(self.text[i])
                i += 1
            self._advance(i + 1 - self.pos)
            return Atom("".join(chars), "string", line, col)
        start = self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace() or ch in _DELIMS:
                break
            self._advance()
        tok = self.text[start : self.pos]
        if tok.startswith(":"):
            return Atom(tok, "keyword", line, col)
        if _NUMERAL.match(tok):
            return Atom(tok, "numeral", line, col)
        if _DECIMAL.match(tok):
            return Atom(tok, "decimal", line, col)
        return Atom(tok, "symbol", line, col)


def read_forms(text: str) -> list[Form]:
    """Read every top-level form of ``text``."""
    lexer = _Lexer(text)
    forms = []
    while not lexer.at_end():
        comments = tuple(lexer.pending_comments)
        lexer.pending_comments = []
        forms.append(Form(lexer.read(), comments))
    return forms


def read_one(text: str) -> Atom | SList:
    forms = read_forms(text)
    if len(forms) != 1:
        raise SExpError(f"expected exactly one s-expression, found {len(forms)}")
    return forms[0].expr


def find_balanced(text: str, start: int) -> int:
    """Index just past the s-expression opening at ``text[start]``, or -1."""
    depth = 0
    i = start
    in_quote = in_string = False
    while i < len(text):
        c = text[i]
        if in_quote:
            in_quote = c != "|"
        elif in_string:
            in_string = c != '"'
        elif c == "|":
            in_quote = True
        elif c == '"':
            in_string = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return -1
