"""S-expression surface syntax used to exchange IR programs.

Grammar: bare symbol atoms, decimal integers with an optional leading ``-``,
double-quoted strings with the escapes ``\\\\ \\" \\n \\t``, and ``;`` line
comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

_INT_RE = re.compile(r"-?[0-9]+")
_DELIMS = frozenset('()";')

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}
_UNESCAPES = {v: "\\" + k for k, v in _ESCAPES.items()}


class SexpError(Exception):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class UnterminatedString(SexpError):
    pass


class BadEscape(SexpError):
    pass


class BadInt(SexpError):
    pass


class UnbalancedParens(SexpError):
    pass


class TrailingTokens(SexpError):
    pass


class EmptyInput(SexpError):
    pass


def _looks_numeric(text: str) -> bool:
    return text[0].isdigit() or (len(text) > 1 and text[0] == "-" and text[1].isdigit())


@dataclass(frozen=True, slots=True)
class Atom:
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("atom text must be non-empty")
        if any(c.isspace() or c in _DELIMS for c in self.text):
            raise ValueError(f"atom text contains a delimiter: {self.text!r}")
        if _looks_numeric(self.text):
            raise ValueError(f"atom text would read back as an integer: {self.text!r}")


@dataclass(frozen=True, slots=True)
class StrLit:
    text: str


@dataclass(frozen=True, slots=True)
class IntLit:
    value: int


@dataclass(frozen=True, slots=True)
class SList:
    items: tuple[SExp, ...] = ()

    def __iter__(self) -> Iterator[SExp]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


SExp = Union[Atom, StrLit, IntLit, SList]


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # LPAREN | RPAREN | ATOM | STRING | INT
    value: object
    offset: int


def lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and source[i] != "\n":
                i += 1
        elif c == "(":
            tokens.append(Token("LPAREN", None, i))
            i += 1
        elif c == ")":
            tokens.append(Token("RPAREN", None, i))
            i += 1
        elif c == '"':
            start = i
            i += 1
            buf = []
            while True:
                if i >= n:
                    raise UnterminatedString("end of input inside string literal", start)
                c = source[i]
                if c == '"':
                    i += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise UnterminatedString("end of input inside string literal", start)
                    esc = source[i + 1]
                    if esc not in _ESCAPES:
                        raise BadEscape(f"unknown escape \\{esc}", i)
                    buf.append(_ESCAPES[esc])
                    i += 2
                else:
                    buf.append(c)
                    i += 1
            tokens.append(Token("STRING", "".join(buf), start))
        else:
            start = i
            while i < n and not source[i].isspace() and source[i] not in _DELIMS:
                i += 1
            text = source[start:i]
            if _looks_numeric(text):
                if not _INT_RE.fullmatch(text):
                    raise BadInt(f"malformed integer {text!r}", start)
                tokens.append(Token("INT", int(text), start))
            else:
                tokens.append(Token("ATOM", text, start))
    return tokens


def parse(tokens: list[Token]) -> SExp:
    if not tokens:
        raise EmptyInput("no S-expression in input")
    # explicit stack so nesting depth is not bounded by the Python stack
    stack: list[tuple[int, list[SExp]]] = []
    result: SExp | None = None
    for pos, tok in enumerate(tokens):
        if result is not None:
            raise TrailingTokens("unexpected tokens after the top-level expression", tok.offset)
        if tok.kind == "LPAREN":
            stack.append((tok.offset, []))
            continue
        if tok.kind == "RPAREN":
            if not stack:
                raise UnbalancedParens("unmatched ')'", tok.offset)
            _, items = stack.pop()
            node: SExp = SList(tuple(items))
        elif tok.kind == "ATOM":
            node = Atom(tok.value)
        elif tok.kind == "STRING":
            node = StrLit(tok.value)
        elif tok.kind == "INT":
            node = IntLit(tok.value)
        else:
            raise SexpError(f"unknown token kind {tok.kind}", tok.offset)
        if stack:
            stack[-1][1].append(node)
        else:
            result = node
    if stack:
        raise UnbalancedParens("unclosed '('", stack[-1][0])
    assert result is not None
    return result


def quote(text: str) -> str:
    return '"' + "".join(_UNESCAPES.get(c, c) for c in text) + '"'


def print_sexp(expr: SExp) -> str:
    """Canonical single-line rendering; ``loads(print_sexp(e)) == e``."""
    out: list[str] = []
    # iterative walk; ")" markers close lists
    work: list[object] = [expr]
    while work:
        item = work.pop()
        if item is _CLOSE:
            out.append(")")
            continue
        if out and out[-1] != "(" and item is not _CLOSE:
            out.append(" ")
        if isinstance(item, SList):
            out.append("(")
            work.append(_CLOSE)
            work.extend(reversed(item.items))
        elif isinstance(item, Atom):
            out.append(item.text)
        elif isinstance(item, StrLit):
            out.append(quote(item.text))
        elif isinstance(item, IntLit):
            out.append(str(item.value))
        else:
            raise TypeError(f"not an S-expression: {item!r}")
    return "".join(out)


_CLOSE = object()


def loads(source: str) -> SExp:
    return parse(lex(source))


def load(path) -> SExp:
    with open(path, encoding="utf-8") as f:
        return loads(f.read())
