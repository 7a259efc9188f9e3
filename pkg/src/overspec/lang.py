"""Syntax of the pipeline language.

Programs are S-expressions and the canonical program text doubles as the
program's index: two programs are the same index iff their canonical texts
are equal.  Grammar (``lit`` is a raw literal, ``term`` a sub-program)::

    term := INPUT | FIRST | SECOND
          | (CONST lit) | (MATCH_PAD lit) | (PAD_COUNT lit) | (NUM digits)
          | (SQ term) | (CONCAT term term) | (EQ term term)
          | (IF term term term) | (SIM_TM term term term)
          | (EVAL term term) | (SPECIALIZE term term)
          | (ORACLE name term)
          | (SELFAPPLY term)          ; sugar, expanded while parsing

A literal runs from the single space after the head to the matching close
paren and is kept verbatim, so program text can be quoted inside ``CONST``
without escaping.  Literals that are not paren-balanced, or that contain a
backslash, are written with every ``\\``, ``(`` and ``)`` backslash-escaped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .errors import ParseError

ATOMS = frozenset({"INPUT", "FIRST", "SECOND"})
LITERAL_OPS = frozenset({"CONST", "MATCH_PAD", "PAD_COUNT"})
ARITY = {
    "SQ": 1,
    "CONCAT": 2,
    "EQ": 2,
    "EVAL": 2,
    "SPECIALIZE": 2,
    "IF": 3,
    "SIM_TM": 3,
}
# Ops that never reach an EVAL or ORACLE; programs built from these halt
# on every input.
TOTAL_OPS = ATOMS | LITERAL_OPS | {"NUM", "SQ", "CONCAT", "EQ", "IF", "SIM_TM", "SPECIALIZE"}

_DELIMS = frozenset("() \t\r\n")

# H(n, x) = eval(eval(n, n), x), consumed through the pairing accessors.
SELF_APPLY_TEMPLATE = "(EVAL (EVAL FIRST FIRST) SECOND)"


@dataclass(frozen=True, slots=True)
class Node:
    op: str
    children: tuple["Node", ...] = ()
    literal: str | None = None

    def __str__(self) -> str:
        return render(self)


def const(value: str) -> Node:
    return Node("CONST", literal=value)


def node(op: str, *children: Node) -> Node:
    return Node(op, tuple(children))


# -- literals ---------------------------------------------------------------

def _balanced(s: str) -> bool:
    depth = 0
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def encode_literal(s: str) -> str:
    if "\\" not in s and _balanced(s):
        return s
    return "".join("\\" + ch if ch in "\\()" else ch for ch in s)


def _read_literal(text: str, pos: int) -> tuple[str, int]:
    """Read a literal starting at pos; return (value, index of closing paren)."""
    out = []
    depth = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\\":
            if pos + 1 >= len(text):
                raise ParseError("dangling escape in literal", pos)
            out.append(text[pos + 1])
            pos += 2
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            if depth == 0:
                return "".join(out), pos
            depth -= 1
        out.append(ch)
        pos += 1
    raise ParseError("unterminated literal", pos)


# -- pairing ------------------------------------------------------------------

def pair(c: str, x: str) -> str:
    """Length-prefixed pairing: ``pair("ab", "x") == "2:abx"``."""
    return f"{len(c)}:{c}{x}"


def unpair(s: str) -> tuple[str, str]:
    """Inverse of :func:`pair`.  Strings that are not pairs decode as
    ``("", s)`` so the accessors stay total."""
    colon = s.find(":")
    if colon <= 0 or not s[:colon].isdigit() or (len(s[:colon]) > 1 and s[0] == "0"):
        return "", s
    n = int(s[:colon])
    start = colon + 1
    if start + n > len(s):
        return "", s
    return s[start:start + n], s[start + n:]


# -- parsing ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def atom(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS:
            self.pos += 1
        if start == self.pos:
            raise ParseError("expected a symbol", start)
        return self.text[start:self.pos]

    def expect(self, ch: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise ParseError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def term(self) -> Node:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of input", self.pos)
        if self.text[self.pos] != "(":
            start = self.pos
            name = self.atom()
            if name not in ATOMS:
                raise ParseError(f"unknown atom {name!r}", start)
            return Node(name)
        self.pos += 1
        head_pos = self.pos
        head = self.atom()
        if head in LITERAL_OPS:
            if self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
                self.pos += 1
            value, self.pos = _read_literal(self.text, self.pos)
            self.pos += 1
            return Node(head, literal=value)
        if head == "NUM":
            self.skip_ws()
            digits_pos = self.pos
            digits = self.atom()
            if not digits.isdigit():
                raise ParseError(f"NUM expects digits, got {digits!r}", digits_pos)
            self.expect(")")
            return Node("NUM", literal=str(int(digits)))
        if head == "ORACLE":
            self.skip_ws()
            name = self.atom()
            arg = self.term()
            self.expect(")")
            return Node("ORACLE", (arg,), literal=name)
        if head == "SELFAPPLY":
            arg = self.term()
            self.expect(")")
            return Node("SPECIALIZE", (const(SELF_APPLY_TEMPLATE), arg))
        if head not in ARITY:
            raise ParseError(f"unknown operator {head!r}", head_pos)
        children = tuple(self.term() for _ in range(ARITY[head]))
        self.expect(")")
        return Node(head, children)


@lru_cache(maxsize=4096)
def parse(text: str) -> Node:
    """Parse program text into an AST.  Surrounding whitespace is ignored."""
    p = _Parser(text)
    tree = p.term()
    p.skip_ws()
    if p.pos != len(text):
        raise ParseError("trailing input after program", p.pos)
    return tree


def render(tree: Node) -> str:
    op = tree.op
    if op in ATOMS:
        return op
    if op in LITERAL_OPS:
        return f"({op} {encode_literal(tree.literal)})"
    if op == "NUM":
        return f"(NUM {tree.literal})"
    if op == "ORACLE":
        return f"(ORACLE {tree.literal} {render(tree.children[0])})"
    return "(" + " ".join([op] + [render(c) for c in tree.children]) + ")"


def canonicalize(text: str) -> str:
    return render(parse(text))


def walk(tree: Node) -> Iterator[Node]:
    stack = [tree]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def is_total_fragment(tree: Node) -> bool:
    """True iff the program uses no EVAL and no ORACLE node (so it halts on
    every input given enough steps)."""
    return all(n.op in TOTAL_OPS for n in walk(tree))
