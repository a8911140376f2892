"""Monotone access-tree policies.

A policy is a tree of k-of-n threshold gates over attribute leaves.  The
concrete syntax accepts ``and`` / ``or`` infix operators and explicit
``k of (a, b, ...)`` gates; the canonical form uses the gate form only::

    >>> serialize_policy(parse_policy("a or (b and c)"))
    '1 of (a, 2 of (b, c))'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

MAX_TEXT_BYTES = 64 * 1024
MAX_DEPTH = 32
MAX_NODES = 4096
MAX_ATTR_BYTES = 64

KEYWORDS = frozenset({"and", "or", "of"})
_ATTR_RE = re.compile(r"[A-Za-z0-9_:-]+\Z")
_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z0-9_:-]+)|([(),]))")


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, position: int, expected: Iterable[str] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at offset {position}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class LimitExceeded(PolicyError):
    pass


def check_attribute(name: str) -> str:
    if not isinstance(name, str) or not _ATTR_RE.match(name):
        raise PolicyError(f"invalid attribute name {name!r}")
    if len(name.encode()) > MAX_ATTR_BYTES:
        raise PolicyError(f"attribute name longer than {MAX_ATTR_BYTES} bytes: {name!r}")
    if name in KEYWORDS:
        raise PolicyError(f"attribute name {name!r} is a reserved word")
    return name


@dataclass(frozen=True)
class Leaf:
    attr: str

    def __post_init__(self):
        check_attribute(self.attr)


@dataclass(frozen=True)
class Gate:
    k: int
    children: tuple[Node, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise PolicyError("gate needs at least one child")
        if not 1 <= self.k <= len(self.children):
            raise PolicyError(f"threshold {self.k} outside 1..{len(self.children)}")

    @property
    def n(self) -> int:
        return len(self.children)


Node = Union[Leaf, Gate]


def depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + max(depth(c) for c in node.children)


def node_count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + sum(node_count(c) for c in node.children)


def leaves(node: Node) -> Iterator[Leaf]:
    """Leaves in left-to-right (serialization) order."""
    if isinstance(node, Leaf):
        yield node
    else:
        for child in node.children:
            yield from leaves(child)


def attributes(node: Node) -> frozenset[str]:
    return frozenset(leaf.attr for leaf in leaves(node))


def check_limits(node: Node) -> Node:
    if depth(node) > MAX_DEPTH:
        raise LimitExceeded(f"policy depth exceeds {MAX_DEPTH}")
    if node_count(node) > MAX_NODES:
        raise LimitExceeded(f"policy has more than {MAX_NODES} nodes")
    return node


def satisfies(node: Node, attrs: Iterable[str]) -> bool:
    if not isinstance(attrs, (set, frozenset)):
        attrs = frozenset(attrs)
    return _satisfies(node, attrs)


def _satisfies(node: Node, attrs) -> bool:
    if isinstance(node, Leaf):
        return node.attr in attrs
    met = 0
    for child in node.children:
        if _satisfies(child, attrs):
            met += 1
            if met >= node.k:
                return True
    return False


def serialize_policy(node: Node) -> str:
    if isinstance(node, Leaf):
        return node.attr
    inner = ", ".join(serialize_policy(c) for c in node.children)
    return f"{node.k} of ({inner})"


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    end = len(text)
    while True:
        while pos < end and text[pos].isspace():
            pos += 1
        if pos >= end:
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", pos,
                                    ("attribute", "integer", "'('", "')'", "','"))
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((m.group(1) or m.group(2), start))
        pos = m.end()
    tokens.append(("", end))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.nodes = 0

    def peek(self, ahead: int = 0) -> str:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)][0]

    @property
    def pos(self) -> int:
        return self.tokens[self.i][1]

    def take(self, value: str, expected: str):
        if self.peek() != value:
            found = self.peek() or "end of input"
            raise PolicySyntaxError(f"found {found!r}", self.pos, (expected,))
        self.i += 1

    def count(self, node: Node) -> Node:
        self.nodes += 1
        if self.nodes > MAX_NODES:
            raise LimitExceeded(f"policy has more than {MAX_NODES} nodes")
        return node

    def parse(self) -> Node:
        node = self.expr(1)
        if self.peek() != "":
            raise PolicySyntaxError(f"trailing {self.peek()!r}", self.pos, ("'and'", "'or'", "end of input"))
        return check_limits(node)

    def expr(self, level: int) -> Node:
        items = [self.term(level + 1)]
        while self.peek() == "or":
            self.i += 1
            items.append(self.term(level + 1))
        if len(items) == 1:
            return items[0]
        return self.count(Gate(1, tuple(items)))

    def term(self, level: int) -> Node:
        items = [self.factor(level)]
        while self.peek() == "and":
            self.i += 1
            items.append(self.factor(level))
        if len(items) == 1:
            return items[0]
        return self.count(Gate(len(items), tuple(items)))

    def factor(self, level: int) -> Node:
        if level > 4 * MAX_DEPTH:
            raise LimitExceeded(f"policy nesting exceeds {MAX_DEPTH}")
        tok, pos = self.tokens[self.i]
        if tok == "(":
            self.i += 1
            node = self.expr(level + 1)
            self.take(")", "')'")
            return node
        if tok.isdigit() and self.peek(1) == "of":
            self.i += 2
            self.take("(", "'('")
            children = [self.expr(level + 1)]
            while self.peek() == ",":
                self.i += 1
                children.append(self.expr(level + 1))
            self.take(")", "')' or ','")
            k = int(tok)
            if not 1 <= k <= len(children):
                raise PolicySyntaxError(f"threshold {k} outside 1..{len(children)}", pos,
                                        (f"integer in 1..{len(children)}",))
            return self.count(Gate(k, tuple(children)))
        if tok and tok not in KEYWORDS and tok not in "(),":
            if len(tok.encode()) > MAX_ATTR_BYTES:
                raise PolicySyntaxError(f"attribute longer than {MAX_ATTR_BYTES} bytes", pos, ("attribute",))
            self.i += 1
            return self.count(Leaf(tok))
        raise PolicySyntaxError(f"found {tok or 'end of input'!r}", pos,
                                ("attribute", "'k of (...)'", "'('"))


def parse_policy(text: str) -> Node:
    if not text or not text.strip():
        raise PolicySyntaxError("empty policy", 0, ("attribute", "'k of (...)'", "'('"))
    if len(text.encode()) > MAX_TEXT_BYTES:
        raise LimitExceeded(f"policy text exceeds {MAX_TEXT_BYTES} bytes")
    return _Parser(text).parse()
