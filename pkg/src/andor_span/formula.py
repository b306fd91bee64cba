"""Read-once AND-OR formulas: parsing, fan-in-two normalization, evaluation,
and enumeration of maximal false inputs (minimal zero-certificates)."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

AND, OR, LEAF = "and", "or", "leaf"

DEFAULT_CERTIFICATE_CAP = 10**6


class FormulaError(ValueError):
    """Invalid formula structure or argument."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class CapExceeded(FormulaError):
    """A configured size cap would be exceeded."""


@dataclass(frozen=True)
class Node:
    kind: str
    children: tuple["Node", ...] = ()
    index: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.index]
        return [k for c in self.children for k in c.leaves()]

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"kind": LEAF, "index": self.index}
        return {"kind": self.kind, "children": [c.to_dict() for c in self.children]}

    def to_text(self) -> str:
        if self.is_leaf:
            return f"x{self.index}"
        op = "&" if self.kind == AND else "|"
        parts = []
        for c in self.children:
            s = c.to_text()
            parts.append(s if c.is_leaf else f"({s})")
        return op.join(parts)


def leaf(k: int) -> Node:
    return Node(LEAF, (), k)


def gate(kind: str, *children: Node) -> Node:
    return Node(kind, tuple(children))


def node_from_dict(d: dict) -> Node:
    kind = d.get("kind")
    if kind == LEAF:
        return leaf(int(d["index"]))
    if kind not in (AND, OR):
        raise FormulaError(f"unknown node kind {kind!r}")
    children = d.get("children") or []
    if not children:
        raise FormulaError("gate without children")
    return Node(kind, tuple(node_from_dict(c) for c in children))


@dataclass(frozen=True)
class Formula:
    """A read-once AND-OR formula whose leaves are exactly x1..xn."""

    root: Node
    n: int

    @classmethod
    def from_root(cls, root: Node) -> "Formula":
        indices = root.leaves()
        n = len(indices)
        if n == 0:
            raise FormulaError("formula has no leaves")
        seen = set()
        for k in indices:
            if k in seen:
                raise FormulaError(f"duplicate leaf index x{k}")
            seen.add(k)
        missing = sorted(set(range(1, n + 1)) - seen)
        if missing:
            raise FormulaError(f"missing leaf index x{missing[0]} (leaves must be x1..x{n})")
        return cls(root, n)

    def to_json(self) -> str:
        return json.dumps(self.root.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Formula":
        return cls.from_root(node_from_dict(json.loads(text)))

    def __str__(self) -> str:
        return self.root.to_text()


_TOKEN = re.compile(r"\s*(?:(x\d+)|([&|()])|(\S))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        if m.group(3) is not None:
            raise FormulaSyntaxError(f"unexpected character {m.group(3)!r}", m.start(3))
        tok = m.group(1) or m.group(2)
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((tok, start))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


class _Parser:
    # expr := term ('|' term)* ; term := factor ('&' factor)* ; factor := 'x' INT | '(' expr ')'
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek()[0] == "|":
            self.take()
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Node(OR, tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek()[0] == "&":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Node(AND, tuple(factors))

    def factor(self) -> Node:
        tok, pos = self.take()
        if tok.startswith("x"):
            k = int(tok[1:])
            if k < 1:
                raise FormulaSyntaxError("leaf index must be positive", pos)
            return leaf(k)
        if tok == "(":
            node = self.expr()
            closing, cpos = self.take()
            if closing != ")":
                raise FormulaSyntaxError("expected ')'", cpos)
            return node
        if tok == "":
            raise FormulaSyntaxError("unexpected end of input", pos)
        raise FormulaSyntaxError(f"unexpected token {tok!r}", pos)


def parse_formula(text: str) -> Formula:
    """Parse formula text such as ``"(x1&x2)|x3"``.

    ``&`` binds tighter than ``|``; chains of one operator become a single
    gate of higher fan-in.
    """
    p = _Parser(text)
    if p.peek()[0] == "":
        raise FormulaError("formula has no leaves")
    root = p.expr()
    tok, pos = p.peek()
    if tok != "":
        raise FormulaSyntaxError(f"unexpected token {tok!r}", pos)
    return Formula.from_root(root)


class BinaryFormula:
    """Fan-in-two formula stored as flat preorder arrays.

    Vertex 0 is the root. For every gate ``v``, ``children[v] = (c1, c2)``
    with ``size[c1] >= size[c2]`` (``s1(v) >= s2(v)``).
    """

    def __init__(self, root: Node):
        self.kind: list[str] = []
        self.children: list[tuple[int, ...]] = []
        self.leaf_index: list[int | None] = []
        self.size: list[int] = []
        self.parent: list[int | None] = []
        self._add(root, None)
        self.n = self.size[0]
        self.leaf_vertex = {k: v for v, k in enumerate(self.leaf_index) if k is not None}
        if sorted(self.leaf_vertex) != list(range(1, self.n + 1)):
            raise FormulaError("leaves must be exactly x1..xn")
        for v in self.gates():
            c1, c2 = self.children[v]
            if self.size[c1] < self.size[c2]:
                raise FormulaError("child order violates s1 >= s2")

    def _add(self, node: Node, parent: int | None) -> int:
        v = len(self.kind)
        self.kind.append(node.kind)
        self.children.append(())
        self.leaf_index.append(node.index if node.is_leaf else None)
        self.size.append(1)
        self.parent.append(parent)
        if not node.is_leaf:
            if len(node.children) != 2:
                raise FormulaError("BinaryFormula requires fan-in exactly two")
            kids = tuple(self._add(c, v) for c in node.children)
            self.children[v] = kids
            self.size[v] = sum(self.size[c] for c in kids)
        return v

    def __len__(self) -> int:
        return len(self.kind)

    def is_leaf(self, v: int) -> bool:
        return self.kind[v] == LEAF

    def gates(self) -> list[int]:
        return [v for v in range(len(self)) if self.kind[v] != LEAF]

    def s1(self, v: int) -> int:
        return self.size[self.children[v][0]]

    def s2(self, v: int) -> int:
        return self.size[self.children[v][1]]

    def node(self, v: int = 0) -> Node:
        if self.is_leaf(v):
            return leaf(self.leaf_index[v])
        return Node(self.kind[v], tuple(self.node(c) for c in self.children[v]))

    def leaves_under(self, v: int) -> list[int]:
        if self.is_leaf(v):
            return [self.leaf_index[v]]
        return [k for c in self.children[v] for k in self.leaves_under(c)]

    def postorder(self) -> list[int]:
        # preorder ids: children always have larger ids than their parent
        return list(range(len(self) - 1, -1, -1))

    def values(self, x: Sequence[int]) -> list[int]:
        """Value of every vertex's subformula on input ``x``."""
        val = [0] * len(self)
        for v in self.postorder():
            if self.is_leaf(v):
                val[v] = int(x[self.leaf_index[v] - 1])
            else:
                a, b = (val[c] for c in self.children[v])
                val[v] = (a & b) if self.kind[v] == AND else (a | b)
        return val

    def to_json(self) -> str:
        return json.dumps(self.node().to_dict())

    def __str__(self) -> str:
        return self.node().to_text()


def _size(node: Node) -> int:
    return 1 if node.is_leaf else sum(_size(c) for c in node.children)


def _binarize(node: Node) -> Node:
    if node.is_leaf:
        return node
    kids = [_binarize(c) for c in node.children]
    if len(kids) == 1:
        return kids[0]
    return _balanced(node.kind, kids)


def _balanced(kind: str, kids: list[Node]) -> Node:
    if len(kids) == 1:
        return kids[0]
    half = (len(kids) + 1) // 2
    left, right = _balanced(kind, kids[:half]), _balanced(kind, kids[half:])
    # stable: swap only on strict inequality
    if _size(left) < _size(right):
        left, right = right, left
    return Node(kind, (left, right))


def _reorder(node: Node) -> Node:
    if node.is_leaf:
        return node
    a, b = (_reorder(c) for c in node.children)
    if _size(a) < _size(b):
        a, b = b, a
    return Node(node.kind, (a, b))


def normalize_binary(f: Formula | Node) -> BinaryFormula:
    """Remove fan-in-1 gates, split wider gates by balanced halving, and order
    children so the larger subformula comes first (stable on ties)."""
    root = f.root if isinstance(f, Formula) else f
    return BinaryFormula(_reorder(_binarize(root)))


def _check_assignment(f: BinaryFormula, x: Sequence[int]) -> tuple[int, ...]:
    if len(x) != f.n:
        raise FormulaError(f"assignment has length {len(x)}, formula has n={f.n}")
    bits = tuple(int(b) for b in x)
    if any(b not in (0, 1) for b in bits):
        raise FormulaError("assignment bits must be 0 or 1")
    return bits


def parse_bits(text: str) -> tuple[int, ...]:
    if not text or any(ch not in "01" for ch in text):
        raise FormulaError(f"invalid bitstring {text!r}")
    return tuple(int(ch) for ch in text)


def bits_to_str(x: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in x)


def evaluate(f: BinaryFormula, x: Sequence[int]) -> int:
    return f.values(_check_assignment(f, x))[0]


def all_inputs(n: int) -> Iterable[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=n)


def is_maximal_false(f: BinaryFormula, x: Sequence[int]) -> bool:
    """Brute-force predicate: phi(x)=0 and every single 0->1 flip gives 1."""
    x = _check_assignment(f, x)
    if evaluate(f, x):
        return False
    for k in range(f.n):
        if x[k] == 0:
            y = list(x)
            y[k] = 1
            if not evaluate(f, y):
                return False
    return True


def count_maximal_false(f: BinaryFormula, v: int = 0) -> int:
    if f.is_leaf(v):
        return 1
    a, b = (count_maximal_false(f, c) for c in f.children[v])
    return a * b if f.kind[v] == OR else a + b


def _zero_sets(f: BinaryFormula, v: int) -> list[frozenset[int]]:
    # each maximal false input of the subformula at v, as its set of zero leaves
    if f.is_leaf(v):
        return [frozenset((f.leaf_index[v],))]
    left, right = (_zero_sets(f, c) for c in f.children[v])
    if f.kind[v] == OR:
        return [a | b for a in left for b in right]
    return left + right


def maximal_false_inputs(f: BinaryFormula, cap: int = DEFAULT_CERTIFICATE_CAP) -> list[tuple[int, ...]]:
    """All maximal false inputs, sorted lexicographically as bitstrings."""
    count = count_maximal_false(f)
    if count > cap:
        raise CapExceeded(f"{count} maximal false inputs exceed cap {cap}")
    out = []
    for zeros in _zero_sets(f, 0):
        out.append(tuple(0 if k in zeros else 1 for k in range(1, f.n + 1)))
    out.sort()
    return out


@dataclass(frozen=True)
class FalseSubtree:
    """The subtree certifying phi(x)=0 for a maximal false input ``x``.

    ``branch[v]`` gives the selected child position (1 or 2) at AND gates.
    """

    vertices: frozenset[int]
    branch: dict[int, int] = field(default_factory=dict)

    def leaves(self, f: BinaryFormula) -> set[int]:
        return {f.leaf_index[v] for v in self.vertices if f.is_leaf(v)}


def false_subtree(f: BinaryFormula, x: Sequence[int]) -> FalseSubtree:
    x = _check_assignment(f, x)
    if not is_maximal_false(f, x):
        raise FormulaError(f"{bits_to_str(x)} is not a maximal false input")
    val = f.values(x)
    verts, branch = set(), {}
    stack = [0]
    while stack:
        v = stack.pop()
        verts.add(v)
        if f.is_leaf(v):
            continue
        c1, c2 = f.children[v]
        if f.kind[v] == OR:
            stack += [c1, c2]
        else:
            j = 1 if val[c1] == 0 else 2
            branch[v] = j
            stack.append(c1 if j == 1 else c2)
    return FalseSubtree(frozenset(verts), branch)
