"""Formula families used in benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .formula import AND, OR, BinaryFormula, FormulaError, Node, gate, leaf, normalize_binary

FAMILIES = ("balanced_alt", "skew", "random")


def _other(kind: str) -> str:
    return OR if kind == AND else AND


def balanced_alt(d: int) -> BinaryFormula:
    """Complete binary tree of depth ``d``, AND at the root, levels alternating,
    leaves x1..x_{2^d} left to right."""
    if d < 1:
        raise FormulaError("depth must be at least 1")
    counter = iter(range(1, 2**d + 1))

    def build(depth: int, kind: str) -> Node:
        if depth == 0:
            return leaf(next(counter))
        return gate(kind, build(depth - 1, _other(kind)), build(depth - 1, _other(kind)))

    return normalize_binary(build(d, AND))


def skew(n: int) -> BinaryFormula:
    """Maximally unbalanced chain of ``n - 1`` alternating gates with AND at the
    root; the deepest gate reads x1, x2 and gate k from the bottom adds x_{k+1}."""
    if n < 2:
        raise FormulaError("skew formulas need n >= 2")
    kinds = [AND if (n - 2 - k) % 2 == 0 else OR for k in range(n - 1)]  # bottom first
    node = gate(kinds[0], leaf(1), leaf(2))
    for k in range(1, n - 1):
        node = gate(kinds[k], node, leaf(k + 2))
    return normalize_binary(node)


def random_formula(n: int, seed: int = 0) -> BinaryFormula:
    """Random read-once formula on n leaves: uniform split points, uniform
    gate kinds, leaves numbered left to right."""
    if n < 1:
        raise FormulaError("n must be at least 1")
    rng = np.random.default_rng(seed)
    counter = iter(range(1, n + 1))

    def build(m: int) -> Node:
        if m == 1:
            return leaf(next(counter))
        k = int(rng.integers(1, m))
        kind = AND if rng.integers(0, 2) == 0 else OR
        return gate(kind, build(k), build(m - k))

    return normalize_binary(build(n))


def all_shapes(n: int) -> list[BinaryFormula]:
    """Every binary AND/OR formula on n leaves (x1..xn left to right), up to
    the child reordering done by normalization."""
    def shapes(lo: int, hi: int) -> list[Node]:
        if hi - lo == 1:
            return [leaf(lo)]
        out = []
        for mid in range(lo + 1, hi):
            for a in shapes(lo, mid):
                for b in shapes(mid, hi):
                    out.append(gate(AND, a, b))
                    out.append(gate(OR, a, b))
        return out

    return [normalize_binary(r) for r in shapes(1, n + 1)]


def generate_family(kind: str, param: int, seed: int = 0) -> BinaryFormula:
    """``param`` is the depth for balanced_alt and the size otherwise."""
    if kind == "balanced_alt":
        return balanced_alt(param)
    if kind == "skew":
        return skew(param)
    if kind == "random":
        return random_formula(param, seed)
    raise FormulaError(f"unknown family {kind!r}")


def depth(f: BinaryFormula) -> int:
    """Number of gates on the longest root-to-leaf path."""
    d = [0] * len(f)
    for v in f.postorder():
        if not f.is_leaf(v):
            d[v] = 1 + max(d[c] for c in f.children[v])
    return d[0]


def probe_input(f: BinaryFormula, value: int) -> tuple[int, ...]:
    """An input on which the formula's value has to travel the whole spine.

    Following first children from the root, every second-child subformula is
    set to its parent gate's identity (all ones under AND, all zeros under
    OR), and the leaf ending the spine is set to ``value``, which is then the
    formula's value. On skew trees this makes every leaf relevant to the
    kernel eigenvector, the worst case for gate-by-gate composition.
    """
    x = [0] * f.n
    v = 0
    while not f.is_leaf(v):
        c1, c2 = f.children[v]
        ident = 1 if f.kind[v] == AND else 0
        for k in f.leaves_under(c2):
            x[k - 1] = ident
        v = c1
    x[f.leaf_index[v] - 1] = int(value)
    return tuple(x)
