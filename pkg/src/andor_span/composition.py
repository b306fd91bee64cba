"""Span program composition for AND-OR formulas.

Reduced tensor-product composition builds one strict program per chain of
gates (a *path*); direct-sum composition glues the path programs together
across checkpointed edges. Checkpoint placement decides where each path ends.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .formula import (AND, OR, DEFAULT_CERTIFICATE_CAP, BinaryFormula, CapExceeded,
                      count_maximal_false, false_subtree, maximal_false_inputs)
from .span import (GateParams, SpanProgram, SpanProgramError, WorstCase,
                   primitive_gate_program, witness_report, worst_case_report)

SQRT_E = math.sqrt(math.e)
SEGMENT_LOG_THRESHOLD = 0.5  # log of sqrt(e)
SEGMENT_MAX = 2**0.25 * SQRT_E
STRATEGIES = ("hybrid", "tensor_only", "direct_sum_only")


class CompositionError(ValueError):
    pass


def _is_bits(label: str, n: int) -> bool:
    return len(label) == n and set(label) <= {"0", "1"}


# ---------------------------------------------------------------------------
# reduced tensor-product composition


def reduced_tensor_compose(P: SpanProgram, inner: SpanProgram, position: int) -> SpanProgram:
    """Compose ``inner`` into input ``position`` of ``P``, reduced w.r.t. the
    standard basis of P's space.

    Inputs of the result: P's inputs before ``position``, then inner's inputs,
    then P's remaining inputs.
    """
    for prog, name in ((P, "outer"), (inner, "inner")):
        if not (prog.is_strict and prog.is_monotone):
            raise CompositionError(f"{name} program must be strict and monotone")
    composed = P.columns_of(position, 1)
    if not composed:
        raise CompositionError(f"input {position} of the outer program has no vectors")
    m = inner.n
    Z = ~np.any(P.matrix[:, composed] != 0, axis=1)
    tnorm = float(np.linalg.norm(inner.target))
    offsets, dim = [], 0
    for l in range(P.dim):
        offsets.append(dim)
        dim += 1 if Z[l] else inner.dim

    def lift(coeffs: np.ndarray) -> np.ndarray:
        # sum_l coeffs[l] |pi_l>
        out = np.zeros(dim)
        for l in range(P.dim):
            if coeffs[l] == 0:
                continue
            if Z[l]:
                out[offsets[l]] = coeffs[l] * tnorm
            else:
                out[offsets[l]:offsets[l] + inner.dim] = coeffs[l] * inner.target
        return out

    cols, groups, labels = [], [], []
    for i, g in enumerate(P.groups):
        j = g[0]
        if j == position:
            for i2, g2 in enumerate(inner.groups):
                vec = np.zeros(dim)
                for l in range(P.dim):
                    if P.matrix[l, i] != 0:
                        vec[offsets[l]:offsets[l] + inner.dim] = P.matrix[l, i] * inner.matrix[:, i2]
                cols.append(vec)
                groups.append((position + g2[0] - 1, 1))
                labels.append(inner.labels[i2])
        else:
            cols.append(lift(P.matrix[:, i]))
            groups.append((j if j < position else j + m - 1, 1))
            labels.append(P.labels[i])

    bits = all(_is_bits(r, P.n) for r in P.row_labels) and all(_is_bits(r, m) for r in inner.row_labels)
    row_labels = []
    for l in range(P.dim):
        lab = P.row_labels[l]
        if Z[l]:
            row_labels.append(lab[:position - 1] + "1" * m + lab[position:] if bits else f"{lab}:*")
        else:
            for r in inner.row_labels:
                row_labels.append(lab[:position - 1] + r + lab[position:] if bits else f"{lab}:{r}")
    matrix = np.column_stack(cols) if cols else np.zeros((dim, 0))
    return SpanProgram(lift(P.target), matrix, groups, P.n + m - 1, labels, row_labels)


def canonical_rows(P: SpanProgram) -> SpanProgram:
    """Sort rows lexicographically by label."""
    perm = sorted(range(P.dim), key=lambda r: P.row_labels[r])
    return P.reorder_rows(perm)


def pattern_labels(P: SpanProgram) -> list[str]:
    """Row labels read off the nonzero pattern: bit k is 0 iff input k's
    vector is nonzero in that row."""
    out = []
    for r in range(P.dim):
        bits = ["1"] * P.n
        for i, g in enumerate(P.groups):
            if g is not None and P.matrix[r, i] != 0:
                bits[g[0] - 1] = "0"
        out.append("".join(bits))
    return out


# ---------------------------------------------------------------------------
# paths (maximally unbalanced chains of gates)


@dataclass(frozen=True)
class PathGate:
    kind: str
    s1: float
    s2: float

    @property
    def params(self) -> GateParams:
        return GateParams(self.s1, self.s2)

    @property
    def factor(self) -> float:
        """alpha(v) for AND, eps(v) for OR (they coincide)."""
        return self.params.alpha


@dataclass
class PathProgram:
    """Program of a maximally unbalanced formula; inputs are numbered from the
    leaf end (input 1 is the far child of the deepest gate)."""

    program: SpanProgram
    t_and: list[int]
    t_or: list[int]
    t_f: list[int]
    certificates: dict[int, tuple[int, ...]]  # j in T_F -> x^j

    def row_of(self, j: int) -> int:
        """Row of ``x^j``: the row whose zero pattern over inputs equals ``x^j``.

        Matches by pattern rather than label so that it survives relabeling.
        """
        P, x = self.program, self.certificates[j]
        for r in range(P.dim):
            pattern = [1] * P.n
            for i, g in enumerate(P.groups):
                if g is not None and P.matrix[r, i] != 0:
                    pattern[g[0] - 1] = 0
            if tuple(pattern) == x:
                return r
        raise CompositionError(f"no row for x^{j}")


def _input_gate(k: int) -> int:
    """Bottom-up index (1 = deepest) of the gate that input ``k`` feeds."""
    return max(1, k - 1)


def _certificates(gates_bottom_up: list[PathGate]):
    J = len(gates_bottom_up)
    t_and = [k for k in range(1, J + 2) if gates_bottom_up[_input_gate(k) - 1].kind == AND]
    t_or = [k for k in range(1, J + 2) if k not in t_and]
    t_f = sorted(set(t_and) | {1})
    cert = {}
    for j in t_f:
        cert[j] = tuple(0 if (k == j or (k > j and k in t_or)) else 1 for k in range(1, J + 2))
    return t_and, t_or, t_f, cert


def compose_path_iterative(gates: Sequence[PathGate]) -> PathProgram:
    """Fold reduced tensor-product composition from the root-end gate down.

    ``gates`` are listed root end first.
    """
    if not gates:
        raise CompositionError("empty path")
    P = primitive_gate_program(gates[0].kind, gates[0].s1, gates[0].s2)
    for g in gates[1:]:
        P = reduced_tensor_compose(P, primitive_gate_program(g.kind, g.s1, g.s2), 1)
    P = canonical_rows(P)
    t_and, t_or, t_f, cert = _certificates(list(reversed(gates)))
    return PathProgram(P, t_and, t_or, t_f, cert)


def compose_path_closed_form(gates: Sequence[PathGate]) -> PathProgram:
    """Build the path program directly from the product formulas over the
    root paths of each input (no iterated composition)."""
    if not gates:
        raise CompositionError("empty path")
    G = list(reversed(gates))  # G[i-1] is the i-th gate from the leaf end
    J = len(G)
    t_and, t_or, t_f, cert = _certificates(G)

    def gamma(k: int) -> range:
        return range(_input_gate(k), J + 1)

    def iota(k: int, i: int) -> int:
        return (1 if k == 1 else 2) if i == _input_gate(k) else 1

    def off_path(i: int) -> float:
        g = G[i - 1]
        return g.params.alpha if g.kind == AND else 1.0

    def on_false_path(j: int, i: int) -> float:
        g = G[i - 1]
        return g.params.a(iota(j, i)) if g.kind == AND else 1.0

    def on_input_path(k: int, i: int) -> float:
        g = G[i - 1]
        return 1.0 if g.kind == AND else g.params.e(iota(k, i))

    rows = {j: r for r, j in enumerate(sorted(t_f, key=lambda j: cert[j]))}
    target = np.zeros(len(t_f))
    for j in t_f:
        val = 1.0
        for i in range(1, J + 1):
            val *= on_false_path(j, i) if i in gamma(j) else off_path(i)
        target[rows[j]] = val

    min_and = min(t_and) if t_and else J + 2
    A = np.zeros((len(t_f), J + 1))
    for k in range(1, J + 2):
        gk = gamma(k)
        if k in t_and or k <= min_and:
            kappa = k if k in t_and else 1
            val = 1.0
            for i in range(1, J + 1):
                val *= on_input_path(k, i) if i in gk else off_path(i)
            A[rows[kappa], k - 1] = val
        else:
            for j in t_f:
                if j >= k:
                    continue
                gj = gamma(j)
                val = 1.0
                for i in range(1, J + 1):
                    if i in gk:
                        val *= on_input_path(k, i)
                    elif i in gj:
                        val *= on_false_path(j, i)
                    else:
                        val *= off_path(i)
                A[rows[j], k - 1] = val
    labels = ["".join(map(str, cert[j])) for j in sorted(t_f, key=lambda j: cert[j])]
    P = SpanProgram(target, A, [(k, 1) for k in range(1, J + 2)], J + 1, row_labels=labels)
    return PathProgram(P, t_and, t_or, t_f, cert)


# ---------------------------------------------------------------------------
# direct-sum composition


def direct_sum_compose(P: SpanProgram, subprograms: dict[int, SpanProgram],
                       checkpoint_labels: dict[int, str] | None = None) -> SpanProgram:
    """Direct-sum composition of true-side programs into inputs of ``P``.

    The space is V plus one copy of the sub-program's space per composed
    column. A composed column becomes free, ``|v_i> + |i>|t^j>``; the
    sub-program's vectors are embedded in block ``i``. Inputs are renumbered
    in order, input ``j`` expanding to ``subprograms[j].n`` inputs.
    """
    if not subprograms:
        return P
    for j in subprograms:
        if not 1 <= j <= P.n:
            raise CompositionError(f"no input {j} in outer program of arity {P.n}")
        if P.columns_of(j, 0):
            raise CompositionError("negated sub-programs are not supported")
    checkpoint_labels = checkpoint_labels or {}
    offset, width = {}, {}
    acc = 0
    for j in range(1, P.n + 1):
        offset[j] = acc
        width[j] = subprograms[j].n if j in subprograms else 1
        acc += width[j]
    new_n = acc

    blocks = []  # (column index i in P, sub-program input j)
    for i, g in enumerate(P.groups):
        if g is not None and g[0] in subprograms:
            blocks.append((i, g[0]))
    block_start, dim = {}, P.dim
    for i, j in blocks:
        block_start[i] = dim
        dim += subprograms[j].dim

    target = np.zeros(dim)
    target[:P.dim] = P.target
    cols, groups, labels = [], [], []
    for i, g in enumerate(P.groups):
        vec = np.zeros(dim)
        vec[:P.dim] = P.matrix[:, i]
        if g is None:
            groups.append(None)
            labels.append(P.labels[i])
        elif g[0] in subprograms:
            sub = subprograms[g[0]]
            vec[block_start[i]:block_start[i] + sub.dim] = sub.target
            groups.append(None)
            labels.append(checkpoint_labels.get(g[0], f"c{g[0]}"))
        else:
            groups.append((offset[g[0]] + 1, g[1]))
            labels.append(P.labels[i])
        cols.append(vec)
    row_labels = list(P.row_labels)
    for i, j in blocks:
        sub = subprograms[j]
        for i2, g2 in enumerate(sub.groups):
            vec = np.zeros(dim)
            vec[block_start[i]:block_start[i] + sub.dim] = sub.matrix[:, i2]
            cols.append(vec)
            groups.append(None if g2 is None else (offset[j] + g2[0], g2[1]))
            labels.append(sub.labels[i2])
        row_labels += list(sub.row_labels)
    matrix = np.column_stack(cols) if cols else np.zeros((dim, 0))
    return SpanProgram(target, matrix, groups, new_n, labels, row_labels)


# ---------------------------------------------------------------------------
# checkpoints


@dataclass
class Segment:
    """A checkpointed path: gates root end first, plus its J+1 inputs listed
    from the leaf end (each a formula vertex: a leaf or another segment's top)."""

    gates: list[int]
    inputs: list[int]
    product: float
    small: bool

    @property
    def top(self) -> int:
        return self.gates[0]


@dataclass
class CheckpointedFormula:
    base: BinaryFormula
    marked_edges: set[tuple[int, int]]
    step1_paths: list[list[int]]
    small_set: set[int]
    segments: list[Segment]
    segment_of_top: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.segment_of_top = {s.top: k for k, s in enumerate(self.segments)}

    @property
    def root_segment(self) -> int:
        return self.segment_of_top[0]

    @property
    def paths(self) -> list[list[int]]:
        return [s.gates for s in self.segments]

    @property
    def path_products(self) -> list[float]:
        return [s.product for s in self.segments]

    def internal_checkpoints(self) -> list[tuple[int, int]]:
        return sorted((p, c) for p, c in self.marked_edges if not self.base.is_leaf(c))

    def path_gates(self, k: int) -> list[PathGate]:
        f = self.base
        return [PathGate(f.kind[v], f.s1(v), f.s2(v)) for v in self.segments[k].gates]

    def size(self, k: int) -> int:
        """s_{v'}: number of formula inputs below segment ``k``."""
        return self.base.size[self.segments[k].top]

    def child_segments(self, k: int) -> list[int | None]:
        """Per input of segment ``k``: the child segment, or None for a leaf."""
        return [None if self.base.is_leaf(u) else self.segment_of_top[u]
                for u in self.segments[k].inputs]

    def evaluate(self, x: Sequence[int], k: int | None = None) -> int:
        """Evaluate through the super-formula of segments (each a chain gate)."""
        f = self.base
        seg = self.segments[self.root_segment if k is None else k]
        vals = []
        for u, child in zip(seg.inputs, self.child_segments(self.segments.index(seg))):
            vals.append(int(x[f.leaf_index[u] - 1]) if child is None else self.evaluate(x, child))
        acc = vals[0]
        for i, v in enumerate(reversed(seg.gates)):
            b = vals[i + 1]
            acc = (acc & b) if f.kind[v] == AND else (acc | b)
        return acc

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v, "kind": self.base.kind[v], "index": self.base.leaf_index[v],
                          "size": self.base.size[v]} for v in range(len(self.base))],
            "marked_edges": sorted([list(e) for e in self.marked_edges]),
            "paths": [s.gates for s in self.segments],
            "path_inputs": [s.inputs for s in self.segments],
            "path_products": [s.product for s in self.segments],
            "small": [s.small for s in self.segments],
            "small_set": sorted(self.small_set),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def gate_factor_log(f: BinaryFormula, v: int) -> float:
    s1, s2 = f.s1(v), f.s2(v)
    return 0.5 * math.log((math.sqrt(s1) + math.sqrt(s2)) / math.sqrt(s1 + s2))


def place_checkpoints(f: BinaryFormula, every_gate: bool = False) -> CheckpointedFormula:
    """Mark the edge to the smaller child at every gate, then split each
    resulting path (walking up from its leaf end) right after the product of
    gate factors first exceeds sqrt(e).

    With ``every_gate`` all internal edges are marked, giving single-gate
    segments (gate-by-gate direct-sum composition).
    """
    marked = set()
    for v in f.gates():
        marked.add((v, f.children[v][1]))
    tops = [0] + [f.children[v][1] for v in f.gates() if not f.is_leaf(f.children[v][1])]
    if f.is_leaf(0):
        raise CompositionError("a single leaf has no gates to compose")
    step1 = []
    for u in sorted(tops):
        path = [u]
        while not f.is_leaf(f.children[path[-1]][0]):
            path.append(f.children[path[-1]][0])
        step1.append(path)
    small_set = set(tops)

    segments = []
    for path in step1:
        if every_gate:
            for v in path:
                if v != path[0]:
                    marked.add((f.parent[v], v))
                segments.append([v])
            continue
        cur, logp = [], 0.0
        for v in reversed(path):
            cur.append(v)
            logp += gate_factor_log(f, v)
            if logp > SEGMENT_LOG_THRESHOLD:
                if v != path[0]:
                    marked.add((f.parent[v], v))
                segments.append(list(reversed(cur)))
                cur, logp = [], 0.0
        if cur:
            segments.append(list(reversed(cur)))

    segs = []
    for gates in segments:
        bottom = gates[-1]
        inputs = [f.children[bottom][0], f.children[bottom][1]]
        inputs += [f.children[v][1] for v in reversed(gates[:-1])]
        prod = math.exp(sum(gate_factor_log(f, v) for v in gates))
        segs.append(Segment(gates, inputs, prod, gates[0] in small_set))
    segs.sort(key=lambda s: s.top)
    return CheckpointedFormula(f, marked, step1, small_set, segs)


# ---------------------------------------------------------------------------
# whole-formula builders


def gate_program(f: BinaryFormula, v: int) -> SpanProgram:
    return primitive_gate_program(f.kind[v], f.s1(v), f.s2(v))


def tensor_only_program(f: BinaryFormula, cap: int = DEFAULT_CERTIFICATE_CAP,
                        order: str = "preorder") -> SpanProgram:
    """Reduced tensor-product composition over the whole formula, from the
    root toward the leaves. ``order`` picks the next input to expand
    (``"preorder"``: leftmost gate; ``"reverse"``: rightmost gate)."""
    count = count_maximal_false(f)
    if count > cap:
        raise CapExceeded(f"{count} maximal false inputs exceed cap {cap}")
    if f.is_leaf(0):
        return identity_program()
    P = gate_program(f, 0)
    inputs = list(f.children[0])
    while True:
        pending = [p for p, u in enumerate(inputs) if not f.is_leaf(u)]
        if not pending:
            break
        p = pending[0] if order == "preorder" else pending[-1]
        u = inputs[p]
        P = reduced_tensor_compose(P, gate_program(f, u), p + 1)
        inputs[p:p + 1] = list(f.children[u])
    P = P.permute_inputs([f.leaf_index[u] for u in inputs])
    return canonical_rows(_sort_columns(P))


def identity_program() -> SpanProgram:
    """The single-leaf program: t = (1), one vector (1) on x1."""
    return SpanProgram([1.0], [[1.0]], [(1, 1)], 1, row_labels=["0"])


def certificate_program(f: BinaryFormula, cap: int = DEFAULT_CERTIFICATE_CAP) -> SpanProgram:
    """The tensor-only program written down directly from the false subtrees
    of the maximal false inputs (one row per maximal false input)."""
    U = maximal_false_inputs(f, cap)
    gates = f.gates()
    params = {v: GateParams(f.s1(v), f.s2(v)) for v in gates}

    def path_to_root(k: int) -> dict[int, int]:
        v, out = f.leaf_vertex[k], {}
        while f.parent[v] is not None:
            p = f.parent[v]
            out[p] = 1 if f.children[p][0] == v else 2
            v = p
        return out

    paths = {k: path_to_root(k) for k in range(1, f.n + 1)}
    target = np.zeros(len(U))
    A = np.zeros((len(U), f.n))
    for r, x in enumerate(U):
        T = false_subtree(f, x)
        for col in [None] + list(range(1, f.n + 1)):
            if col is not None and x[col - 1] == 1:
                continue
            gk = paths[col] if col is not None else {}
            val = 1.0
            for v in gates:
                p, kind = params[v], f.kind[v]
                if v in gk:
                    val *= p.e(gk[v]) if kind == OR else 1.0
                elif v in T.vertices:
                    val *= p.a(T.branch[v]) if kind == AND else 1.0
                else:
                    val *= p.alpha if kind == AND else 1.0
            if col is None:
                target[r] = val
            else:
                A[r, col - 1] = val
    labels = ["".join(map(str, x)) for x in U]
    return SpanProgram(target, A, [(k, 1) for k in range(1, f.n + 1)], f.n, row_labels=labels)


@dataclass
class HybridBuild:
    """A program composed from segment programs, with the intermediate
    per-segment and per-subtree programs kept for analysis.

    ``subtree[k]`` is the program for the sub-formula rooted at segment ``k``
    with inputs numbered by ``subtree_leaves[k]`` (formula leaf indices).
    """

    formula: BinaryFormula
    checkpoints: CheckpointedFormula
    path_programs: dict[int, PathProgram]
    subtree: dict[int, SpanProgram]
    subtree_leaves: dict[int, list[int]]
    program: SpanProgram


def _segment_row_labels(cp: CheckpointedFormula, k: int, pp: PathProgram) -> list[str]:
    f = cp.base
    seg = cp.segments[k]
    keyed = []
    for pos, u in enumerate(seg.inputs):
        leaves = f.leaves_under(u)
        keyed.append((min(leaves), pos, not f.is_leaf(u)))
    keyed.sort()
    out = []
    for lab in pp.program.row_labels:
        out.append("".join(lab[pos] + ("_c" if is_cp else "") for _, pos, is_cp in keyed))
    return out


def build_segmented(f: BinaryFormula, cp: CheckpointedFormula, cross_check: bool = True) -> HybridBuild:
    path_programs, subtree, leaves_of = {}, {}, {}
    for k in range(len(cp.segments)):
        gates = cp.path_gates(k)
        pp = compose_path_closed_form(gates)
        if cross_check:
            it = compose_path_iterative(gates)
            if not (np.allclose(it.program.matrix, pp.program.matrix, rtol=0, atol=1e-9)
                    and np.allclose(it.program.target, pp.program.target, rtol=0, atol=1e-9)):
                raise CompositionError(f"closed-form and iterative path programs differ on segment {k}")
        pp.program.row_labels = _segment_row_labels(cp, k, pp)
        for pos, u in enumerate(cp.segments[k].inputs):
            pp.program.labels[pos] = (f"x{f.leaf_index[u]}" if f.is_leaf(u)
                                      else f"c{min(f.leaves_under(u))}")
        pp.program = canonical_rows(pp.program)
        path_programs[k] = pp

    for k in sorted(range(len(cp.segments)), key=lambda k: -cp.segments[k].top):
        pp = path_programs[k]
        subs, labels, leaves = {}, {}, []
        for pos, child in enumerate(cp.child_segments(k)):
            u = cp.segments[k].inputs[pos]
            if child is None:
                leaves.append(f.leaf_index[u])
            else:
                subs[pos + 1] = subtree[child]
                labels[pos + 1] = f"c{min(f.leaves_under(u))}"
                leaves += leaves_of[child]
        subtree[k] = direct_sum_compose(pp.program, subs, labels)
        leaves_of[k] = leaves

    root = cp.root_segment
    P = subtree[root].permute_inputs(leaves_of[root])
    P = _sort_columns(P)
    return HybridBuild(f, cp, path_programs, subtree, leaves_of, P)


def _sort_columns(P: SpanProgram) -> SpanProgram:
    def key(i: int):
        g = P.groups[i]
        if g is not None:
            return (g[0], 1, i)
        lab = P.labels[i]
        if lab.startswith("c") and lab[1:].isdigit():
            return (int(lab[1:]), 0, i)
        return (0, 0, i)

    perm = sorted(range(P.ncols), key=key)
    return SpanProgram(P.target.copy(), P.matrix[:, perm], [P.groups[i] for i in perm], P.n,
                       [P.labels[i] for i in perm], list(P.row_labels))


def build_hybrid(f: BinaryFormula, cross_check: bool = True) -> HybridBuild:
    return build_segmented(f, place_checkpoints(f), cross_check)


def build_direct_sum_only(f: BinaryFormula) -> HybridBuild:
    return build_segmented(f, place_checkpoints(f, every_gate=True), cross_check=False)


def build_program(f: BinaryFormula, strategy: str = "hybrid",
                  cap: int = DEFAULT_CERTIFICATE_CAP) -> SpanProgram:
    if f.is_leaf(0):
        return identity_program()
    if strategy == "hybrid":
        return build_hybrid(f).program
    if strategy == "tensor_only":
        return tensor_only_program(f, cap)
    if strategy == "direct_sum_only":
        return build_direct_sum_only(f).program
    raise CompositionError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# full-witness composition bound


@dataclass
class CompositionBound:
    value: int
    lhs: float
    rhs: float
    sigma: float
    holds: bool


def composition_bound_check(P: SpanProgram, subprograms: dict[int, SpanProgram], x: Sequence[int],
                            sub_worst: dict[int, WorstCase] | None = None,
                            composed: SpanProgram | None = None, tol: float = 1e-8) -> CompositionBound:
    """Evaluate both sides of the full-witness-size composition inequality at
    input ``x`` of the direct-sum composition (uniform unit costs).

    ``sub_worst`` may supply precomputed worst-case witness sizes of the
    sub-programs; otherwise they are computed over all sub-inputs. Each
    sub-program's ratio is taken at least as large as its full witness size
    on the actual sub-input, so a sampled worst case cannot understate it.
    """
    Q = composed if composed is not None else direct_sum_compose(P, subprograms)
    if len(x) != Q.n:
        raise SpanProgramError("input length mismatch")
    sub_worst = dict(sub_worst or {})
    y, r, ratio = [], np.ones(P.n), {}
    pos = 0
    for j in range(1, P.n + 1):
        if j in subprograms:
            sub = subprograms[j]
            xj = x[pos:pos + sub.n]
            pos += sub.n
            if j not in sub_worst:
                sub_worst[j] = worst_case_report(sub)
            wc = sub_worst[j]
            rep = witness_report(sub, xj)
            y.append(rep.value)
            r[j - 1] = wc.wsize
            ratio[j] = max(wc.full_wsize, rep.full_wsize) / wc.wsize
        else:
            y.append(int(x[pos]))
            pos += 1
    outer = witness_report(P, y, r)
    lhs = witness_report(Q, x).full_wsize / outer.wsize
    if outer.value:
        w = outer.witness
        support = [j for j in ratio if y[j - 1] == 1
                   and any(abs(w[i]) > 1e-12 for i in P.columns_of(j, 1))]
        sigma = max((ratio[j] for j in support), default=1.0)
        free = sum(w[i] ** 2 for i in P.free_columns())
        rhs = sigma + (1.0 + free) / outer.wsize
    else:
        wp = outer.witness
        overlaps = P.matrix.T @ wp
        support = [j for j in ratio if y[j - 1] == 0
                   and any(abs(overlaps[i]) > 1e-12 for i in P.columns_of(j, 1))]
        sigma = max((ratio[j] for j in support), default=1.0)
        rhs = sigma + float(wp @ wp) / outer.wsize
    return CompositionBound(outer.value, lhs, rhs, sigma, lhs <= rhs + tol)
