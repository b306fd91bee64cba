"""Evaluation graphs of span programs and their spectra.

The graph of a program is bipartite: the output vertex and one vertex per
column on one side, one vertex per row of V on the other, with edge weights
from ``B = (t A)``. An input ``x`` attaches a unit dangling edge to every
input column with ``x_j = 0``. Because the graph is bipartite, the spectrum
is read off the singular values of the side-1 x side-2 weight block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .formula import BinaryFormula
from .span import SpanProgram, worst_case_report

KERNEL_TOL = 1e-10  # relative to the largest singular value
OVERLAP_TOL = 1e-9
DEFAULT_VERTEX_CAP = 4000

LAMBDA = math.sqrt(2) * math.e
KAPPA = (1 + 1 / math.sqrt(2)) * LAMBDA / math.log(2)
NORM_BOUND = 2 * (2 * math.sqrt(2) * math.e + 1)
PATH_B_BOUND = 2 * math.sqrt(2) * math.e


class GraphError(ValueError):
    pass


@dataclass
class EvaluationGraph:
    """Weighted bipartite graph. ``weights`` is the side-1 x side-2 block;
    ``side1``/``side2`` hold vertex ids, ``roles``/``labels`` are per vertex id."""

    roles: list[str]
    labels: list[str]
    side1: list[int]
    side2: list[int]
    weights: np.ndarray
    n: int
    output: int = 0
    column_input: dict[int, int] = field(default_factory=dict)  # vertex -> input j
    tail: int | None = None

    @property
    def vertex_count(self) -> int:
        return len(self.roles)

    def adjacency(self) -> np.ndarray:
        N = self.vertex_count
        A = np.zeros((N, N))
        A[np.ix_(self.side1, self.side2)] = self.weights
        A[np.ix_(self.side2, self.side1)] = self.weights.T
        return A

    def edges(self) -> list[tuple[int, int, float]]:
        out = []
        for a, b in zip(*np.nonzero(self.weights)):
            u, v = self.side1[a], self.side2[b]
            out.append((min(u, v), max(u, v), float(self.weights[a, b])))
        return sorted(out)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=int)
        nz = self.weights != 0
        deg[self.side1] += nz.sum(axis=1)
        deg[self.side2] += nz.sum(axis=0)
        return deg

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v, "role": r, "label": l}
                         for v, (r, l) in enumerate(zip(self.roles, self.labels))],
            "edges": [{"u": u, "v": v, "w": w} for u, v, w in self.edges()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_dot(self) -> str:
        shapes = {"output": "doublecircle", "row": "box", "leaf-input": "circle",
                  "checkpoint": "diamond", "free": "diamond", "dangling": "point",
                  "output-tail": "point"}
        lines = ["graph G {"]
        for v, (r, l) in enumerate(zip(self.roles, self.labels)):
            lines.append(f'  v{v} [label="{l}", shape={shapes.get(r, "ellipse")}];')
        for u, v, w in self.edges():
            lines.append(f'  v{u} -- v{v} [label="{w:.6g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(P: SpanProgram) -> EvaluationGraph:
    """Graph with biadjacency ``(t A)``; no dangling edges (input 1^n)."""
    roles, labels, side1, side2 = ["output"], ["0"], [0], []
    column_input = {}
    for i, g in enumerate(P.groups):
        v = len(roles)
        if g is None:
            roles.append("checkpoint" if P.labels[i].startswith("c") else "free")
        else:
            roles.append("leaf-input")
            column_input[v] = g[0]
        labels.append(P.labels[i])
        side1.append(v)
    for r in range(P.dim):
        side2.append(len(roles))
        roles.append("row")
        labels.append(P.row_labels[r])
    W = P.biadjacency().T.copy()  # side1 (output, columns) x side2 (rows)
    return EvaluationGraph(roles, labels, side1, side2, W, P.n, 0, column_input)


def apply_input(G: EvaluationGraph, x: Sequence[int], with_output_tail: bool = False,
                tail_weight: float = 1.0) -> EvaluationGraph:
    """Attach a unit dangling vertex to every input column with ``x_j = 0``,
    and optionally a tail vertex at the output."""
    if len(x) != G.n:
        raise GraphError(f"input has length {len(x)}, graph has n={G.n}")
    roles, labels = list(G.roles), list(G.labels)
    side2 = list(G.side2)
    extra = []
    for v in G.side1:
        j = G.column_input.get(v)
        if j is not None and not x[j - 1]:
            extra.append((v, 1.0))
            side2.append(len(roles))
            roles.append("dangling")
            labels.append(f"d{j}")
    tail = None
    if with_output_tail:
        extra.append((G.output, tail_weight))
        tail = len(roles)
        side2.append(tail)
        roles.append("output-tail")
        labels.append("tail")
    W = np.zeros((len(G.side1), len(side2)))
    W[:, :G.weights.shape[1]] = G.weights
    pos = {v: a for a, v in enumerate(G.side1)}
    for k, (v, w) in enumerate(extra):
        W[pos[v], G.weights.shape[1] + k] = w
    return EvaluationGraph(roles, labels, list(G.side1), side2, W, G.n, G.output,
                           dict(G.column_input), tail)


@dataclass
class SpectralReport:
    norm_abs: float
    max_degree: int
    vertex_count: int
    kernel_dim: int
    kernel_output_overlap: float
    spectral_gap: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _check_cap(G: EvaluationGraph, cap: int) -> None:
    if G.vertex_count > cap:
        raise GraphError(f"graph has {G.vertex_count} vertices, cap is {cap}")


def spectral_report(G: EvaluationGraph, cap: int = DEFAULT_VERTEX_CAP) -> SpectralReport:
    """Norm, degree, kernel and gap of ``G``.

    The overlap is measured on the output vertex, or on the tail vertex when
    the graph has one (the tail then acts as the root).
    """
    _check_cap(G, cap)
    W = G.weights
    U, sv, Vt = np.linalg.svd(W, full_matrices=True)
    smax = float(sv[0]) if sv.size else 0.0
    thr = KERNEL_TOL * smax
    rank = int(np.sum(sv > thr))
    kernel_dim = G.vertex_count - 2 * rank
    if G.tail is None:
        e = U[G.side1.index(G.output), rank:]
    else:
        e = Vt[rank:, G.side2.index(G.tail)]
    overlap = float(np.clip(e @ e, 0.0, 1.0))
    gap = float(sv[rank - 1]) if rank else 0.0
    return SpectralReport(smax, int(G.degrees().max()), G.vertex_count, kernel_dim, overlap, gap)


def dense_spectral_report(G: EvaluationGraph, cap: int = DEFAULT_VERTEX_CAP) -> SpectralReport:
    """Same quantities from a full symmetric eigendecomposition (reference path)."""
    _check_cap(G, cap)
    evals, evecs = np.linalg.eigh(G.adjacency())
    norm = float(np.max(np.abs(evals)))
    ker = np.abs(evals) <= KERNEL_TOL * norm
    root = G.output if G.tail is None else G.tail
    overlap = float(np.sum(evecs[root, ker] ** 2))
    nonzero = np.abs(evals[~ker])
    return SpectralReport(norm, int(G.degrees().max()), G.vertex_count, int(ker.sum()),
                          min(overlap, 1.0), float(nonzero.min()) if nonzero.size else 0.0)


def spectral_evaluate(P: SpanProgram, x: Sequence[int], cap: int = DEFAULT_VERTEX_CAP) -> int:
    rep = spectral_report(apply_input(build_graph(P), x), cap)
    return int(rep.kernel_output_overlap > OVERLAP_TOL)


def kernel_overlaps(P: SpanProgram, xs: Iterable[Sequence[int]], with_output_tail: bool = False,
                    tail_weight: float = 1.0) -> np.ndarray:
    """Root kernel overlaps for many inputs at once.

    Every input column gets a dangling vertex whose edge weight is 1 when
    ``x_j = 0`` and 0 otherwise; a zero-weight dangling vertex is isolated and
    does not change the root overlap. This keeps all graphs the same shape so
    the SVDs run as one batch.
    """
    xs = np.asarray(list(xs), dtype=int)
    G = build_graph(P)
    cols = [a for a, v in enumerate(G.side1) if v in G.column_input]
    inputs = [G.column_input[G.side1[a]] for a in cols]
    s1, r = G.weights.shape
    extra = len(cols) + (1 if with_output_tail else 0)
    W = np.zeros((len(xs), s1, r + extra))
    W[:, :, :r] = G.weights
    for k, (a, j) in enumerate(zip(cols, inputs)):
        W[:, a, r + k] = 1 - xs[:, j - 1]
    if with_output_tail:
        W[:, 0, -1] = tail_weight
    U, sv, Vt = np.linalg.svd(W, full_matrices=True)
    thr = KERNEL_TOL * sv[:, :1]
    rank = np.sum(sv > thr, axis=1)
    out = np.empty(len(xs))
    for b in range(len(xs)):
        e = Vt[b, rank[b]:, -1] if with_output_tail else U[b, 0, rank[b]:]
        out[b] = e @ e
    return np.clip(out, 0.0, 1.0)


def spectral_evaluate_all(P: SpanProgram, xs: Iterable[Sequence[int]]) -> np.ndarray:
    return (kernel_overlaps(P, xs) > OVERLAP_TOL).astype(int)


def program_graph(P: SpanProgram) -> EvaluationGraph:
    """``G_P`` with the identity block on input columns (all dangling edges)."""
    return apply_input(build_graph(P), [0] * P.n)


def program_norm(P: SpanProgram) -> float:
    return float(np.linalg.norm(program_graph(P).weights, 2))


def program_max_degree(P: SpanProgram) -> int:
    return int(program_graph(P).degrees().max())


def biadjacency_norm(P: SpanProgram) -> float:
    return float(np.linalg.norm(np.abs(P.biadjacency()), 2))


# ---------------------------------------------------------------------------
# bound verification for the hybrid construction


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    where: str = ""

    def line(self) -> str:
        status = "ok" if self.passed else "VIOLATED"
        where = f" [{self.where}]" if self.where else ""
        return f"{self.name}{where}: {self.value:.6g} <= {self.bound:.6g} {status}"


@dataclass
class BoundsReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def violations(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def _check(name: str, value: float, bound: float, where: str = "", tol: float = 1e-9) -> Check:
    return Check(name, float(value), float(bound), bool(value <= bound + tol), where)


def subtree_inputs(m: int, samples: int, cap: int = 12) -> str | int:
    return "all" if m <= cap else samples


def verify_paper_bounds(f: BinaryFormula, samples: int = 256, seed: int = 0,
                        exhaustive_cap: int = 12, build=None) -> BoundsReport:
    """Check the norm, degree, size-growth and full-witness bounds of the
    hybrid construction on ``f``.

    Worst-case full witness sizes of sub-programs are exact for subformulas
    of at most ``exhaustive_cap`` inputs and sampled (``samples`` inputs plus
    all-zeros and all-ones) above that.
    """
    from .composition import build_hybrid

    hb = build if build is not None else build_hybrid(f)
    cp = hb.checkpoints
    checks = []
    path_norms, path_vertices = [], []
    for k, pp in hb.path_programs.items():
        P = pp.program
        J = len(cp.segments[k].gates)
        path_norms.append(program_norm(P))
        nverts = 1 + P.dim + P.ncols
        path_vertices.append(nverts)
        checks.append(_check("path_biadjacency_norm_sq", biadjacency_norm(P) ** 2, PATH_B_BOUND, f"path {k}"))
        checks.append(_check("path_vertex_count", nverts, 2 * J + 3, f"path {k}"))
        checks.append(_check("path_norm", path_norms[-1], biadjacency_norm(P) ** 2 + 1, f"path {k}"))
    total = program_norm(hb.program)
    checks.append(_check("direct_sum_norm", total, 2 * max(path_norms)))
    checks.append(_check("norm", total, NORM_BOUND))
    checks.append(_check("max_degree", program_max_degree(hb.program), 4 * max(path_vertices)))

    for k, seg in enumerate(cp.segments):
        m = cp.size(k)
        kids = [f.size[u] for u in seg.inputs]
        for j, s in enumerate(kids[1:], start=2):
            checks.append(_check("size_growth_other", s, m / 2, f"path {k} child {j}"))
        if not seg.small:
            checks.append(_check("size_growth_first", kids[0], m - math.sqrt(m / 2), f"path {k}"))
        wc = worst_case_report(hb.subtree[k], inputs=subtree_inputs(m, samples, exhaustive_cap),
                               seed=seed)
        bound = KAPPA * math.log(m) + (LAMBDA / math.sqrt(m) if seg.small else 0.0)
        checks.append(_check("full_witness_recursion", wc.full_wsize / math.sqrt(m), bound, f"path {k}"))
    return BoundsReport(checks)
