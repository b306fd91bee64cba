"""Span programs over real vectors: evaluation and (full) witness size.

A column's ``group`` is ``None`` for a free input vector, or ``(j, b)`` for a
vector available when input bit ``j`` (1-based) equals ``b``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .formula import AND, OR, CapExceeded, all_inputs

SPAN_TOL = 1e-9  # relative residual for t in span
RANK_TOL = 1e-10  # singular values below RANK_TOL * sigma_max are zero
DEFAULT_INPUT_CAP = 2**20


class SpanProgramError(ValueError):
    pass


@dataclass
class SpanProgram:
    target: np.ndarray
    matrix: np.ndarray  # dim x ncols, columns are the input vectors
    groups: list[tuple[int, int] | None]
    n: int
    labels: list[str] = field(default_factory=list)
    row_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float).reshape(-1)
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(self.target.size, -1)
        if not self.labels:
            self.labels = [_default_label(g, i) for i, g in enumerate(self.groups)]
        if not self.row_labels:
            self.row_labels = [str(r) for r in range(self.dim)]
        if self.matrix.shape[1] != len(self.groups) or len(self.labels) != len(self.groups):
            raise SpanProgramError("column count mismatch")
        if len(self.row_labels) != self.dim:
            raise SpanProgramError("row label count mismatch")
        if not np.any(self.target):
            raise SpanProgramError("target vector is zero")
        for g in self.groups:
            if g is not None and not (1 <= g[0] <= self.n and g[1] in (0, 1)):
                raise SpanProgramError(f"bad index set {g}")

    @property
    def dim(self) -> int:
        return self.target.size

    @property
    def ncols(self) -> int:
        return len(self.groups)

    @property
    def is_strict(self) -> bool:
        return all(g is not None for g in self.groups)

    @property
    def is_monotone(self) -> bool:
        return all(g is None or g[1] == 1 for g in self.groups)

    def columns_of(self, j: int, b: int = 1) -> list[int]:
        return [i for i, g in enumerate(self.groups) if g == (j, b)]

    def free_columns(self) -> list[int]:
        return [i for i, g in enumerate(self.groups) if g is None]

    def available(self, x: Sequence[int]) -> np.ndarray:
        """Boolean mask of columns in I(x)."""
        self._check(x)
        return np.array([g is None or int(x[g[0] - 1]) == g[1] for g in self.groups], dtype=bool)

    def biadjacency(self) -> np.ndarray:
        """``(|t> A)``: rows are dimensions, first column is the target."""
        return np.column_stack([self.target, self.matrix])

    def cost_diagonal(self, s: Sequence[float], free_weight: float = 0.0) -> np.ndarray:
        """Diagonal of S (``free_weight=0``) or S^f (``free_weight=1``)."""
        s = np.asarray(s, dtype=float)
        return np.array([free_weight if g is None else math.sqrt(s[g[0] - 1]) for g in self.groups])

    def _check(self, x: Sequence[int]) -> None:
        if len(x) != self.n:
            raise SpanProgramError(f"input has length {len(x)}, program has n={self.n}")

    def permute_inputs(self, order: Sequence[int]) -> "SpanProgram":
        """Renumber inputs: current input ``j`` becomes ``order[j-1]``."""
        groups = [None if g is None else (order[g[0] - 1], g[1]) for g in self.groups]
        labels = [_default_label(new, i) if g is not None and lab == _default_label(g, i) else lab
                  for i, (lab, g, new) in enumerate(zip(self.labels, self.groups, groups))]
        rows = list(self.row_labels)
        if all(len(r) == self.n and set(r) <= {"0", "1"} for r in rows):
            def move(r: str) -> str:
                out = [""] * self.n
                for j, ch in enumerate(r):
                    out[order[j] - 1] = ch
                return "".join(out)
            rows = [move(r) for r in rows]
        return SpanProgram(self.target.copy(), self.matrix.copy(), groups, self.n, labels, rows)

    def reorder_rows(self, perm: Sequence[int]) -> "SpanProgram":
        perm = list(perm)
        return SpanProgram(self.target[perm], self.matrix[perm], list(self.groups), self.n,
                           list(self.labels), [self.row_labels[p] for p in perm])

    def to_dict(self) -> dict:
        cols = []
        for i, g in enumerate(self.groups):
            cols.append({"label": self.labels[i], "set": "free" if g is None else f"{g[0]},{g[1]}",
                         "vector": self.matrix[:, i].tolist()})
        return {"dim": self.dim, "n": self.n, "target": self.target.tolist(), "columns": cols,
                "row_labels": list(self.row_labels)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SpanProgram":
        dim = int(d["dim"])
        groups, labels, vecs = [], [], []
        for c in d["columns"]:
            groups.append(None if c["set"] == "free" else tuple(int(v) for v in c["set"].split(",")))
            labels.append(str(c["label"]))
            vecs.append(c["vector"])
        mat = np.array(vecs, dtype=float).T if vecs else np.zeros((dim, 0))
        return cls(np.array(d["target"], dtype=float), mat.reshape(dim, len(groups)), groups,
                   int(d["n"]), labels, list(d.get("row_labels") or []))

    @classmethod
    def from_json(cls, text: str) -> "SpanProgram":
        return cls.from_dict(json.loads(text))


def _default_label(g, i: int) -> str:
    return f"f{i}" if g is None else f"x{g[0]}" + ("" if g[1] == 1 else "'")


@dataclass(frozen=True)
class GateParams:
    """Weights of the fan-in-two AND/OR programs for subformula sizes s1, s2."""

    s1: float
    s2: float

    @property
    def sp(self) -> float:
        return self.s1 + self.s2

    @property
    def alpha1(self) -> float:
        return (self.s1 / self.sp) ** 0.25

    @property
    def alpha2(self) -> float:
        return (self.s2 / self.sp) ** 0.25

    @property
    def alpha(self) -> float:
        return math.sqrt(self.alpha1**2 + self.alpha2**2)

    beta1 = beta2 = delta = 1.0

    @property
    def eps1(self) -> float:
        return self.alpha1

    @property
    def eps2(self) -> float:
        return self.alpha2

    @property
    def eps(self) -> float:
        return self.alpha

    def a(self, j: int) -> float:
        return self.alpha1 if j == 1 else self.alpha2

    def e(self, j: int) -> float:
        return self.eps1 if j == 1 else self.eps2


def primitive_gate_program(kind: str, s1: float, s2: float) -> SpanProgram:
    if not (s1 > 0 and s2 > 0):
        raise SpanProgramError("gate sizes must be positive")
    p = GateParams(s1, s2)
    if kind == AND:
        return SpanProgram([p.alpha1, p.alpha2], [[p.beta1, 0.0], [0.0, p.beta2]],
                           [(1, 1), (2, 1)], 2, row_labels=["01", "10"])
    if kind == OR:
        return SpanProgram([p.delta], [[p.eps1, p.eps2]], [(1, 1), (2, 1)], 2, row_labels=["00"])
    raise SpanProgramError(f"unknown gate kind {kind!r}")


def _svd_range(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of range(M) and its orthogonal complement."""
    d = M.shape[0]
    if M.shape[1] == 0:
        return np.zeros((d, 0)), np.eye(d)
    U, sv, _ = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    return U[:, :rank], U[:, rank:]


def _in_span(M: np.ndarray, t: np.ndarray) -> bool:
    Q, _ = _svd_range(M)
    resid = t - Q @ (Q.T @ t)
    return np.linalg.norm(resid) <= SPAN_TOL * np.linalg.norm(t)


def eval_span(P: SpanProgram, x: Sequence[int]) -> int:
    return int(_in_span(P.matrix[:, P.available(x)], P.target))


def _pinv(M: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(M, rcond=RANK_TOL) if M.size else M.T


def weighted_min_norm(A: np.ndarray, t: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize sum_i c_i^2 w_i^2 subject to A w = t.

    Columns with ``c_i = 0`` are unpenalized: the constraint is projected onto
    the orthogonal complement of their range, the weighted part is solved by
    pseudoinverse, and the free part takes the minimum-norm completion.
    """
    zero = c == 0
    AF, AW = A[:, zero], A[:, ~zero]
    _, perp = _svd_range(AF)
    M = perp.T @ (AW / c[~zero])
    rhs = perp.T @ t
    u = _pinv(M) @ rhs
    if np.linalg.norm(M @ u - rhs) > 1e-7 * max(1.0, np.linalg.norm(t)):
        raise SpanProgramError("true-side system is infeasible")
    w = np.zeros(A.shape[1])
    w[~zero] = u / c[~zero]
    if AF.shape[1]:
        w[zero] = _pinv(AF) @ (t - AW @ w[~zero])
    return w, float(u @ u)


def min_quadratic_on_hyperplane(Q: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize y^T Q y subject to b.y = 1, for positive semidefinite Q."""
    lam, V = np.linalg.eigh(Q)
    scale = max(lam[-1] if lam.size else 0.0, 1.0)
    null = lam <= RANK_TOL * scale
    bn = V[:, null].T @ b
    if np.linalg.norm(bn) > 1e-9 * np.linalg.norm(b):
        y = V[:, null] @ bn / (bn @ bn)
        return y, 0.0
    bp = V[:, ~null].T @ b
    z = bp / lam[~null]
    denom = float(bp @ z)
    return V[:, ~null] @ z / denom, 1.0 / denom


@dataclass
class WitnessReport:
    value: int
    wsize: float
    full_wsize: float
    witness: np.ndarray  # |w> in R^I when value=1, |w'> in V when value=0
    full_witness: np.ndarray


def witness_report(P: SpanProgram, x: Sequence[int], s: Sequence[float] | None = None) -> WitnessReport:
    """Witness size and full witness size of ``P`` on ``x`` with costs ``s``."""
    s = np.ones(P.n) if s is None else np.asarray(s, dtype=float)
    if s.size != P.n or np.any(s < 0):
        raise SpanProgramError("costs must be nonnegative with one entry per input")
    avail = P.available(x)
    A = P.matrix
    value = eval_span(P, x)
    if value:
        Aav = A[:, avail]
        w_avail, ws = weighted_min_norm(Aav, P.target, P.cost_diagonal(s, 0.0)[avail])
        wf_avail, wf = weighted_min_norm(Aav, P.target, P.cost_diagonal(s, 1.0)[avail])
        w = np.zeros(P.ncols)
        w[avail] = w_avail
        wfull = np.zeros(P.ncols)
        wfull[avail] = wf_avail
        return WitnessReport(1, ws, 1.0 + wf, w, wfull)
    _, N = _svd_range(A[:, avail])
    b = N.T @ P.target
    if np.linalg.norm(b) == 0:
        raise SpanProgramError("false-side system is infeasible")
    AS = A * P.cost_diagonal(s, 0.0)
    Q = N.T @ AS @ AS.T @ N
    y, ws = min_quadratic_on_hyperplane(Q, b)
    yf, wf = min_quadratic_on_hyperplane(Q + np.eye(Q.shape[0]), b)
    return WitnessReport(0, ws, wf, N @ y, N @ yf)


def true_objective(P: SpanProgram, w: np.ndarray, s: Sequence[float], full: bool = False) -> float:
    d = P.cost_diagonal(s, 1.0 if full else 0.0)
    return float(np.sum((d * w) ** 2)) + (1.0 if full else 0.0)


def false_objective(P: SpanProgram, wp: np.ndarray, s: Sequence[float], full: bool = False) -> float:
    d = P.cost_diagonal(s, 0.0)
    val = float(np.sum((d * (P.matrix.T @ wp)) ** 2))
    return val + (float(wp @ wp) if full else 0.0)


@dataclass
class WorstCase:
    wsize: float
    full_wsize: float
    argmax_wsize: tuple[int, ...]
    argmax_full: tuple[int, ...]
    inputs_checked: int


def input_set(n: int, inputs: str | int = "all", seed: int = 0,
              cap: int = DEFAULT_INPUT_CAP) -> list[tuple[int, ...]]:
    """``"all"`` inputs, or ``k`` seeded random inputs plus 0^n and 1^n.

    When ``inputs="all"`` and ``2^n`` exceeds ``cap``, raises CapExceeded.
    """
    if inputs == "all":
        if 2**n > cap:
            raise CapExceeded(f"2^{n} inputs exceed cap {cap}")
        return list(all_inputs(n))
    k = int(inputs)
    if 2**n <= k + 2:
        return list(all_inputs(n))
    rng = np.random.default_rng(seed)
    out = [tuple([0] * n), tuple([1] * n)]
    seen = set(out)
    while len(out) < k + 2:
        x = tuple(int(b) for b in rng.integers(0, 2, size=n))
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def worst_case_report(P: SpanProgram, s: Sequence[float] | None = None,
                      inputs: str | int | Iterable[Sequence[int]] = "all", seed: int = 0,
                      cap: int = DEFAULT_INPUT_CAP) -> WorstCase:
    """Maxima of witness size and full witness size over a set of inputs.

    ``inputs`` is ``"all"``, a sample count, or an explicit iterable of inputs.
    """
    if isinstance(inputs, (str, int)):
        xs = input_set(P.n, inputs, seed, cap)
    else:
        xs = [tuple(x) for x in inputs]
    best = WorstCase(-1.0, -1.0, (), (), 0)
    for x in xs:
        r = witness_report(P, x, s)
        best.inputs_checked += 1
        if r.wsize > best.wsize:
            best.wsize, best.argmax_wsize = r.wsize, tuple(x)
        if r.full_wsize > best.full_wsize:
            best.full_wsize, best.argmax_full = r.full_wsize, tuple(x)
    return best
