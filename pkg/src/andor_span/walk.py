"""Desk-scale simulation of phase estimation on a Szegedy-type walk.

The walk lives on the edge space of the base graph ``H`` (the program graph
with every dangling edge present plus a weighted tail at the output), with
one private slack coordinate per vertex. Star states use the Perron vector
of ``H``; on the input graph ``G(x)``, a subgraph of ``H``, the weight of
missing edges moves to the slack coordinate, so every star stays a unit
vector. The overlap matrix between the two classes of stars is then exactly
``W(x) / ||A_H||``, where ``W(x)`` is the side-1 x side-2 weight block.

``U = -R_B R_A``. A singular value ``sigma`` of ``W(x)/||A_H||`` yields the
eigenphases ``+-2 arcsin(sigma)``, so kernel vectors of ``G(x)`` sit at
phase 0. The walk starts on the tail star. Phase 0 is seen with
substantial probability iff the tail (the new root) carries kernel support,
which happens iff the formula is false.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .graph import DEFAULT_VERTEX_CAP, EvaluationGraph, GraphError, apply_input, build_graph
from .span import SpanProgram, eval_span, worst_case_report

DEFAULT_PRECISION_CONSTANT = 10.0
DEFAULT_TAIL_CONSTANT = 8.0
DEFAULT_SHOTS = 200


def fejer(M: int, phase: np.ndarray) -> np.ndarray:
    """Probability of outcome 0 when phase estimation with ``M`` controlled
    applications meets eigenphase ``phase``."""
    phase = np.asarray(phase, dtype=float)
    half = np.sin(phase / 2)
    out = np.ones_like(phase)
    nz = np.abs(half) > 1e-15
    out[nz] = (np.sin(M * phase[nz] / 2) / (M * half[nz])) ** 2
    return out


@dataclass
class WalkOperator:
    """Explicit walk unitary. ``charged`` marks coordinates whose star
    amplitudes depend on the input (edges at input columns and dangling
    vertices, plus their slacks)."""

    unitary: np.ndarray
    charged: np.ndarray
    star_a: np.ndarray  # columns: stars of side-1 vertices
    star_b: np.ndarray  # columns: stars of side-2 vertices
    graph: EvaluationGraph

    def unitarity_error(self) -> float:
        U = self.unitary
        return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def _perron(W: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    U, sv, Vt = np.linalg.svd(W)
    a, b = np.abs(U[:, 0]), np.abs(Vt[0])
    return float(sv[0]), a, b


def _key(G: EvaluationGraph, v: int) -> tuple:
    # dangling and tail ids depend on the input; rows and columns do not
    if G.roles[v] in ("dangling", "output-tail"):
        return (G.roles[v], G.labels[v])
    return ("id", v)


def build_walk(G: EvaluationGraph, base: EvaluationGraph | None = None) -> WalkOperator:
    """Walk on ``G`` with stars normalized against ``base`` (default: ``G``).

    ``base`` must contain ``G`` as a weighted subgraph on the same vertex
    ids; the edge coordinates are those of ``base``.
    """
    H = base if base is not None else G
    if G.vertex_count > DEFAULT_VERTEX_CAP:
        raise GraphError(f"graph has {G.vertex_count} vertices, cap is {DEFAULT_VERTEX_CAP}")
    WH = np.zeros((len(H.side1), len(H.side2)))
    WH[:] = H.weights
    pos2 = {_key(H, v): b for b, v in enumerate(H.side2)}
    WG = np.zeros_like(WH)
    for b, v in enumerate(G.side2):
        if _key(G, v) not in pos2:
            raise GraphError("input graph has a vertex missing from the base graph")
        WG[:, pos2[_key(G, v)]] = G.weights[:, b]
    if np.any(WG > WH + 1e-12) or np.any(WG < 0):
        raise GraphError("input graph is not a nonnegative subgraph of the base graph")
    norm, da, db = _perron(WH)
    if np.any(da <= 1e-14) or np.any(db <= 1e-14):
        raise GraphError("base graph has isolated or disconnected vertices")
    edges = list(zip(*np.nonzero(WH)))
    n1, n2, E = len(H.side1), len(H.side2), len(edges)
    dim = E + n1 + n2
    SA = np.zeros((dim, n1))
    SB = np.zeros((dim, n2))
    for e, (a, b) in enumerate(edges):
        w = WG[a, b]
        SA[e, a] = math.sqrt(w * db[b] / (norm * da[a]))
        SB[e, b] = math.sqrt(w * da[a] / (norm * db[b]))
    for a in range(n1):
        SA[E + a, a] = math.sqrt(max(0.0, 1.0 - SA[:E, a] @ SA[:E, a]))
    for b in range(n2):
        SB[E + n1 + b, b] = math.sqrt(max(0.0, 1.0 - SB[:E, b] @ SB[:E, b]))
    RA = 2 * SA @ SA.T - np.eye(dim)
    RB = 2 * SB @ SB.T - np.eye(dim)
    charged = np.zeros(dim, dtype=bool)
    input_side1 = {a for a, v in enumerate(H.side1) if v in H.column_input}
    dangling = {b for b, v in enumerate(H.side2) if H.roles[v] == "dangling"}
    for e, (a, b) in enumerate(edges):
        charged[e] = a in input_side1 or b in dangling
    for a in input_side1:
        charged[E + a] = True
    for b in dangling:
        charged[E + n1 + b] = True
    return WalkOperator(-RB @ RA, charged, SA, SB, G)


def phase_zero_probability_explicit(op: WalkOperator, start: np.ndarray, M: int) -> float:
    """P(outcome 0) from a Schur decomposition of the explicit unitary."""
    T, Z = linalg.schur(op.unitary.astype(complex), output="complex")
    coeff = Z.conj().T @ start
    phases = np.angle(np.diag(T))
    return float(np.sum(np.abs(coeff) ** 2 * fejer(M, phases)))


def phase_zero_probability(W: np.ndarray, norm: float, tail_index: int, M: int) -> float:
    """P(outcome 0) starting on the star of side-2 vertex ``tail_index``,
    from the singular values of ``W / norm``."""
    U, sv, Vt = np.linalg.svd(W / norm, full_matrices=True)
    coeff = np.zeros(Vt.shape[0])
    coeff[:] = Vt[:, tail_index] ** 2
    sig = np.zeros(Vt.shape[0])
    sig[:sv.size] = np.clip(sv, 0.0, 1.0)
    phases = 2 * np.arcsin(sig)
    return float(np.sum(coeff * fejer(M, phases)))


@dataclass
class WalkSetup:
    """Input-independent part of the simulation for one program."""

    program: SpanProgram
    full_wsize: float
    tail_weight: float
    norm: float
    applications: int
    precision: float
    base: EvaluationGraph


def prepare_walk(P: SpanProgram, precision_constant: float = DEFAULT_PRECISION_CONSTANT,
                 tail_constant: float = DEFAULT_TAIL_CONSTANT, full_wsize: float | None = None,
                 samples: int = 4096, seed: int = 0) -> WalkSetup:
    """Tail weight ``1/sqrt(c W)`` and ``M = ceil(C W ||A_H||)`` applications,
    where ``W`` is the worst-case full witness size (exact for n <= 12,
    sampled above)."""
    if full_wsize is None:
        inputs = "all" if P.n <= 12 else samples
        full_wsize = worst_case_report(P, inputs=inputs, seed=seed).full_wsize
    tail_weight = 1.0 / math.sqrt(tail_constant * full_wsize)
    base = apply_input(build_graph(P), [0] * P.n, with_output_tail=True, tail_weight=tail_weight)
    norm = float(np.linalg.norm(base.weights, 2))
    M = max(1, math.ceil(precision_constant * full_wsize * norm))
    return WalkSetup(P, full_wsize, tail_weight, norm, M, 1.0 / M, base)


def _input_weights(setup: WalkSetup, x: Sequence[int]) -> np.ndarray:
    """``W(x)`` on the base graph's vertex set (absent dangling edges zeroed)."""
    H = setup.base
    W = H.weights.copy()
    for b, v in enumerate(H.side2):
        if H.roles[v] == "dangling":
            j = int(H.labels[v][1:])
            if x[j - 1]:
                W[:, b] = 0.0
    return W


def detection_probability(setup: WalkSetup, x: Sequence[int]) -> float:
    W = _input_weights(setup, x)
    return phase_zero_probability(W, setup.norm, setup.base.side2.index(setup.base.tail),
                                  setup.applications)


@dataclass
class SimulationResult:
    decision: int
    repetitions: int
    empirical_error: float
    queries_used: int
    precision: float
    shots: int
    error_probability: float
    error_upper_95: float
    detect_probability: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def clopper_pearson_upper(errors: int, shots: int, level: float = 0.95) -> float:
    if errors >= shots:
        return 1.0
    return float(stats.beta.ppf(level, errors + 1, shots - errors))


def simulate_evaluation(P: SpanProgram, x: Sequence[int], expected: int | None = None,
                        precision_constant: float = DEFAULT_PRECISION_CONSTANT,
                        tail_constant: float = DEFAULT_TAIL_CONSTANT, shots: int = DEFAULT_SHOTS,
                        repetitions: int = 1, seed: int = 0,
                        setup: WalkSetup | None = None) -> SimulationResult:
    """Sample ``shots`` runs of the evaluation algorithm on input ``x``.

    One run is ``repetitions`` independent phase estimations with a majority
    vote; each phase estimation reads outcome 0 as "false". ``expected``
    defaults to the span-program value and is what errors are scored against.
    """
    if repetitions < 1 or repetitions % 2 == 0:
        raise ValueError("repetitions must be a positive odd number")
    if setup is None:
        setup = prepare_walk(P, precision_constant, tail_constant, seed=seed)
    truth = eval_span(P, x) if expected is None else int(expected)
    p0 = detection_probability(setup, x)
    rng = np.random.default_rng(seed)
    zeros = rng.random((shots, repetitions)) < p0
    votes_false = zeros.sum(axis=1) * 2 > repetitions
    decisions = np.where(votes_false, 0, 1)
    errors = int(np.sum(decisions != truth))
    p_run = p0 if truth == 1 else 1.0 - p0
    p_err = float(stats.binom.sf(repetitions // 2, repetitions, p_run))
    decision = int(np.sum(decisions) * 2 > shots)
    return SimulationResult(decision, repetitions, errors / shots, repetitions * setup.applications,
                            setup.precision, shots, p_err, clopper_pearson_upper(errors, shots), p0)
