"""The analysis-lemma suite: every inequality used to bound the cost of the
hybrid construction, evaluated numerically on one formula."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .composition import (HybridBuild, build_hybrid, composition_bound_check, gate_program,
                          reduced_tensor_compose)
from .formula import BinaryFormula
from .graph import LAMBDA, BoundsReport, Check, _check, biadjacency_norm, verify_paper_bounds
from .span import WorstCase, input_set, worst_case_report


@dataclass
class CertifyOptions:
    exhaustive_cap: int = 10  # enumerate all inputs of subformulas up to this size
    samples: int = 128  # otherwise: this many seeded inputs plus 0^m and 1^m
    seed: int = 0


def _inputs(m: int, opts: CertifyOptions) -> str | int:
    return "all" if m <= opts.exhaustive_cap else opts.samples


def tensor_step_checks(hb: HybridBuild) -> list[Check]:
    """Norm growth of each reduced tensor step along every path."""
    f, cp = hb.formula, hb.checkpoints
    out = []
    for k, seg in enumerate(cp.segments):
        P = gate_program(f, seg.gates[0])
        for v in seg.gates[1:]:
            Q = reduced_tensor_compose(P, gate_program(f, v), 1)
            s1, s2 = f.s1(v), f.s2(v)
            factor = (math.sqrt(s1) + math.sqrt(s2)) / math.sqrt(s1 + s2)
            out.append(_check("tensor_norm_growth", biadjacency_norm(Q) ** 2,
                              factor * biadjacency_norm(P) ** 2, f"path {k} gate {v}", tol=1e-8))
            P = Q
    return out


def zero_witness_checks(hb: HybridBuild) -> list[Check]:
    """``|x^j>/<t|x^j>`` is a false witness for ``x^j`` with the stated norm bound."""
    cp = hb.checkpoints
    out = []
    for k, pp in hb.path_programs.items():
        P = pp.program
        m = cp.size(k)
        for j in pp.t_f:
            row = pp.row_of(j)
            w = np.zeros(P.dim)
            w[row] = 1.0 / P.target[row]
            x = pp.certificates[j]
            residual = max((abs(P.matrix[row, i]) for i in range(P.ncols)
                            if P.groups[i] is not None and x[P.groups[i][0] - 1] == 1), default=0.0)
            out.append(_check("zero_witness_available_overlap", residual, 0.0, f"path {k} j={j}", tol=1e-12))
            bound = LAMBDA if j == 1 else LAMBDA * math.sqrt(m)
            out.append(_check("zero_witness_norm", float(w @ w), bound, f"path {k} j={j}"))
    return out


def composition_checks(hb: HybridBuild, opts: CertifyOptions) -> list[Check]:
    """Full-witness composition inequality at every segment with checkpointed inputs."""
    f, cp = hb.formula, hb.checkpoints
    worst: dict[int, WorstCase] = {}

    def child_worst(c: int) -> WorstCase:
        if c not in worst:
            m = cp.size(c)
            wc = worst_case_report(hb.subtree[c], inputs=_inputs(m, opts), seed=opts.seed)
            wc.wsize = max(wc.wsize, math.sqrt(m))
            worst[c] = wc
        return worst[c]

    out = []
    for k in range(len(cp.segments)):
        children = cp.child_segments(k)
        subs = {pos + 1: hb.subtree[c] for pos, c in enumerate(children) if c is not None}
        sub_worst = {pos + 1: child_worst(c) for pos, c in enumerate(children) if c is not None}
        P = hb.path_programs[k].program
        Q = hb.subtree[k]
        worst_gap, where = -math.inf, ""
        for x in input_set(Q.n, _inputs(cp.size(k), opts), opts.seed):
            res = composition_bound_check(P, subs, x, sub_worst, composed=Q)
            if res.lhs - res.rhs > worst_gap:
                worst_gap, lhs, rhs = res.lhs - res.rhs, res.lhs, res.rhs
                where = f"path {k} x={''.join(map(str, x))}"
        out.append(_check("full_witness_composition", lhs, rhs, where, tol=1e-8))
    return out


def certify(f: BinaryFormula, opts: CertifyOptions | None = None) -> BoundsReport:
    opts = opts or CertifyOptions()
    hb = build_hybrid(f)
    report = verify_paper_bounds(f, samples=opts.samples, seed=opts.seed,
                                 exhaustive_cap=opts.exhaustive_cap, build=hb)
    checks = list(report.checks)
    checks += tensor_step_checks(hb)
    checks += zero_witness_checks(hb)
    checks += composition_checks(hb, opts)
    return BoundsReport(checks)
