import math

import numpy as np
import pytest

from andor_span.composition import (SEGMENT_MAX, SQRT_E, CompositionError, PathGate, build_hybrid,
                                    build_program, canonical_rows, certificate_program,
                                    composition_bound_check, compose_path_closed_form,
                                    compose_path_iterative, direct_sum_compose, pattern_labels,
                                    place_checkpoints, reduced_tensor_compose, tensor_only_program)
from andor_span.families import all_shapes, balanced_alt, random_formula, skew
from andor_span.formula import (AND, OR, all_inputs, evaluate, maximal_false_inputs,
                                normalize_binary, parse_bits, parse_formula)
from andor_span.graph import LAMBDA
from andor_span.span import SpanProgram, eval_span, primitive_gate_program, worst_case_report

q = lambda v: v**0.25  # noqa: E731


def test_reduced_tensor_example():
    P = reduced_tensor_compose(primitive_gate_program(AND, 2, 1), primitive_gate_program(OR, 1, 1), 1)
    assert P.n == 3
    assert P.row_labels == ["001", "110"]
    assert np.allclose(P.target, [q(2 / 3), q(1 / 3)])
    e = 2**-0.25
    assert np.allclose(P.matrix, [[e, e, 0], [0, 0, 1]])
    assert P.groups == [(1, 1), (2, 1), (3, 1)]
    f = normalize_binary(parse_formula("(x1|x2)&x3"))
    for x in all_inputs(3):
        assert eval_span(P, x) == evaluate(f, x)


def test_reduced_tensor_inner_or_block_form():
    # outer column for the composed input is (gamma, 0): rows 2.. stay one-dimensional
    gamma = np.array([0.5, 0.7])
    P = SpanProgram([1.0, 0.4, 0.3], [[0.5, 0.2], [0.7, 0.0], [0.0, 0.9]], [(1, 1), (2, 1)], 2,
                    row_labels=["00", "01", "10"])
    g = PathGate(OR, 2.0, 3.0).params
    Q = reduced_tensor_compose(P, primitive_gate_program(OR, 2.0, 3.0), 1)
    B = Q.biadjacency()
    assert np.allclose(B[:2, 1], g.eps1 * gamma)
    assert np.allclose(B[:2, 2], g.eps2 * gamma)
    assert np.allclose(B[2, :3], [0.3, 0, 0])  # Z row: delta * ||t'|| with delta = 1
    assert np.allclose(B[2, 3], 0.9)


def test_reduced_tensor_inner_and_block_form():
    P = SpanProgram([1.0, 0.3], [[0.5, 0.0], [0.0, 0.9]], [(1, 1), (2, 1)], 2)
    g = PathGate(AND, 2.0, 3.0).params
    Q = reduced_tensor_compose(P, primitive_gate_program(AND, 2.0, 3.0), 1)
    assert Q.dim == 3
    assert np.allclose(Q.target, [g.alpha1, g.alpha2, 0.3 * g.alpha])
    assert np.allclose(Q.matrix[:, 0], [0.5, 0, 0])
    assert np.allclose(Q.matrix[:, 1], [0, 0.5, 0])
    assert np.allclose(Q.matrix[:, 2], [0, 0, 0.9 * g.alpha])  # Z rows scale by ||t'|| = alpha


def test_reduced_tensor_errors():
    free = SpanProgram([1.0], [[1.0]], [None], 1)
    gate = primitive_gate_program(AND, 1, 1)
    with pytest.raises(CompositionError):
        reduced_tensor_compose(free, gate, 1)
    with pytest.raises(CompositionError):
        reduced_tensor_compose(gate, free, 1)
    with pytest.raises(CompositionError):
        reduced_tensor_compose(SpanProgram([1.0], [[1.0]], [(1, 1)], 2), gate, 2)


def test_single_gate_path():
    for kind in (AND, OR):
        for build in (compose_path_iterative, compose_path_closed_form):
            pp = build([PathGate(kind, 1, 1)])
            G = primitive_gate_program(kind, 1, 1)
            assert np.allclose(pp.program.target, G.target)
            assert np.allclose(pp.program.matrix, G.matrix)


def test_fig4c_path():
    pp = compose_path_iterative([PathGate(OR, 2, 1), PathGate(AND, 1, 1)])
    P = pp.program
    assert P.row_labels == ["010", "100"]
    e = 2**-0.25
    assert np.allclose(P.target, [e, e])
    assert np.allclose(P.matrix, [[q(2 / 3), 0, q(1 / 3) * e], [0, q(2 / 3), q(1 / 3) * e]])
    f = normalize_binary(parse_formula("(x1&x2)|x3"))
    for x in all_inputs(3):
        assert eval_span(P, x) == evaluate(f, x)


def test_fig1_long_path():
    gates = [PathGate(OR, 4, 3), PathGate(AND, 3, 1), PathGate(OR, 2, 1), PathGate(AND, 1, 1)]
    pp = compose_path_iterative(gates)
    assert pp.program.dim == len(pp.t_f) == 3
    assert pp.t_f == [1, 2, 4]
    assert sorted(pp.program.row_labels) == ["01010", "10010", "11100"]


def _random_path(rng, J):
    return [PathGate(str(rng.choice([AND, OR])), float(rng.uniform(0.5, 20)), float(rng.uniform(0.5, 20)))
            for _ in range(J)]


def test_closed_form_matches_iterative():
    rng = np.random.default_rng(5)
    for _ in range(200):
        gates = _random_path(rng, int(rng.integers(1, 9)))
        a, b = compose_path_iterative(gates), compose_path_closed_form(gates)
        assert a.program.row_labels == b.program.row_labels
        assert np.allclose(a.program.matrix, b.program.matrix, rtol=0, atol=1e-9)
        assert np.allclose(a.program.target, b.program.target, rtol=0, atol=1e-9)


def test_path_rows_are_certificates():
    rng = np.random.default_rng(6)
    for _ in range(50):
        pp = compose_path_closed_form(_random_path(rng, int(rng.integers(1, 7))))
        labels = ["".join(map(str, pp.certificates[j])) for j in pp.t_f]
        assert sorted(labels) == pp.program.row_labels
        assert pattern_labels(pp.program) == pp.program.row_labels


def test_zero_witness_norms():
    rng = np.random.default_rng(7)
    for _ in range(100):
        gates = _random_path(rng, int(rng.integers(1, 7)))
        # sizes of a genuine chain: s1 of each gate is the size of the gate below
        m = 1
        chain = []
        for g in reversed(gates):
            s2 = float(rng.integers(1, 4))
            chain.append(PathGate(g.kind, float(m), s2))
            m += s2
        chain.reverse()
        pp = compose_path_closed_form(chain)
        P = pp.program
        for j in pp.t_f:
            t = P.target[pp.row_of(j)]
            bound = LAMBDA if j == 1 else LAMBDA * math.sqrt(m)
            assert 1 / t**2 <= bound + 1e-9


def test_checkpoints_fig1(fig1):
    cp = place_checkpoints(fig1)
    assert cp.internal_checkpoints() == [(0, 8)]
    assert cp.paths == [[0, 1, 2, 3], [8, 9]]
    assert cp.path_products[0] == pytest.approx(1.949, abs=1e-3)
    assert cp.path_products[0] <= SEGMENT_MAX
    assert cp.path_products[1] == pytest.approx(1.404, abs=1e-3)
    assert cp.segments[cp.segment_of_top[8]].small


def test_checkpoints_single_gate():
    f = normalize_binary(parse_formula("x1&x2"))
    cp = place_checkpoints(f)
    assert cp.internal_checkpoints() == []
    assert cp.paths == [[0]]


def test_checkpoints_single_leaf_rejected():
    with pytest.raises(CompositionError):
        place_checkpoints(normalize_binary(parse_formula("x1")))


def _check_checkpoint_invariants(f):
    cp = place_checkpoints(f)
    tops_of_step1 = {p[0] for p in cp.step1_paths}
    for seg in cp.segments:
        assert seg.product <= SEGMENT_MAX + 1e-12
        if seg.top not in tops_of_step1:
            # only the segment reaching the top of its step-1 path may stay below sqrt(e)
            assert seg.product > SQRT_E
        assert seg.small == (seg.top in cp.small_set)
    for v in f.gates():
        assert (v, f.children[v][1]) in cp.marked_edges
    covered = sorted(v for seg in cp.segments for v in seg.gates)
    assert covered == sorted(f.gates())
    for x in all_inputs(f.n) if f.n <= 10 else []:
        assert cp.evaluate(x) == evaluate(f, x)
    return cp


def test_checkpoint_invariants_skew64():
    cp = _check_checkpoint_invariants(skew(64))
    assert len(cp.segments) > 1


def test_checkpoint_invariants_random():
    for n in range(2, 11):
        for seed in range(10):
            _check_checkpoint_invariants(random_formula(n, seed))
    for f in (balanced_alt(6), random_formula(200, 1)):
        _check_checkpoint_invariants(f)


def test_size_growth():
    for f in (skew(64), balanced_alt(6), random_formula(150, 3), random_formula(150, 4)):
        cp = place_checkpoints(f)
        for k, seg in enumerate(cp.segments):
            m = cp.size(k)
            for pos, c in enumerate(cp.child_segments(k)):
                if c is None:
                    continue
                mc = cp.size(c)
                if pos == 0:
                    if not seg.small:
                        assert mc <= m - math.sqrt(m / 2) + 1e-9
                else:
                    assert mc <= m / 2


def test_checkpoint_json(fig1):
    d = place_checkpoints(fig1).to_dict()
    assert [0, 8] in d["marked_edges"]
    assert d["paths"] == [[0, 1, 2, 3], [8, 9]]
    assert len(d["path_products"]) == 2


def test_fig3c_matrix(fig1):
    hb = build_hybrid(fig1)
    P = hb.program
    assert P.row_labels == ["01010_c", "10010_c", "11100_c", "011", "100"]
    assert P.labels == ["x1", "x2", "x3", "x4", "c5", "x5", "x6", "x7"]
    e1, e2 = q(4 / 7), q(3 / 7)  # root OR
    a1, a2 = q(3 / 4), q(1 / 4)  # AND with x4
    e1p, e2p = q(2 / 3), q(1 / 3)  # OR with x3
    a1p = a2p = 2**-0.25  # AND(x1, x2)
    ap = math.sqrt(a1p**2 + a2p**2)
    a1pp, a2pp = q(1 / 3), q(2 / 3)  # AND(x5, .), source order
    e1pp = e2pp = 2**-0.25  # OR(x6, x7)
    want = np.array([
        [a1 * a1p, e1 * e1p, 0, e1 * e2p * a1p, 0, e2 * a1 * a1p, 0, 0, 0],
        [a1 * a2p, 0, e1 * e1p, e1 * e2p * a2p, 0, e2 * a1 * a2p, 0, 0, 0],
        [a2 * ap, 0, 0, 0, e1 * ap, e2 * a2 * ap, 0, 0, 0],
        [0, 0, 0, 0, 0, a1pp, 1, 0, 0],
        [0, 0, 0, 0, 0, a2pp, 0, e1pp, e2pp],
    ])
    assert np.allclose(P.biadjacency(), want, atol=1e-12)
    assert P.free_columns() == [4]


def test_hybrid_fig1_example_input(fig1):
    P = build_program(fig1, "hybrid")
    assert eval_span(P, parse_bits("0101011")) == 0


def test_direct_sum_empty_is_identity():
    P = primitive_gate_program(OR, 2, 1)
    assert direct_sum_compose(P, {}) is P
    res = composition_bound_check(P, {}, (1, 1))
    assert res.sigma == 1.0 and res.holds


def test_direct_sum_fig3b_structure(fig1):
    hb = build_hybrid(fig1)
    k = hb.checkpoints.root_segment
    Q = hb.subtree[k]
    assert Q.labels.count("c5") == 1
    assert Q.dim == 5
    assert Q.free_columns() == [Q.labels.index("c5")]


def test_direct_sum_arity_error():
    P = primitive_gate_program(OR, 1, 1)
    with pytest.raises(CompositionError):
        direct_sum_compose(P, {3: P})


def test_all_strategies_fig1_exhaustive(fig1):
    for strategy in ("hybrid", "tensor_only", "direct_sum_only"):
        P = build_program(fig1, strategy)
        for x in all_inputs(7):
            assert eval_span(P, x) == evaluate(fig1, x)


def test_single_gate_all_strategies():
    f = normalize_binary(parse_formula("x1&x2"))
    G = primitive_gate_program(AND, 1, 1)
    for strategy in ("hybrid", "tensor_only", "direct_sum_only"):
        P = build_program(f, strategy)
        assert np.allclose(P.target, G.target) and np.allclose(P.matrix, G.matrix)


def test_tensor_only_fig1(fig1):
    P = build_program(fig1, "tensor_only")
    assert P.dim == 6
    assert sorted(P.row_labels) == ["".join(map(str, x)) for x in maximal_false_inputs(fig1)]
    assert pattern_labels(P) == P.row_labels
    # every input vertex is reached from the output through one constraint vertex
    B = P.biadjacency()
    for col in range(1, B.shape[1]):
        assert np.any((B[:, 0] != 0) & (B[:, col] != 0))


def test_tensor_only_matches_certificate_program():
    for f in list(all_shapes(4)) + [random_formula(n, n) for n in range(5, 10)]:
        A, C = tensor_only_program(f), certificate_program(f)
        assert A.row_labels == C.row_labels
        assert np.allclose(A.matrix, C.matrix, atol=1e-12)
        assert np.allclose(A.target, C.target, atol=1e-12)


def test_tensor_order_independence(fig1):
    A = tensor_only_program(fig1, order="preorder")
    B = tensor_only_program(fig1, order="reverse")
    assert A.row_labels == B.row_labels and A.groups == B.groups
    assert np.array_equal(A.matrix, B.matrix) or np.allclose(A.matrix, B.matrix, atol=1e-15)
    assert np.allclose(A.target, B.target, atol=1e-15)


def test_tensor_only_cap():
    from andor_span.formula import CapExceeded
    with pytest.raises(CapExceeded):
        build_program(balanced_alt(4), "tensor_only", cap=7)


def test_unknown_strategy(fig1):
    with pytest.raises(CompositionError):
        build_program(fig1, "bogus")


def test_composition_bound_two_level_random():
    rng = np.random.default_rng(3)
    for seed in range(20):
        outer = primitive_gate_program(str(rng.choice([AND, OR])), *rng.uniform(0.5, 4, size=2))
        subs = {}
        for j in (1, 2):
            if rng.uniform() < 0.7:
                g = [PathGate(str(rng.choice([AND, OR])), float(rng.uniform(0.5, 4)),
                              float(rng.uniform(0.5, 4))) for _ in range(int(rng.integers(1, 3)))]
                subs[j] = compose_path_closed_form(g).program
        Q = direct_sum_compose(outer, subs)
        worst = {j: worst_case_report(P) for j, P in subs.items()}
        for x in all_inputs(Q.n):
            res = composition_bound_check(outer, subs, x, worst, composed=Q)
            assert res.holds, (seed, x, res)


def test_composition_bound_fig1_all_ones(fig1):
    hb = build_hybrid(fig1)
    cp = hb.checkpoints
    k = cp.root_segment
    subs = {pos + 1: hb.subtree[c] for pos, c in enumerate(cp.child_segments(k)) if c is not None}
    res = composition_bound_check(hb.path_programs[k].program, subs, (1,) * 7, composed=hb.subtree[k])
    assert res.value == 1 and res.holds
    assert res.sigma >= 1.0


def test_canonical_rows_sorted():
    P = SpanProgram([1.0, 2.0], np.eye(2), [(1, 1), (2, 1)], 2, row_labels=["10", "01"])
    Q = canonical_rows(P)
    assert Q.row_labels == ["01", "10"]
    assert np.allclose(Q.target, [2.0, 1.0])
