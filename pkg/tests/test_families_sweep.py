import math

import pytest

from andor_span.families import (all_shapes, balanced_alt, depth, generate_family, probe_input,
                                 random_formula, skew)
from andor_span.formula import AND, FormulaError, count_maximal_false, evaluate
from andor_span.sweep import (SCHEMA_VERSION, ConfigError, SweepConfig, instances, parse_config,
                              read_csv, rows_to_csv, run_sweep)


def test_balanced_alt_d2():
    assert str(balanced_alt(2)) == "(x1|x2)&(x3|x4)"
    assert balanced_alt(3).n == 8


def test_skew_n4():
    f = skew(4)
    assert f.n == 4 and depth(f) == 3
    assert f.kind[0] == AND
    assert str(f) == "((x1&x2)|x3)&x4"


def test_balanced_alt_d3_count():
    assert count_maximal_false(generate_family("balanced_alt", 3)) == 8


def test_random_is_deterministic():
    assert str(random_formula(20, 5)) == str(random_formula(20, 5))
    assert str(random_formula(20, 5)) != str(random_formula(20, 6))
    assert str(generate_family("random", 12, 3)) == str(random_formula(12, 3))


@pytest.mark.parametrize("kind,param", [("balanced_alt", 0), ("skew", 1), ("random", 0), ("tree", 3)])
def test_invalid_params(kind, param):
    with pytest.raises(FormulaError):
        generate_family(kind, param)


def test_all_shapes_counts():
    # 2^(n-1) Catalan(n-1) labelled-by-position shapes
    assert [len(all_shapes(n)) for n in range(1, 5)] == [1, 2, 8, 40]


def test_probe_input_value():
    for f in (skew(16), balanced_alt(4), random_formula(30, 2)):
        for b in (0, 1):
            assert evaluate(f, probe_input(f, b)) == b


CONFIG = """
# small sweep
families = balanced_alt, skew
balanced_alt.depths = 1-3
skew.sizes = 4, 8
strategies = hybrid, tensor_only
shots = 50
"""


def test_parse_config():
    cfg = parse_config(CONFIG)
    assert cfg.families == ["balanced_alt", "skew"]
    assert cfg.params == {"balanced_alt": [1, 2, 3], "skew": [4, 8]}
    assert cfg.strategies == ("hybrid", "tensor_only")
    assert cfg.shots == 50


@pytest.mark.parametrize("text", [
    "skew.sizes = 4",
    "families = tree\ntree.sizes = 4",
    "families = skew",
    "families = skew\nskew.sizes = 4\nstrategies = magic",
    "families = skew\nskew.sizes = 4\nmeasurements = timing",
    "families = skew\nskew.sizes = 4\nbogus = 1",
    "families = skew\nskew.sizes = 4\nshots = many",
    "families = skew\nfamilies = skew",
    "families skew",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_instances_seeds_depend_on_sweep_seed():
    cfg = parse_config("families = random\nrandom.sizes = 5, 6\nrandom.count = 3")
    a, b = instances(cfg, 0), instances(cfg, 1)
    assert len(a) == 6 and len({s for _, _, s in a}) == 6
    assert a != b and a == instances(cfg, 0)


def test_sweep_rows_and_csv():
    cfg = parse_config(CONFIG)
    rows = run_sweep(cfg, seed=0)
    assert len(rows) == 5 * 2
    for r in rows:
        assert r.error == ""
        for name in ("wsize", "full_wsize", "norm_abs", "spectral_gap", "kernel_overlap",
                     "empirical_error"):
            assert math.isfinite(getattr(r, name))
    hybrid = [r for r in rows if r.strategy == "hybrid"]
    for r in hybrid:
        assert r.wsize == pytest.approx(math.sqrt(r.n), abs=1e-6)
    tensor = [r for r in rows if r.strategy == "tensor_only" and r.family == "balanced_alt"]
    for r in tensor:
        d = int(math.log2(r.n))
        assert r.vertex_count == 4 ** (2 ** ((d - 1) // 2)) // 2 + r.n + 1
    text = rows_to_csv(rows)
    assert text.startswith(f"# andor-span sweep schema v{SCHEMA_VERSION}\n")
    assert text == rows_to_csv(run_sweep(cfg, seed=0))
    parsed = read_csv(text)
    assert len(parsed) == len(rows)
    assert list(parsed[0]) == ["family", "n", "depth", "strategy", "wsize", "full_wsize", "norm_abs",
                               "max_degree", "vertex_count", "spectral_gap", "kernel_overlap",
                               "queries", "empirical_error", "seed", "error"]


def test_sweep_records_errors_and_continues():
    cfg = parse_config("families = balanced_alt\nbalanced_alt.depths = 2, 4\nstrategies = tensor_only\n"
                       "cap_certificates = 4\nmeasurements = witness")
    rows = run_sweep(cfg)
    assert rows[0].error == ""
    assert rows[1].error.startswith("CapExceeded")
    assert rows[1].wsize is None


def test_disabled_measurements_are_blank():
    cfg = parse_config("families = skew\nskew.sizes = 4\nmeasurements = witness")
    rows = run_sweep(cfg)
    assert rows[0].queries is None and rows[0].spectral_gap is None
    line = read_csv(rows_to_csv(rows))[0]
    assert line["queries"] == "" and line["wsize"] != ""


def test_parallel_sweep_matches_serial():
    cfg = parse_config("families = random\nrandom.sizes = 5, 6\nrandom.count = 2\nmeasurements = witness, spectral")
    assert rows_to_csv(run_sweep(cfg, 3, jobs=2)) == rows_to_csv(run_sweep(cfg, 3, jobs=1))


def test_default_config_fields():
    cfg = SweepConfig(["skew"], {"skew": [4]})
    assert cfg.strategies == ("hybrid",)
