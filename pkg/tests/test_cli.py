import json
import math
import subprocess
import sys

import pytest

from andor_span.cli import main

FIG1 = "(((x1&x2)|x3)&x4)|(x5&(x6|x7))"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "--formula", "x1&x2")
    assert code == 0
    assert json.loads(out)


def test_normalize(capsys):
    code, out, _ = run(capsys, "normalize", "--formula", "x1&(x2|x3)")
    assert code == 0 and out.strip() == "(x2|x3)&x1"


def test_formula_from_file(capsys, tmp_path):
    p = tmp_path / "f.txt"
    p.write_text(FIG1 + "\n")
    code, out, _ = run(capsys, "normalize", "--formula", f"@{p}")
    assert code == 0 and out.strip() == "(((x1&x2)|x3)&x4)|((x6|x7)&x5)"


def test_checkpoints(capsys):
    code, out, _ = run(capsys, "checkpoints", "--formula", FIG1)
    d = json.loads(out)
    assert code == 0 and d["paths"] == [[0, 1, 2, 3], [8, 9]]


def test_build(capsys):
    code, out, _ = run(capsys, "build", "--formula", FIG1)
    d = json.loads(out)
    assert code == 0 and d["dim"] == 5 and d["n"] == 7


def test_metrics(capsys):
    code, out, _ = run(capsys, "metrics", "--formula", FIG1)
    d = json.loads(out)
    assert code == 0
    assert d["wsize"] == pytest.approx(math.sqrt(7), abs=1e-6)
    assert d["inputs_checked"] == 128


@pytest.mark.parametrize("engine", ["span", "spectral", "walk"])
def test_evaluate_engines(capsys, engine):
    code, out, _ = run(capsys, "evaluate", "--formula", FIG1, "--input", "0101011", "--engine", engine)
    d = json.loads(out)
    assert code == 0 and d["value"] == 0 == d["formula_value"]


def test_certify(capsys):
    code, out, _ = run(capsys, "certify", "--formula", FIG1)
    assert code == 0
    assert out.strip().endswith("0 violations")


def test_export_graph(capsys):
    code, out, _ = run(capsys, "export-graph", "--formula", FIG1, "--format", "json", "--input", "0101011",
                       "--tail")
    d = json.loads(out)
    assert code == 0
    roles = [v["role"] for v in d["vertices"]]
    assert roles.count("dangling") == 3 and roles.count("output-tail") == 1
    code, dot, _ = run(capsys, "export-graph", "--formula", FIG1)
    assert dot.startswith("graph G {")


def test_sweep(capsys, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("families = skew\nskew.sizes = 4, 6\nmeasurements = witness, spectral\n")
    out_path = tmp_path / "out.csv"
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--output", str(out_path))
    assert code == 0
    first = out_path.read_text()
    code, second, _ = run(capsys, "sweep", "--config", str(cfg))
    assert second == first
    assert first.count("\n") == 4


@pytest.mark.parametrize("argv,kind", [
    (["parse", "--formula", "x1&"], "FormulaSyntaxError"),
    (["parse", "--formula", "x1&x1"], "FormulaError"),
    (["evaluate", "--formula", "x1&x2"], "CLIError"),
    (["evaluate", "--formula", "x1&x2", "--input", "1"], "CLIError"),
    (["evaluate", "--formula", "x1&x2", "--input", "12"], "FormulaError"),
    (["build", "--formula", "(x1&x2)&(x3&x4)", "--strategy", "tensor_only", "--cap-certificates", "1"],
     "CapExceeded"),
    (["export-graph", "--formula", FIG1, "--cap-vertices", "3"], "CLIError"),
    (["sweep", "--config", "/nonexistent/sweep.cfg"], "FileNotFoundError"),
    (["parse", "--formula", "@/nonexistent/formula.txt"], "FileNotFoundError"),
])
def test_errors_are_single_line(capsys, argv, kind):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err.count("\n") == 1
    assert err.startswith(f"error: {kind}: ")


def test_config_error(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("families = nothing\n")
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 2 and err.startswith("error: ConfigError: ")


def test_console_script_is_deterministic():
    cmd = [sys.executable, "-m", "andor_span.cli", "evaluate", "--formula", FIG1, "--input", "1111000",
           "--engine", "walk", "--seed", "3"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert a == b and json.loads(a)["value"] == 1


def test_console_script_error_exit():
    r = subprocess.run([sys.executable, "-m", "andor_span.cli", "parse", "--formula", "(x1"],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert r.stderr.strip().startswith("error: FormulaSyntaxError")


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["build"], ["build", "--formula", "x1", "--strategy", "x"]])
def test_usage_errors_are_single_line(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    _, err = capsys.readouterr()
    assert info.value.code == 2
    assert err.count("\n") == 1 and err.startswith("error: UsageError: ")
