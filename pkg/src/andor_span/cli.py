"""Command-line interface: ``andor-span <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .certify import CertifyOptions, certify
from .composition import STRATEGIES, build_program, place_checkpoints
from .formula import (DEFAULT_CERTIFICATE_CAP, FormulaError, evaluate, normalize_binary,
                      parse_bits, parse_formula)
from .graph import DEFAULT_VERTEX_CAP, apply_input, build_graph, program_graph, spectral_evaluate
from .span import DEFAULT_INPUT_CAP, witness_report, worst_case_report
from .sweep import ConfigError, parse_config, rows_to_csv, run_sweep
from .walk import DEFAULT_PRECISION_CONSTANT, DEFAULT_SHOTS, DEFAULT_TAIL_CONSTANT, simulate_evaluation


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument errors use the same single-line format as runtime errors."""

    def error(self, message: str):
        print(f"error: UsageError: {message}".replace("\n", " "), file=sys.stderr)
        sys.exit(2)


def _read_formula(arg: str):
    text = Path(arg[1:]).read_text() if arg.startswith("@") else arg
    return parse_formula(text.strip())


def _binary(args):
    return normalize_binary(_read_formula(args.formula))


def _program(args):
    f = _binary(args)
    return f, build_program(f, args.strategy, cap=args.cap_certificates)


def _bits(args, n: int):
    if args.input is None:
        raise CLIError("--input is required")
    x = parse_bits(args.input)
    if len(x) != n:
        raise CLIError(f"input has {len(x)} bits, formula has {n} inputs")
    return x


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


def cmd_parse(args) -> int:
    print(_read_formula(args.formula).to_json())
    return 0


def cmd_normalize(args) -> int:
    f = _binary(args)
    print(f)
    if args.json:
        print(f.to_json())
    return 0


def cmd_checkpoints(args) -> int:
    cp = place_checkpoints(_binary(args))
    _emit(cp.to_dict())
    return 0


def cmd_build(args) -> int:
    _, P = _program(args)
    print(P.to_json())
    return 0


def cmd_metrics(args) -> int:
    f, P = _program(args)
    inputs = "all" if 2**f.n <= args.cap_inputs else args.samples
    wc = worst_case_report(P, inputs=inputs, seed=args.seed, cap=args.cap_inputs)
    G = program_graph(P)
    if G.vertex_count > args.cap_vertices:
        raise CLIError(f"graph has {G.vertex_count} vertices, cap is {args.cap_vertices}")
    _emit({"formula": str(f), "n": f.n, "strategy": args.strategy, "dim": P.dim,
           "columns": P.ncols, "wsize": wc.wsize, "full_wsize": wc.full_wsize,
           "inputs_checked": wc.inputs_checked, "norm_abs": float(np.linalg.norm(G.weights, 2)),
           "max_degree": int(G.degrees().max()), "vertex_count": build_graph(P).vertex_count})
    return 0


def cmd_evaluate(args) -> int:
    f, P = _program(args)
    x = _bits(args, f.n)
    if args.engine == "span":
        rep = witness_report(P, x)
        _emit({"value": rep.value, "wsize": rep.wsize, "full_wsize": rep.full_wsize,
               "formula_value": evaluate(f, x)})
    elif args.engine == "spectral":
        _emit({"value": spectral_evaluate(P, x, args.cap_vertices), "formula_value": evaluate(f, x)})
    else:
        res = simulate_evaluation(P, x, precision_constant=args.precision_constant,
                                  tail_constant=args.tail_constant, shots=args.shots,
                                  repetitions=args.repetitions, seed=args.seed)
        out = res.to_dict()
        out["value"] = out.pop("decision")
        out["formula_value"] = evaluate(f, x)
        _emit(out)
    return 0


def cmd_certify(args) -> int:
    f = _binary(args)
    report = certify(f, CertifyOptions(args.exhaustive_cap, args.samples, args.seed))
    for c in report.checks:
        if args.verbose or not c.passed:
            print(c.line())
    bad = len(report.violations())
    print(f"certify: {len(report.checks)} checks, {bad} violations")
    return 0 if bad == 0 else 1


def cmd_export_graph(args) -> int:
    f, P = _program(args)
    G = build_graph(P)
    if args.input is not None or args.tail:
        x = _bits(args, f.n) if args.input is not None else (1,) * f.n
        G = apply_input(G, x, with_output_tail=args.tail)
    if G.vertex_count > args.cap_vertices:
        raise CLIError(f"graph has {G.vertex_count} vertices, cap is {args.cap_vertices}")
    sys.stdout.write(G.to_dot() if args.format == "dot" else G.to_json() + "\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.shots is not None:
        cfg.shots = args.shots
    if args.precision_constant is not None:
        cfg.precision_constant = args.precision_constant
    rows = run_sweep(cfg, seed=args.seed, jobs=args.jobs)
    text = rows_to_csv(rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="andor-span", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, formula=True, strategy=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        if formula:
            sp.add_argument("--formula", required=True, help="formula text or @file")
        if strategy:
            sp.add_argument("--strategy", choices=STRATEGIES, default="hybrid")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--cap-certificates", type=int, default=DEFAULT_CERTIFICATE_CAP)
        sp.add_argument("--cap-vertices", type=int, default=DEFAULT_VERTEX_CAP)
        sp.add_argument("--cap-inputs", type=int, default=DEFAULT_INPUT_CAP)
        return sp

    add("parse", cmd_parse, "parse a formula and print its JSON tree")
    sp = add("normalize", cmd_normalize, "binarize and order children by size")
    sp.add_argument("--json", action="store_true")
    add("checkpoints", cmd_checkpoints, "place checkpoints and print paths")
    add("build", cmd_build, "build the span program (JSON)", strategy=True)
    sp = add("metrics", cmd_metrics, "witness sizes, norm and degree", strategy=True)
    sp.add_argument("--samples", type=int, default=4096)
    sp = add("evaluate", cmd_evaluate, "evaluate on one input", strategy=True)
    sp.add_argument("--input", help="bitstring x1..xn")
    sp.add_argument("--engine", choices=("span", "spectral", "walk"), default="span")
    sp.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    sp.add_argument("--repetitions", type=int, default=1)
    sp.add_argument("--precision-constant", type=float, default=DEFAULT_PRECISION_CONSTANT)
    sp.add_argument("--tail-constant", type=float, default=DEFAULT_TAIL_CONSTANT)
    sp = add("certify", cmd_certify, "run the analysis-lemma checks")
    sp.add_argument("--samples", type=int, default=128)
    sp.add_argument("--exhaustive-cap", type=int, default=10)
    sp.add_argument("--verbose", action="store_true")
    sp = add("export-graph", cmd_export_graph, "export the evaluation graph", strategy=True)
    sp.add_argument("--format", choices=("dot", "json"), default="dot")
    sp.add_argument("--input", help="apply an input (dangling edges)")
    sp.add_argument("--tail", action="store_true", help="attach an output tail")
    sp = add("sweep", cmd_sweep, "run a benchmark sweep from a config file", formula=False)
    sp.add_argument("--config", required=True)
    sp.add_argument("--output")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--precision-constant", type=float)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, FormulaError, ConfigError, ValueError, OSError) as exc:
        reason = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
