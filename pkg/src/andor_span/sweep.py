"""Benchmark sweeps over formula families, written as CSV."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .composition import STRATEGIES, build_program
from .families import FAMILIES, depth, generate_family, probe_input
from .formula import DEFAULT_CERTIFICATE_CAP, BinaryFormula
from .graph import (DEFAULT_VERTEX_CAP, apply_input, build_graph, program_graph, spectral_report)
from .span import worst_case_report
from .walk import DEFAULT_PRECISION_CONSTANT, DEFAULT_SHOTS, DEFAULT_TAIL_CONSTANT, prepare_walk, simulate_evaluation

SCHEMA_VERSION = 1
MEASUREMENTS = ("witness", "spectral", "walk")


class ConfigError(ValueError):
    pass


@dataclass
class SweepRow:
    family: str
    n: int
    depth: int
    strategy: str
    wsize: float | None = None
    full_wsize: float | None = None
    norm_abs: float | None = None
    max_degree: int | None = None
    vertex_count: int | None = None
    spectral_gap: float | None = None
    kernel_overlap: float | None = None
    queries: int | None = None
    empirical_error: float | None = None
    seed: int = 0
    error: str = ""


@dataclass
class SweepConfig:
    families: list[str]
    params: dict[str, list[int]]  # family -> depths (balanced_alt) or sizes
    random_count: int = 1
    strategies: tuple[str, ...] = ("hybrid",)
    measurements: tuple[str, ...] = MEASUREMENTS
    samples: int = 4096  # sampled inputs when 2^n exceeds exhaustive_cap
    exhaustive_cap: int = 2**12
    shots: int = DEFAULT_SHOTS
    precision_constant: float = DEFAULT_PRECISION_CONSTANT
    tail_constant: float = DEFAULT_TAIL_CONSTANT
    cap_vertices: int = DEFAULT_VERTEX_CAP
    cap_certificates: int = DEFAULT_CERTIFICATE_CAP


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _names(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def parse_config(text: str) -> SweepConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment.

    Keys: ``families``, ``<family>.sizes`` (``balanced_alt.depths``),
    ``random.count``, ``strategies``, ``measurements``, ``samples``,
    ``exhaustive_cap``, ``shots``, ``precision_constant``, ``tail_constant``,
    ``cap_vertices``, ``cap_certificates``. Integer lists accept ranges
    (``1-5``).
    """
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = value
    try:
        families = _names(kv.pop("families"))
    except KeyError:
        raise ConfigError("missing key 'families'") from None
    params = {}
    for fam in families:
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}")
        key = f"{fam}.depths" if fam == "balanced_alt" else f"{fam}.sizes"
        if key not in kv:
            raise ConfigError(f"missing key {key!r}")
        params[fam] = _ints(kv.pop(key))
    cfg = SweepConfig(families, params)
    conv = {"random.count": ("random_count", int), "samples": ("samples", int),
            "exhaustive_cap": ("exhaustive_cap", int), "shots": ("shots", int),
            "precision_constant": ("precision_constant", float),
            "tail_constant": ("tail_constant", float), "cap_vertices": ("cap_vertices", int),
            "cap_certificates": ("cap_certificates", int)}
    try:
        for key, (attr, typ) in conv.items():
            if key in kv:
                setattr(cfg, attr, typ(kv.pop(key)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "strategies" in kv:
        cfg.strategies = tuple(_names(kv.pop("strategies")))
        for s in cfg.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}")
    if "measurements" in kv:
        cfg.measurements = tuple(_names(kv.pop("measurements")))
        for m in cfg.measurements:
            if m not in MEASUREMENTS:
                raise ConfigError(f"unknown measurement {m!r}")
    if kv:
        raise ConfigError(f"unknown key {sorted(kv)[0]!r}")
    return cfg


def instance_seed(seed: int, family: str, param: int, k: int) -> int:
    """Per-instance seed derived from the sweep seed."""
    tag = FAMILIES.index(family)
    return int(np.random.SeedSequence([seed, tag, param, k]).generate_state(1)[0])


def instances(cfg: SweepConfig, seed: int) -> list[tuple[str, int, int]]:
    out = []
    for fam in cfg.families:
        for p in cfg.params[fam]:
            count = cfg.random_count if fam == "random" else 1
            for k in range(count):
                out.append((fam, p, instance_seed(seed, fam, p, k)))
    return out


def measure(f: BinaryFormula, family: str, strategy: str, cfg: SweepConfig, seed: int) -> SweepRow:
    row = SweepRow(family, f.n, depth(f), strategy, seed=seed)
    try:
        P = build_program(f, strategy, cap=cfg.cap_certificates)
        G = build_graph(P)
        if G.vertex_count > cfg.cap_vertices:
            raise ValueError(f"graph has {G.vertex_count} vertices, cap is {cfg.cap_vertices}")
        row.vertex_count = G.vertex_count
        GP = program_graph(P)
        row.norm_abs = float(np.linalg.norm(GP.weights, 2))
        row.max_degree = int(GP.degrees().max())
        inputs = "all" if 2**f.n <= cfg.exhaustive_cap else cfg.samples
        wc = None
        if "witness" in cfg.measurements or "walk" in cfg.measurements:
            wc = worst_case_report(P, inputs=inputs, seed=seed)
        if "witness" in cfg.measurements:
            row.wsize, row.full_wsize = wc.wsize, wc.full_wsize
        if "spectral" in cfg.measurements:
            rep = spectral_report(apply_input(G, probe_input(f, 1)), cfg.cap_vertices)
            row.spectral_gap, row.kernel_overlap = rep.spectral_gap, rep.kernel_output_overlap
        if "walk" in cfg.measurements:
            setup = prepare_walk(P, cfg.precision_constant, cfg.tail_constant, full_wsize=wc.full_wsize)
            errs = [simulate_evaluation(P, probe_input(f, b), expected=b, shots=cfg.shots, seed=seed,
                                        setup=setup).empirical_error for b in (0, 1)]
            row.queries = setup.applications
            row.empirical_error = max(errs)
    except Exception as exc:  # recorded per row; the sweep continues
        row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def _run_instance(args) -> list[SweepRow]:
    fam, p, seed, cfg = args
    f = generate_family(fam, p, seed)
    return [measure(f, fam, s, cfg, seed) for s in cfg.strategies]


def run_sweep(cfg: SweepConfig, seed: int = 0, jobs: int = 1) -> list[SweepRow]:
    """All (instance, strategy) rows in config order."""
    tasks = [(fam, p, s, cfg) for fam, p, s in instances(cfg, seed)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_instance, tasks))
    else:
        chunks = [_run_instance(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return repr(round(value, 12))
    return str(value)


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# andor-span sweep schema v{SCHEMA_VERSION}\n")
    names = [fld.name for fld in fields(SweepRow)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in names])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))
