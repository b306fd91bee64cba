import functools

import pytest

from andor_span.families import all_shapes, random_formula
from andor_span.formula import normalize_binary, parse_formula

FIG1 = "(((x1&x2)|x3)&x4)|(x5&(x6|x7))"


@pytest.fixture(scope="session")
def fig1():
    return normalize_binary(parse_formula(FIG1))


@functools.lru_cache(maxsize=None)
def small_instances():
    """Every shape with n <= 4, plus 50 seeded random formulas for each n in 5..10."""
    out = []
    for n in range(1, 5):
        out += [(f"shape{n}.{k}", f) for k, f in enumerate(all_shapes(n))]
    for n in range(5, 11):
        out += [(f"random{n}.{k}", random_formula(n, seed=1000 * n + k)) for k in range(50)]
    return tuple(out)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
