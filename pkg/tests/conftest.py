import functools
import sys
from pathlib import Path

import numpy as np
import pytest

from gaussmap4 import exprlang as el
from gaussmap4.atlas import Atlas, ExprChart, RectDomain, monge_chart
from gaussmap4.surface import load_atlas

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def fixture_path(name):
    return FIXTURES / f"{name}.surf"


@functools.lru_cache(maxsize=None)
def atlas_of(name):
    return load_atlas(fixture_path(name))


def expr_chart(coords, box=(-1, 1, -1, 1), name="C", orientation=1):
    return ExprChart(name, tuple(el.parse(c) for c in coords), RectDomain(*box), orientation)


def single_atlas(chart, name="patch"):
    return Atlas([chart], [], {}, None, name)


def random_cubic_monge(seed, scale=1.0, box=(-0.3, 0.3, -0.3, 0.3)):
    """Monge chart with random quadratic and cubic parts of both height functions."""
    rng = np.random.default_rng(seed)
    mons = [(2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]
    a = {m: scale * x for m, x in zip(mons, rng.normal(size=7))}
    b = {m: scale * x for m, x in zip(mons, rng.normal(size=7))}
    return monge_chart(a, b, f"cubic{seed}", RectDomain(*box))


EXAMPLE1 = ("u", "v", "u*v - u*v^2 + v^3/3", "-u^2/2 - u^2*v")


def example1_sigma(u, v):
    """Degree-7 polynomial whose zero set is the singular curve through the origin."""
    return (-4 * v + 8 * u ** 2 - 4 * u * v + 8 * v ** 2 - 4 * u ** 2 * v + 2 * u * v ** 2 + 2 * u * v ** 3
            + v ** 4 + 6 * u * v ** 4 - 6 * u ** 2 * v ** 3 + 4 * u ** 4 * v - 6 * u ** 3 * v ** 2 + 2 * v ** 5
            - 28 * u ** 3 * v ** 3 + 32 * u ** 2 * v ** 4 - 16 * u * v ** 5 + 24 * u ** 4 * v ** 2)


@pytest.fixture(scope="session")
def example1():
    return atlas_of("example1")


@pytest.fixture(scope="session")
def sphere():
    return atlas_of("sphere")


@pytest.fixture(scope="session")
def clifford():
    return atlas_of("clifford")


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, when that module ran."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
