from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from epigsp.graph import Graph

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"

_CRITERIA = []


def record_criterion(number, passed, detail=""):
    """Collect a one-line verdict; printed in the terminal summary."""
    _CRITERIA.append((number, bool(passed), detail))
    print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def random_graph(rng, n, density=0.4, weighted=True):
    w = np.triu(rng.random((n, n)) < density, 1).astype(float)
    if weighted:
        w *= rng.uniform(0.1, 2.0, size=(n, n))
    return Graph(w + w.T)


@pytest.fixture
def path3():
    return Graph(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))


@pytest.fixture
def india_dir():
    return FIXTURES / "india"
