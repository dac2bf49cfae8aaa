import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fluidcorrect.demand import DemandScenarioSet
from fluidcorrect.network import ServiceNetwork, six_class_hospital_network, two_class_flexible_network

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=40)
settings.load_profile("default")


def random_network(rng, n=None, m=None, max_n=4, max_m=4, integer=False):
    """Random valid network: every class and pool has at least one activity."""
    n = n or int(rng.integers(1, max_n + 1))
    m = m or int(rng.integers(1, max_m + 1))
    edges = {(i, int(rng.integers(m))) for i in range(n)}
    edges |= {(int(rng.integers(n)), h) for h in range(m)}
    for _ in range(int(rng.integers(0, n * m))):
        edges.add((int(rng.integers(n)), int(rng.integers(m))))
    edges = sorted(edges)
    k = len(edges)
    R = np.zeros((n, k))
    A = np.zeros((m, k))
    for j, (i, h) in enumerate(edges):
        R[i, j] = 1.0
        A[h, j] = float(rng.integers(1, 3)) if integer else rng.uniform(0.5, 2.0)
    if integer:
        c = rng.integers(1, 6, size=m).astype(float)
        p = rng.integers(8, 30, size=n).astype(float)
    else:
        c = rng.uniform(0.5, 3.0, size=m)
        p = rng.uniform(4.0, 12.0, size=n)
    return ServiceNetwork(R, A, c, p)


def random_scenarios(rng, n, T, Z, rational=True, high=6):
    paths = rng.integers(0, high, size=(Z, T, n)).astype(float)
    if rational:
        counts = rng.integers(1, 5, size=Z)
        weights = counts / counts.sum()
    else:
        weights = None
    return DemandScenarioSet(paths, weights)


@pytest.fixture
def flex_net():
    return two_class_flexible_network()


@pytest.fixture
def hospital_net():
    return six_class_hospital_network(24)


@pytest.fixture
def split_demand():
    return DemandScenarioSet(np.array([[[3.0, 0.0]], [[0.0, 3.0]]]))


@pytest.fixture
def alternating_demand():
    return DemandScenarioSet.single([[3.0, 0.0], [0.0, 3.0]])


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, ok, detail, elapsed):
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  ({elapsed:.1f}s)  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
