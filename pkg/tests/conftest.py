import numpy as np
import pytest

from fgs.jacobi import PeriodicJacobi, PeriodicTail, PerturbedJacobi

ACCEPTANCE_LINES: list[str] = []

FREE_PJ = PeriodicJacobi((1.0,), (0.0,))
J2_PJ = PeriodicJacobi((1.0, 1.0), (1.0, -1.0))


def random_periodic(rng, p):
    a = rng.uniform(0.5, 2.0, p)
    b = rng.uniform(-1.0, 1.0, p)
    return PeriodicJacobi(tuple(a), tuple(b))


def random_eventual(rng, p, prefix_len=None):
    pj = random_periodic(rng, p)
    L = int(rng.integers(1, 4)) if prefix_len is None else prefix_len
    pa = tuple(rng.uniform(0.5, 2.0, L))
    pb = tuple(rng.uniform(-1.5, 1.5, L))
    return PerturbedJacobi(pa, pb, PeriodicTail(pj, int(rng.integers(0, p))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
