import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from convexpolar.legendre import SampledFunction

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


def quad(t):
    return 0.5 * np.dot(t, t)


def quad_grad(t):
    return np.asarray(t, dtype=float)


def shifted_quadratic(t):
    return t * t + t + 3


def shifted_quadratic_grad(t):
    return 2 * t + 1


def shifted_quadratic_conj(eta):
    # closed form of sup_t (t eta - t^2 - t - 3)
    return (np.asarray(eta) ** 2 - 2 * np.asarray(eta) - 11) / 4


def sampled(F, lo, hi, count, grad=None):
    return SampledFunction.from_callable(F, np.linspace(lo, hi, count), grad=grad)


@pytest.fixture
def q_samples():
    return sampled(quad, -2.0, 2.0, 200, quad_grad)


@pytest.fixture
def shifted_samples():
    return sampled(shifted_quadratic, -3.0, 3.0, 200, shifted_quadratic_grad)


def random_symmetric_cost(rng, n=1, max_cond=1e3):
    """Well-conditioned random symmetric cost matrix near a scaled Legendre matrix."""
    from convexpolar.polarity import CostMatrix, legendre_matrix

    CL = legendre_matrix(n).C
    while True:
        P = 0.3 * rng.standard_normal((n + 2, n + 2))
        C = CL + 0.5 * (P + P.T)
        if np.linalg.cond(C) <= max_cond:
            return CostMatrix(C)


def random_cost(rng, n=1, max_cond=1e6):
    from convexpolar.polarity import CostMatrix

    while True:
        C = rng.standard_normal((n + 2, n + 2))
        if np.linalg.cond(C) <= max_cond:
            return CostMatrix(C)
