import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from amlab.action import discretize
from amlab.lagrangian import catalog

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cat():
    return catalog()


@pytest.fixture(scope="session")
def flat2_20(cat):
    return discretize(cat.flat2, 20, 0.1)


@pytest.fixture(scope="session")
def pendulum_200(cat):
    return discretize(cat.pendulum, 200, 0.05)


@pytest.fixture(scope="session")
def homoclinic_32(cat):
    return discretize(cat.mane_homoclinic, 32, 0.1)


@pytest.fixture(scope="session")
def shear_32(cat):
    return discretize(cat.mane_shear, 32, 0.1)


def pl_quadratic(lo=-2.0, hi=2.0, step=0.1, d=1):
    from amlab.convex_core import convexify

    ax = np.round(np.arange(lo, hi + step / 2, step), 12)
    if d == 1:
        return convexify(ax[:, None], 0.5 * ax**2, 1)
    P = np.array([[a, b] for a in ax for b in ax])
    return convexify(P, 0.5 * np.sum(P**2, axis=1), 2)


# one PASS/FAIL line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
