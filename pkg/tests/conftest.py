import numpy as np
import pytest

from igac import GeodesicState, StepControl, build_manifold, integrate_geodesic, unit_speed


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_point(m, rng):
    """In-domain point: locations ~ N(0, 2), scales log-uniform in [0.1, 10]."""
    lo = np.asarray(m.domain.lower)
    out = np.empty(m.dimension)
    for k in range(m.dimension):
        out[k] = 10 ** rng.uniform(-1, 1) if np.isfinite(lo[k]) else rng.normal(0, 2)
    return out


def unit_geodesic(m, theta, direction, tau_max, t_eval=None, rtol=1e-10, atol=1e-12):
    theta = np.asarray(theta, dtype=float)
    v = unit_speed(m, theta, direction)
    return integrate_geodesic(m, GeodesicState(0.0, theta, v), tau_max, StepControl(rtol=rtol, atol=atol), t_eval)


@pytest.fixture
def gaussian1():
    return build_manifold("gaussian", {"l": 1})


# acceptance lines, printed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
