import numpy as np
import pytest

from orbitresponse.model import CircleMapFamily, TrigPoly, cos_poly, doubling, sin_poly


@pytest.fixture
def nonlinear():
    """2x + 0.05 sin 2πx pushed along sin 2πx."""
    return CircleMapFamily(2, sin_poly(0.05), sin_poly(1.0), 0.1)


@pytest.fixture
def doubling_sin():
    return doubling(sin_poly(1.0))


@pytest.fixture
def composed():
    """2x + t sin 4πx, the map (Id + t sin 2π·) ∘ (2x)."""
    return CircleMapFamily(2, TrigPoly(), sin_poly(1.0, 2), 0.05)


@pytest.fixture
def g():
    return cos_poly()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
