import numpy as np
import pytest

from vp1d.phase_space import Bump, PhaseGrid, TwoBumpParams, init_two_bump

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_grid():
    return PhaseGrid(-10.0, 10.0, 64, 3.0, 48)


@pytest.fixture
def small_state(small_grid):
    params = TwoBumpParams(
        f=Bump(-0.5, 2.0, 0.2, 1.0, 1.0),
        g=Bump(0.5, 3.0, -0.1, 1.5, 1.0),
    )
    return init_two_bump(small_grid, params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
