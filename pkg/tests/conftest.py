import numpy as np
import pytest

from prcs_tomo.quantum_math import uniform_grid

PAPER_MUS = (0.178, 0.436, 2.20)


@pytest.fixture
def x_wide():
    return uniform_grid(-6.0, 6.0, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
