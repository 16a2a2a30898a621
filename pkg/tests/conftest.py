import numpy as np
import pytest

from psusy import DwsParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fig1():
    """Captioned nuclear parameters: A0=40, a=0.65, q=1, c=0."""
    return DwsParams.from_mass_number(40)


@pytest.fixture
def real_dws():
    """c > 0 configuration whose STANDARD plus-branch superpotential is real."""
    return DwsParams(45.7, 0.65, 1.5, 1.25 * 40 ** (1 / 3), c=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
