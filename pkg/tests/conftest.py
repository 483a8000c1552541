import numpy as np
import pytest

from fracburgers.config import preset
from fracburgers.solver import solve


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=20240607, help="seed for randomized tests")


@pytest.fixture(scope="session")
def rng(request):
    return np.random.default_rng(request.config.getoption("--seed"))


@pytest.fixture(scope="session")
def critical():
    """The critical 1-d preset: alpha=1.5, q=q0=0.5, b=1, Gaussian M=1."""
    scn = preset("critical-1d")
    return scn, solve(scn.solver)


@pytest.fixture(scope="session")
def linear():
    scn = preset("linear-1d")
    return scn, solve(scn.solver)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
