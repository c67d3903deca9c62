import warnings

import numpy as np
import pytest

from hfmra.group import LatticeSpec
from hfmra.hermite import HermiteBasis
from hfmra.plancherel import build_grid
from hfmra.shannon import RankTruncationWarning, build_sinc


@pytest.fixture(scope="session")
def basis():
    return HermiteBasis(64)


@pytest.fixture(scope="session")
def small_basis():
    return HermiteBasis(16)


@pytest.fixture(scope="session")
def grid():
    return build_grid(1, 0, 2, 4)


@pytest.fixture(scope="session")
def sinc(grid):
    return build_sinc(grid, 64)


@pytest.fixture(scope="session")
def frames_grid():
    """Coarse version of the frames grid: bands -1..3 at Q=4."""
    return build_grid(1, -1, 3, 4)


@pytest.fixture(scope="session")
def frames_sys(frames_grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankTruncationWarning)
        return build_sinc(frames_grid, 64)


@pytest.fixture(scope="session")
def lat():
    return LatticeSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
