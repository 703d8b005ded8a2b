import numpy as np
import pytest

from sobdecomp import FormParams, Mesh, cantor_complement, normalize_intervals


def hat(center, width):
    return lambda x: np.maximum(0.0, 1.0 - np.abs(x - center) / (width / 2))


@pytest.fixture(scope="session")
def single_gap():
    return normalize_intervals([(-4, 0), (1, 4)], (-4, 4))


@pytest.fixture(scope="session")
def half():
    return FormParams(0.5)


@pytest.fixture(scope="session")
def gap_mesh(single_gap):
    return Mesh.from_open_set(single_gap, 1 / 64)


@pytest.fixture(scope="session")
def cantor3():
    return cantor_complement((0, 1), 3, 1 / 3, (-0.5, 1.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
