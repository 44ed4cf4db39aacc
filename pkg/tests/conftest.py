import numpy as np
import pytest

from msgs_lab.datagen import SbmConfig, generate_sbm
from msgs_lab.graph import build_graph


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def k2():
    return build_graph(2, [(0, 1)])


@pytest.fixture
def triangle():
    return build_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path4():
    return build_graph(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star4():
    return build_graph(4, [(0, 1), (0, 2), (0, 3)])


def small_sbm(n=40, seed=0, p_in=0.3, p_out=0.1, feature_dim=4, **kw):
    return generate_sbm(SbmConfig(num_nodes=n, p_in=p_in, p_out=p_out, feature_dim=feature_dim, seed=seed, **kw))


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
