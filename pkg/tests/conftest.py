import numpy as np
import pytest

from ifpopt.graph import paper_schedule
from ifpopt.objective import paper_objectives, solve_centralized_optimum


@pytest.fixture(scope="session")
def specs():
    return paper_objectives()


@pytest.fixture(scope="session")
def opt(specs):
    return solve_centralized_optimum(specs, 1.0, tol=1e-10)


@pytest.fixture(scope="session")
def schedule():
    return paper_schedule(2.0)


@pytest.fixture(scope="session")
def dt_schedule():
    return paper_schedule(20)


@pytest.fixture
def x0():
    return np.random.default_rng(0).uniform(0.0, 1.0, size=(5, 1))
