import numpy as np
import pytest

from src.ambrosetti_prodi.context import prepare_problem
from src.discretization.field import Field
from src.discretization.grid import DomainSpec, build_grid
from src.discretization.scheme import discretize
from src.operators.controlled import fucik_operator, laplacian_operator

PI = float(np.pi)


@pytest.fixture(scope="session")
def grid100():
    return build_grid(DomainSpec(extents=((0.0, PI),), n=(100,)))


@pytest.fixture(scope="session")
def grid200():
    return build_grid(DomainSpec(extents=((0.0, PI),), n=(200,)))


@pytest.fixture(scope="session")
def fucik():
    return fucik_operator(0.5, 1.5)


@pytest.fixture(scope="session")
def fucik_d(fucik, grid100):
    return discretize(fucik, grid100)


@pytest.fixture(scope="session")
def laplace_d(grid100):
    return discretize(laplacian_operator(1), grid100)


@pytest.fixture(scope="session")
def fucik_ctx(fucik_d, grid100):
    """Fučík (0.5, 1.5) with h = 0 on (0, π), n = 100."""
    return prepare_problem(fucik_d, Field.zeros(grid100))


@pytest.fixture
def sine(grid100):
    return Field.from_function(grid100, np.sin)
