import numpy as np
import pytest

from wavesift.mesh import SamplingBox, create_uniform_grid, refine
from wavesift.physics import assemble_operators
from wavesift.scenarios import incidence_directions, receiver_positions

K = 2 * np.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def ex1_grid():
    return create_uniform_grid(SamplingBox.cube(1.2, 2), 0.4)


@pytest.fixture(scope="session")
def ex1_ops(ex1_grid):
    return assemble_operators(ex1_grid, receiver_positions(30, 5.0, 2), K)


@pytest.fixture(scope="session")
def ex1_level1_ops(ex1_grid):
    return assemble_operators(refine(ex1_grid), receiver_positions(30, 5.0, 2), K)


@pytest.fixture(scope="session")
def six_incidences():
    return incidence_directions(6, 2)
