import numpy as np
import pytest

from choquard.grid import make_grid
from choquard.groundstate import GroundStateOptions, compute_ground_state
from choquard.params import BENCHMARK


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 8.0)


@pytest.fixture(scope="session")
def grid32_wide():
    return make_grid(32, 16.0)


@pytest.fixture(scope="session")
def bench_gs(grid32_wide):
    """Benchmark ground state via the radial engine, shared by the suite."""
    return compute_ground_state(grid32_wide, BENCHMARK,
                                GroundStateOptions(seed=0))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
