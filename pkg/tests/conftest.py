import numpy as np
import pytest

from skdv.fields import SimState
from skdv.grid import Grid
from skdv.stability import PerturbationSpec, make_perturbation, soliton_state


@pytest.fixture(scope="session")
def grid():
    return Grid(1024, 80.0)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(512, 80.0)


@pytest.fixture(scope="session")
def soliton(grid):
    return soliton_state(grid, 1.0, 2)


def random_smooth_state(rng, grid, k=2, scale=None):
    """Localized random state; bumps sit in the central half of the box."""
    if scale is None:
        scale = 10 ** rng.uniform(-2, 1)
    spec = PerturbationSpec(seed=int(rng.integers(2**31)), amplitude=scale,
                            n_bumps=int(rng.integers(1, 6)), zero_mean_xi=bool(rng.integers(2)))
    du, dxi = make_perturbation(spec, grid, k)
    return SimState(grid, 0.0, du, dxi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
