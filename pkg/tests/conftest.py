import numpy as np
import pytest

from app.models import Params
from app.services.divcurl import grid_for, make_grid


def make_params(**overrides) -> Params:
    base = dict(eps=0.1, mu=0.5, nx=32, nz=16)
    base.update(overrides)
    return Params(**base)


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def grid(params):
    return grid_for(params)


@pytest.fixture
def fine_grid():
    return make_grid(64, 24, 2.0 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
