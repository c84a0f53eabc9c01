import numpy as np
import pytest

from demix.constitutive import ArcsinDeGennes
from demix.energy import ModelParams
from demix.grid import Grid1D, Profile


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def arcsin_model():
    return ArcsinDeGennes()


@pytest.fixture
def unit_grid():
    return Grid1D(1.0, 64)


def make_params(model, chi=0.0, m1=1.0, m2=1.0, d=1):
    return ModelParams(chi=chi, m1=m1, m2=m2, model=model, d=d)


def interior_profile(grid: Grid1D, rng, lo=0.15, hi=0.85) -> Profile:
    vals = rng.uniform(lo, hi, grid.cells)
    return Profile(grid, vals)
