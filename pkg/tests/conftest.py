import numpy as np
import pytest
from hypothesis import strategies as st

from fuzzyvolterra.fuzzy import FuzzyNumber
from fuzzyvolterra.quadrature import FuzzyTrajectory, TimeGrid


def random_fuzzy(rng, levels=32, scale=5.0):
    """A valid band: core [m1, m2], endpoints spreading outward as alpha decreases."""
    m1 = rng.uniform(-scale, scale)
    m2 = m1 + rng.uniform(0, scale)
    dl = rng.uniform(0, scale / levels, levels)
    du = rng.uniform(0, scale / levels, levels)
    lower = m1 - np.concatenate([np.cumsum(dl[::-1])[::-1], [0.0]])
    upper = m2 + np.concatenate([np.cumsum(du[::-1])[::-1], [0.0]])
    return FuzzyNumber(lower, upper)


def random_trajectory(rng, grid, levels=8, scale=3.0):
    return FuzzyTrajectory.from_values(grid, [random_fuzzy(rng, levels, scale) for _ in range(len(grid))])


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@st.composite
def fuzzy_numbers(draw, levels=16):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    scale = draw(st.floats(min_value=1e-3, max_value=1e3))
    return random_fuzzy(np.random.default_rng(seed), levels, scale)


@pytest.fixture
def small_grid():
    return TimeGrid.uniform(1.0, 12)
