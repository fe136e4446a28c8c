import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def random_unit(rng, space, n):
    """A uniform-ish random point on the unit sphere of the space."""
    while True:
        x = rng.standard_normal(n)
        if np.max(np.abs(x)) > 1e-8:
            return space.unit(x)
