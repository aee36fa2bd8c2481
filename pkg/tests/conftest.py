import numpy as np
import pytest
from hypothesis import settings

from qgmoc.modulus import KnvModulus

settings.register_profile("qgmoc", deadline=None, max_examples=25)
settings.load_profile("qgmoc")


@pytest.fixture
def reference_modulus():
    return KnvModulus(delta=0.01, gamma=0.05, r=1.2, alpha=0.6, s=0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_random_field(grid, rng, kmax=5):
    """Band-limited real field with random coefficients on |k|_inf <= kmax."""
    from qgmoc.spectral import RealField

    x1, x2 = grid.mesh
    v = np.zeros_like(x1)
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            a, b = rng.standard_normal(2)
            v += a * np.cos(k1 * x1 + k2 * x2) + b * np.sin(k1 * x1 + k2 * x2)
    return RealField(grid, v)
