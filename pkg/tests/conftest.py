import numpy as np
import pytest

from condred.fields import Field, GridSpec
from condred.hermite import build_basis


@pytest.fixture(scope="session")
def basis32():
    """Default 1-D transverse basis used throughout the suite."""
    return build_basis(dim_d=1, num_modes=32, num_quad=96)


@pytest.fixture(scope="session")
def basis2d():
    """Small 2-D transverse basis (tensor product)."""
    return build_basis(dim_d=2, num_modes=8, num_quad=24)


@pytest.fixture(scope="session")
def grid256():
    """Default experiment grid (n = d = 1)."""
    return GridSpec()


def decaying_coefficients(rng, num_modes, rate=0.4, lead_shape=()):
    """Random complex coefficient vector with spectral decay e^{-rate*k}.

    Realistic transverse profiles are smooth, so their eigenmode
    coefficients decay fast; test fields should look the same.
    """
    k = np.arange(num_modes)
    envelope = np.exp(-rate * k)
    shape = tuple(lead_shape) + (num_modes,)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return raw * envelope


def random_smooth_field(rng, grid, basis, rate=0.6):
    """Random field that honors both decay invariants: smooth Gaussian-based
    x-profiles per mode, exponentially decaying transverse spectrum."""
    x = grid.x_mesh()[0] if grid.dim_n == 1 else grid.x_norm_sq() ** 0.5
    env = np.exp(-0.5 * x ** 2)
    data = np.zeros(grid.x_shape + (grid.total_modes,), dtype=complex)
    decay = np.exp(-rate * basis.eigenvalues)
    for k in range(grid.total_modes):
        a, b, c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        data[..., k] = (a + b * x + 0.5 * c * x ** 2) * env * decay[k]
    return Field(grid, data, 0.0)
