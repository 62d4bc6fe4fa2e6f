import numpy as np
import pytest

SQRT_2PI = np.sqrt(2.0 * np.pi)
SQRT_PI = np.sqrt(np.pi)


def phi(z):
    return np.exp(-0.5 * np.square(z)) / SQRT_2PI


def phi_scaled(sd, u):
    return phi(np.asarray(u) / sd) / sd


@pytest.fixture(scope="session")
def gaussian_kernel():
    from semistart.kernels import kernel_props
    return kernel_props("gaussian")
