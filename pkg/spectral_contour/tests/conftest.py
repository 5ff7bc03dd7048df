"""
Shared fixtures for the spectral_contour test suite.

Contours are immutable and cached by identity, so the common ones are
built once per session.
"""

import numpy as np
import pytest

from spectral_contour.contour import ContourSpec, make_contour
from spectral_contour.generators import Polynomial


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-size acceptance sweeps (deselect with -m "not slow")')


# ==================== Contours ====================

@pytest.fixture(scope='session')
def unit_circle():
    """Unit circle, N=256."""
    return make_contour(ContourSpec.circle(0j, 1.0, nodes=256))


@pytest.fixture(scope='session')
def shifted_circle():
    """Circle of radius 2 about 0.5 - 0.25i, N=256."""
    return make_contour(ContourSpec.circle(0.5 - 0.25j, 2.0, nodes=256))


@pytest.fixture(scope='session')
def small_circle():
    """Circle of radius 0.3 about i, N=256."""
    return make_contour(ContourSpec.circle(1j, 0.3, nodes=256))


@pytest.fixture(scope='session')
def ellipse():
    """Ellipse with semi-axes 2 and 1, N=256."""
    return make_contour(ContourSpec.ellipse(0j, 2.0, 1.0, nodes=256))


@pytest.fixture(scope='session')
def star():
    """Three-lobed star r = 1 + 0.3 cos(3t), N=256 (not convex)."""
    return make_contour(ContourSpec.star(1.0, 0.3, 3, nodes=256))


@pytest.fixture(scope='session')
def convex_contours(unit_circle, ellipse):
    return {'circle': unit_circle, 'ellipse': ellipse}


# ==================== Matrices and functions ====================

@pytest.fixture
def nilpotent():
    """[[0, 2], [0, 0]]: norm 2, numerical range the closed unit disk."""
    return np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)


@pytest.fixture
def identity_function():
    """f(z) = z."""
    return Polynomial((0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


# ==================== Helpers ====================

def random_matrix(rng, dim, scale=1.0):
    """Complex Gaussian matrix."""
    return scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))


def random_hermitian(rng, dim):
    M = random_matrix(rng, dim)
    return 0.5 * (M + M.conj().T)
