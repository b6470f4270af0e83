import numpy as np
import pytest

from src.application.services.profile_service import constant_wave
from src.domain import spectral
from src.domain.entities import RealField


@pytest.fixture
def unit_grid():
    """N = 32 on [-1, 1]."""
    return spectral.make_grid(32, 1.0)


@pytest.fixture
def cosine(unit_grid):
    return RealField.from_function(unit_grid, lambda x: np.cos(np.pi * x))


@pytest.fixture
def constant_profile(unit_grid):
    """phi = 1, omega = 1 at alpha = 1, lambda = 2, a = 0."""
    return constant_wave(2.0, 0.0, unit_grid, 1.0)
