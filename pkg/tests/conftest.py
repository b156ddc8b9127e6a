import numpy as np
import pytest

from prlandscape import sample_ensemble


@pytest.fixture(scope="session")
def small_ensemble():
    """n=8, m=64 ensemble shared by derivative and stationarity tests."""
    return sample_ensemble(8, 64, "random", 42)


@pytest.fixture(scope="session")
def desk_ensemble():
    """n=16, m=444 ensemble at the default verifier scale."""
    return sample_ensemble(16, 444, "random", 123)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=20240817))
