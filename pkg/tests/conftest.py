import numpy as np
import pytest

from releq.bath import BathParams


@pytest.fixture(scope="session")
def fig_bath() -> BathParams:
    """Bath parameters used by the headline oscillator and tls scenarios."""
    return BathParams(W=10.0, beta=3.0, omega0=1.0)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
