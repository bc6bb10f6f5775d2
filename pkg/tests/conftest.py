import numpy as np
import pytest

from ridgenow.bridge import make_synthetic_panel


@pytest.fixture(scope="session")
def synthetic_panel():
    return make_synthetic_panel(n_quarters=70, n_alt=8, n_active_alt=3, seed=42)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240801)
