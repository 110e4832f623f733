import numpy as np
import pytest

from mfdesign.bundle import fit_bundle
from mfdesign.data import default_wavelength_grid, synth_generate


@pytest.fixture(scope="session")
def desk_grid():
    return default_wavelength_grid(101)


@pytest.fixture(scope="session")
def desk_dataset(desk_grid):
    """Desk-scale training set: 2,000 synthetic samples on a 101-point grid."""
    return synth_generate(2000, desk_grid, noise_sd=0.01, seed=42)


@pytest.fixture(scope="session")
def desk_bundle(desk_dataset):
    """Full-size bundle (450 forward trees, 20 inverse trees, 50 components)."""
    return fit_bundle(
        desk_dataset,
        n_components=50,
        forward_trees=450,
        inverse_trees=20,
        max_depth=10,
        seed=7,
    )


@pytest.fixture(scope="session")
def desk_test(desk_grid):
    """200 held-out synthetic targets with known true parameters."""
    return synth_generate(200, desk_grid, noise_sd=0.01, seed=4242)


@pytest.fixture(scope="session")
def small_grid():
    return default_wavelength_grid(51)


@pytest.fixture(scope="session")
def small_dataset(small_grid):
    return synth_generate(400, small_grid, noise_sd=0.01, seed=3)


@pytest.fixture(scope="session")
def small_bundle(small_dataset):
    """Quick bundle for module-level tests."""
    return fit_bundle(
        small_dataset,
        n_components=20,
        forward_trees=40,
        inverse_trees=20,
        max_depth=10,
        seed=11,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
