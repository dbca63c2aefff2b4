import numpy as np
import pytest

from airopt.spectral import ChannelTaps, FrequencyGrid, SampledSpectrum


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid(4096)


@pytest.fixture(scope="session")
def four_tap_channel():
    """Unit-energy complex reference channel used across the suite."""
    return ChannelTaps([0.5, 0.5, -0.5, -0.5j])


@pytest.fixture
def flat_spectrum(grid):
    return SampledSpectrum(grid, np.ones(grid.size))


def random_spectrum(grid, seed, memory=3):
    """Strictly positive random power spectrum from random taps plus a floor."""
    rng = np.random.default_rng(seed)
    taps = rng.standard_normal(memory + 1) + 1j * rng.standard_normal(memory + 1)
    response = np.exp(-1j * np.outer(grid.omegas, np.arange(memory + 1))) @ taps
    return SampledSpectrum(grid, response.real ** 2 + response.imag ** 2 + 0.05)
