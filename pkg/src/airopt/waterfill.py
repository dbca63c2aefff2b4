"""Classical waterfilling over a sampled channel power spectrum, the
Gaussian capacity it achieves, and the effective memory of the combined
transmit-plus-channel response.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .spectral import (
    TWO_PI,
    ChannelTaps,
    FrequencyGrid,
    SampledSpectrum,
    dtft_power,
)

_POWER_TOL = 1e-12


@dataclass(frozen=True)
class WaterfillSolution:
    theta: float
    spectrum: SampledSpectrum
    capacity: float


def _fill_gains(gains: np.ndarray, noise_density: float, theta: float) -> np.ndarray:
    """max(0, theta - N0/gain) nodewise; zero where the gain is zero."""
    out = np.zeros_like(gains)
    live = gains > 0.0
    out[live] = np.maximum(0.0, theta - noise_density / gains[live])
    return out


def solve_common_level(
    gains: np.ndarray,
    noise_density: float,
    spacing: float,
    target_power: float,
    max_iter: int = 500,
) -> float:
    """Water level theta such that the total allocated power hits the target.

    ``gains`` may be any stack of nonnegative gain arrays sharing one level
    (rows = parallel subchannels).  Power is continuous and nondecreasing in
    theta, so a geometrically expanded bracket plus bisection suffices.
    """
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")
    live = gains[gains > 0.0]
    if live.size == 0:
        raise ValueError("all channel gains are zero")

    def power(theta: float) -> float:
        return spacing * float(np.sum(_fill_gains(gains, noise_density, theta)))

    lo = noise_density / float(np.max(live))          # nothing active yet
    hi = noise_density / float(np.min(live)) + target_power
    while power(hi) < target_power:
        hi = lo + 2.0 * (hi - lo)
        if not np.isfinite(hi):
            raise NumericalError("water level bracket expansion diverged")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        p = power(mid)
        if abs(p - target_power) <= _POWER_TOL * target_power:
            return mid
        if p < target_power:
            lo = mid
        else:
            hi = mid
    raise NumericalError("water level bisection did not converge")


def waterfill(
    channel_power: SampledSpectrum,
    noise_density: float,
    target_power: float = TWO_PI,
) -> WaterfillSolution:
    """Capacity-achieving transmit spectrum and rate for the channel.

    Capacity is the full-memory Gaussian rate
    (1/2pi) int log2(1 + H2*Sp/N0) dw of the returned spectrum.
    """
    gains = channel_power.values
    theta = solve_common_level(gains, noise_density, channel_power.grid.spacing,
                               target_power)
    values = _fill_gains(gains, noise_density, theta)
    spectrum = SampledSpectrum(channel_power.grid, values)
    capacity = float(np.mean(np.log2(1.0 + gains * values / noise_density)))
    return WaterfillSolution(theta=theta, spectrum=spectrum, capacity=capacity)


def combined_memory(
    channel: ChannelTaps,
    transmit_spectrum: SampledSpectrum,
    threshold_rel: float = 1e-6,
    grid: FrequencyGrid | None = None,
) -> int:
    """Effective memory of the combined channel-plus-transmit response.

    Forms Sv = |H|^2 * Sp, inverse-transforms it to autocorrelation lags,
    and returns the largest lag index whose magnitude exceeds
    ``threshold_rel`` times the zero lag.  Discretization blurs exact
    supports, hence the relative threshold.
    """
    grid = grid or transmit_spectrum.grid
    h2 = dtft_power(channel, grid)
    sv = h2.values * transmit_spectrum.values
    # Rectangle-rule Fourier coefficients of Sv via an FFT reordered to the
    # [-pi, pi) node layout: lag k picks up (-1)^k from the -pi origin.
    m = grid.size
    raw = np.fft.ifft(sv)
    ks = np.arange(m // 2)
    lags = raw[: m // 2] * (-1.0) ** ks
    mags = np.abs(lags)
    live = np.flatnonzero(mags > threshold_rel * mags[0])
    return int(live[-1]) if live.size else 0
