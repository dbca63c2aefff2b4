"""Shaping-pulse design for the bandlimited AWGN channel.

The channel passes |f| <= W untouched and kills everything else, so the
discrete-time model seen by a symbol-rate detector is a brickwall power
spectrum occupying a 2WT fraction of [-pi, pi).  For 2WT < 1 the symbol
rate is beyond Nyquist and the interference is entirely self-inflicted;
the pulse is then designed by the same spectrum optimization as any other
channel, with root-raised-cosine pulses as the classical baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimize import OptimizedFilter, OptimizerOptions, optimize_for_spectrum
from .shortening import ShorteningProblem, ShorteningSolution, solve_shortening
from .spectral import (
    DEFAULT_GRID,
    FrequencyGrid,
    SampledSpectrum,
    TWO_PI,
)

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class FtnScenario:
    """Bandlimited AWGN operating point: one-sided bandwidth W [Hz],
    symbol time T [s], and noise density N0."""

    bandwidth: float
    symbol_time: float
    noise_density: float

    def __post_init__(self):
        for name in ("bandwidth", "symbol_time", "noise_density"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def product(self) -> float:
        """Time-bandwidth product 2WT; below one is the faster-than-Nyquist regime."""
        return 2.0 * self.bandwidth * self.symbol_time

    @property
    def is_ftn(self) -> bool:
        return self.product < 1.0


def brickwall_spectrum(scenario: FtnScenario, grid: FrequencyGrid = DEFAULT_GRID) -> SampledSpectrum:
    """Folded channel power: one on |w| <= 2WT*pi (closed inequality), else zero.

    For 2WT >= 1 the folded spectrum is flat.
    """
    if scenario.product >= 1.0:
        return SampledSpectrum(grid, np.ones(grid.size))
    cutoff = scenario.product * np.pi
    values = (np.abs(grid.omegas) <= cutoff + _EDGE_TOL).astype(float)
    return SampledSpectrum(grid, values)


def _rc_power_density(freqs: np.ndarray, t_nyq: float, alpha: float) -> np.ndarray:
    """Unit-energy squared-magnitude RRC spectrum (a raised cosine in f)."""
    af = np.abs(freqs)
    f1 = (1.0 - alpha) / (2.0 * t_nyq)
    f2 = (1.0 + alpha) / (2.0 * t_nyq)
    out = np.zeros_like(af)
    if alpha == 0.0:
        out[af < f1 * (1.0 - _EDGE_TOL)] = t_nyq
        out[np.isclose(af, f1, rtol=1e-9, atol=0.0)] = 0.5 * t_nyq
        return out
    out[af <= f1] = t_nyq
    roll = (af > f1) & (af < f2)
    out[roll] = 0.5 * t_nyq * (1.0 + np.cos(np.pi * t_nyq / alpha * (af[roll] - f1)))
    return out


def rrc_folded_spectrum(
    alpha: float,
    scenario: FtnScenario,
    grid: FrequencyGrid = DEFAULT_GRID,
) -> SampledSpectrum:
    """Symbol-rate folded power spectrum of a root-raised-cosine pulse.

    The pulse occupies the full channel bandwidth, i.e. its Nyquist
    interval satisfies (1+alpha)/(2*t_nyq) = W, and it is transmitted
    every ``symbol_time`` seconds.  Folding terms k in {-1, 0, 1} cover
    every 2WT <= 1 operating point.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"roll-off must lie in [0, 1], got {alpha}")
    t = scenario.symbol_time
    t_nyq = (1.0 + alpha) / (2.0 * scenario.bandwidth)
    freqs = grid.omegas / (TWO_PI * t)
    values = np.zeros(grid.size)
    for k in (-1, 0, 1):
        values += _rc_power_density(freqs - k / t, t_nyq, alpha)
    values /= t
    # Pin the grid mean to exactly one: the roll-off kinks leave the
    # rectangle rule a hair off unit pulse energy.
    return SampledSpectrum(grid, values / np.mean(values))


@dataclass(frozen=True)
class PulseTaps:
    """Windowed time-domain pulse samples at the symbol rate."""

    taps: np.ndarray
    offset: int
    sample_time: float
    window: str
    stopband_leakage: float

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.taps.size) + self.offset) * self.sample_time


_WINDOWS = {
    "kaiser": lambda n: np.kaiser(n, 8.0),
    "rect": lambda n: np.ones(n),
    "hann": lambda n: np.hanning(n),
}


def pulse_time_domain(
    spectrum: SampledSpectrum,
    scenario: FtnScenario,
    num_taps: int = 257,
    window: str = "kaiser",
) -> PulseTaps:
    """Time-domain pulse from the zero-phase square root of the spectrum.

    Samples p(nT) for n = -(num_taps-1)/2 .. (num_taps-1)/2, tapered by the
    chosen window, with the stopband leakage (energy outside |f| <= W
    relative to the total) measured on the truncated pulse and reported.
    """
    if num_taps < 1 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and positive, got {num_taps}")
    if window not in _WINDOWS:
        raise ValueError(f"unknown window {window!r}; choose from {sorted(_WINDOWS)}")
    half = num_taps // 2
    t = scenario.symbol_time
    root = np.sqrt(spectrum.values)
    n = np.arange(-half, half + 1)
    raw = np.exp(1j * np.outer(n, spectrum.grid.omegas)) @ root / spectrum.grid.size
    raw /= np.sqrt(t)
    if np.max(np.abs(raw.imag)) <= 1e-12 * max(np.max(np.abs(raw.real)), 1e-300):
        raw = raw.real
    taps = raw * _WINDOWS[window](num_taps)

    nfft = 1 << max(14, int(np.ceil(np.log2(8 * num_taps))))
    response = np.fft.fft(taps, nfft)
    density = response.real ** 2 + response.imag ** 2
    freqs = np.fft.fftfreq(nfft, d=t)
    total = float(np.sum(density))
    inband = float(np.sum(density[np.abs(freqs) <= scenario.bandwidth * (1.0 + 1e-9)]))
    leakage = max(0.0, 1.0 - inband / total) if total > 0.0 else 1.0
    return PulseTaps(taps=taps, offset=-half, sample_time=t, window=window,
                     stopband_leakage=leakage)


@dataclass(frozen=True)
class PulseDesign:
    """Designed shaping pulse with its receiver and rate figures.

    ``air`` is the Gaussian-input rate in bits per channel use and
    ``ase`` the spectral efficiency air/(W*T) in bits/s/Hz.
    """

    scenario: FtnScenario
    discrete_spectrum: SampledSpectrum
    pulse: PulseTaps
    receiver: ShorteningSolution
    transmit: OptimizedFilter | None
    air: float
    ase: float

    def continuous_spectrum(self, freqs: np.ndarray) -> np.ndarray:
        """|P(f)|^2 = T * (discrete spectrum at w = 2*pi*T*f), zero outside."""
        w = TWO_PI * self.scenario.symbol_time * np.asarray(freqs, dtype=float)
        vals = np.interp(w, self.discrete_spectrum.grid.omegas,
                         self.discrete_spectrum.values, left=0.0, right=0.0)
        return self.scenario.symbol_time * vals


def optimize_pulse(
    scenario: FtnScenario,
    memory: int,
    opts: OptimizerOptions | None = None,
    grid: FrequencyGrid = DEFAULT_GRID,
    num_taps: int = 257,
    window: str = "kaiser",
    channel_power: SampledSpectrum | None = None,
) -> PulseDesign:
    """Design the rate-optimal shaping pulse for the scenario.

    For 2WT >= 1 the flat in-band spectrum is optimal and accepted without
    any search (any vestigial-symmetry pulse achieves it); below Nyquist
    the spectrum optimizer runs against the brickwall channel with the
    out-of-band values pinned to zero.  A frequency-selective in-band
    response may be substituted for the flat brickwall via
    ``channel_power`` (same grid; zero means out of band), in which case
    the search runs even at 2WT >= 1.
    """
    h2 = channel_power if channel_power is not None else brickwall_spectrum(scenario, grid)
    n0 = scenario.noise_density
    if channel_power is None and scenario.product >= 1.0:
        spectrum = SampledSpectrum(grid, np.ones(grid.size))
        receiver = solve_shortening(ShorteningProblem(spectrum, n0, memory))
        transmit = None
        air = receiver.air
    else:
        even = bool(np.allclose(h2.values[1:], h2.values[1:][::-1], atol=1e-12))
        transmit = optimize_for_spectrum(h2, n0, memory, opts, symmetric=even)
        spectrum = transmit.spectrum
        receiver = transmit.receiver
        air = transmit.air
    pulse = pulse_time_domain(spectrum, scenario, num_taps, window)
    ase = air / (scenario.bandwidth * scenario.symbol_time)
    return PulseDesign(scenario=scenario, discrete_spectrum=spectrum, pulse=pulse,
                       receiver=receiver, transmit=transmit, air=air, ase=ase)


def ebn0_from_air(air: float, noise_density: float) -> float:
    """Eb/N0 in dB for a unit-energy constellation and pulse: 1/(air*N0)."""
    if air <= 0.0:
        raise ValueError(f"air must be positive, got {air}")
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")
    return float(10.0 * np.log10(1.0 / (air * noise_density)))


def awgn_ase_bound(ebn0_db: float) -> float:
    """Unconstrained AWGN spectral-efficiency ceiling at a given Eb/N0.

    Solves Eb/N0 = (2^(eta/2) - 1)/(eta/2) for eta; returns 0 below the
    -1.59 dB limit.
    """
    lin = 10.0 ** (ebn0_db / 10.0)
    if lin <= np.log(2.0):
        return 0.0

    def gap(eta: float) -> float:
        x = 0.5 * eta
        return (2.0 ** x - 1.0) / x - lin

    lo, hi = 1e-9, 2.0
    while gap(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
