"""Frequency-domain primitives: grids, power spectra, Hermitian
trigonometric polynomials, and power normalization via the water level.

All integrals over [-pi, pi) use the uniform rectangle rule, which is
exact for alias-free trigonometric polynomials.  Grid size therefore
controls correctness, not just resolution, and operations validate it
against the polynomial degrees they touch.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import GridError, NumericalError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``size`` angular frequencies -pi + 2*pi*m/size."""

    size: int

    def __post_init__(self):
        if self.size < 8 or self.size % 2 != 0:
            raise GridError(f"grid size must be even and >= 8, got {self.size}")

    @functools.cached_property
    def omegas(self) -> np.ndarray:
        w = -np.pi + TWO_PI * np.arange(self.size) / self.size
        w.flags.writeable = False
        return w

    @property
    def spacing(self) -> float:
        return TWO_PI / self.size

    def require_alias_free(self, degree: int) -> None:
        """Raise GridError unless degree-``degree`` products are alias-free."""
        needed = 4 * (degree + 2)
        if self.size < needed:
            raise GridError(
                f"grid size {self.size} too coarse for trigonometric degree "
                f"{degree}; need at least {needed}"
            )


DEFAULT_GRID = FrequencyGrid(4096)


@functools.lru_cache(maxsize=32)
def _harmonics(grid: FrequencyGrid, kmax: int) -> np.ndarray:
    """Rows exp(+1j*k*omega) for k = 0..kmax, cached per (grid, kmax)."""
    table = np.exp(1j * np.outer(np.arange(kmax + 1), grid.omegas))
    table.flags.writeable = False
    return table


@dataclass(frozen=True)
class ChannelTaps:
    """Finite impulse response of a discrete-time channel.

    Leading and trailing zero taps are trimmed on construction, so the
    stored memory is the true memory.
    """

    taps: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("channel taps must be a non-empty 1-D sequence")
        nonzero = np.flatnonzero(arr != 0)
        if nonzero.size == 0:
            raise ValueError("channel taps are all zero")
        arr = arr[nonzero[0]:nonzero[-1] + 1].copy()
        arr.flags.writeable = False
        object.__setattr__(self, "taps", arr)

    @property
    def memory(self) -> int:
        return self.taps.size - 1

    @property
    def energy(self) -> float:
        return float(np.sum(self.taps.real ** 2 + self.taps.imag ** 2))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.taps.imag == 0.0))

    def normalized(self) -> "ChannelTaps":
        """Unit-energy copy (sum |h_k|^2 = 1)."""
        return ChannelTaps(self.taps / np.sqrt(self.energy))


_NEG_TOL = 1e-12


@dataclass(frozen=True)
class SampledSpectrum:
    """Real nonnegative function sampled on a FrequencyGrid.

    Tiny negative rounding noise (within 1e-12 of the peak) is clamped to
    zero; anything more negative is rejected.
    """

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} spectrum values, got shape {arr.shape}"
            )
        floor = -_NEG_TOL * max(1.0, float(arr.max(initial=0.0)))
        if float(arr.min(initial=0.0)) < floor:
            raise ValueError("spectrum has negative values")
        arr = np.maximum(arr, 0.0)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __mul__(self, other: "SampledSpectrum") -> "SampledSpectrum":
        if self.grid != other.grid:
            raise ValueError("spectra live on different grids")
        return SampledSpectrum(self.grid, self.values * other.values)


def channel_autocorrelation(channel: ChannelTaps) -> np.ndarray:
    """Autocorrelation lags g_l = sum_k h_k conj(h_{k-l}).

    Returns the full lag array for l = -memory..memory; index ``memory + l``
    holds lag l, with g_{-l} = conj(g_l) and g_0 real positive.
    """
    return np.correlate(channel.taps, channel.taps, mode="full")


def dtft(taps: np.ndarray, grid: FrequencyGrid, offset: int = 0) -> np.ndarray:
    """Discrete-time Fourier transform sum_n taps[n] e^{-j(n+offset)w}."""
    taps = np.asarray(taps)
    n = np.arange(taps.size) + offset
    return np.exp(-1j * np.outer(grid.omegas, n)) @ taps


def dtft_power(channel: ChannelTaps, grid: FrequencyGrid = DEFAULT_GRID) -> SampledSpectrum:
    """Power spectrum |H(w)|^2 of the channel on the grid."""
    grid.require_alias_free(channel.memory)
    response = dtft(channel.taps, grid)
    return SampledSpectrum(grid, response.real ** 2 + response.imag ** 2)


@dataclass(frozen=True)
class TrigPolyCoeffs:
    """Hermitian trigonometric polynomial sum_l A_l e^{j l w}.

    Only lags l >= 0 are stored; A_{-l} = conj(A_l) is implied, so the
    evaluated polynomial is real on the whole frequency axis.
    """

    zero_lag: float
    off_lags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "zero_lag", float(self.zero_lag))
        arr = np.atleast_1d(np.asarray(self.off_lags, dtype=complex))
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "off_lags", arr)

    @property
    def degree(self) -> int:
        return self.off_lags.size

    def evaluate(self, grid: FrequencyGrid) -> np.ndarray:
        """Real polynomial values on the grid nodes."""
        if self.degree == 0:
            return np.full(grid.size, self.zero_lag)
        table = _harmonics(grid, self.degree)
        return self.zero_lag + 2.0 * (self.off_lags @ table[1:]).real


def _clipped_family_values(poly: np.ndarray, h2: np.ndarray, noise_density: float) -> np.ndarray:
    """Square-root spectrum family with the positivity test applied before
    any square root, so negative polynomial values never reach sqrt."""
    out = np.zeros_like(h2)
    active = (h2 > 0.0) & (poly * h2 > 1.0)
    if np.any(active):
        ha = h2[active]
        out[active] = noise_density * np.sqrt(poly[active] / ha) - noise_density / ha
    return out


def spectrum_from_coeffs(
    coeffs: TrigPolyCoeffs,
    channel_power: SampledSpectrum,
    noise_density: float,
) -> SampledSpectrum:
    """Transmit spectrum of the square-root family for the given coefficients.

    Nodes where the channel power is zero always map to zero (out-of-band
    convention); elsewhere the value is
    ``N0*sqrt(poly/H2) - N0/H2`` when ``poly*H2 > 1`` and zero otherwise.
    """
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")
    poly = coeffs.evaluate(channel_power.grid)
    vals = _clipped_family_values(poly, channel_power.values, noise_density)
    return SampledSpectrum(channel_power.grid, vals)


def spectrum_power(spectrum: SampledSpectrum) -> float:
    """Rectangle-rule value of the power integral over [-pi, pi)."""
    return spectrum.grid.spacing * float(np.sum(spectrum.values))


def solve_water_level(
    off_lags,
    channel_power: SampledSpectrum,
    noise_density: float,
    target_power: float = TWO_PI,
    *,
    max_zero_lag: float = 1e12,
    rel_tol: float = 1e-10,
    max_iter: int = 200,
) -> TrigPolyCoeffs | None:
    """Solve for the zero-lag coefficient meeting the power target exactly.

    The family power is monotonically nondecreasing in the zero lag, so the
    solution is unique; it is located by bracketing plus safeguarded Newton
    steps (pure bisection fallback inside the bracket).  Returns None when
    no zero lag within [-max_zero_lag, max_zero_lag] reaches the target,
    which signals pathological off-lags to the caller.
    """
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")
    if target_power <= 0.0:
        raise ValueError(f"target power must be positive, got {target_power}")

    grid = channel_power.grid
    off = np.atleast_1d(np.asarray(off_lags, dtype=complex))
    inband = channel_power.values > 0.0
    if not inband.any():
        return None
    h2 = channel_power.values[inband]
    if off.size:
        q = 2.0 * (off @ _harmonics(grid, off.size)[1:]).real[inband]
    else:
        q = np.zeros(h2.size)
    qh2 = q * h2
    inv_h2 = 1.0 / h2
    spacing = grid.spacing

    def power_and_slope(a0: float) -> tuple[float, float]:
        # S = N0*(sqrt(max(poly*H2, 1)) - 1)/H2 vanishes exactly on the
        # clipped set, so no masking of the value is needed.
        t = a0 * h2 + qh2
        root = np.sqrt(np.maximum(t, 1.0))
        p = spacing * noise_density * float(np.sum((root - 1.0) * inv_h2))
        slope = spacing * noise_density * 0.5 * float(np.sum((t > 1.0) / root))
        return p, slope

    # Power is zero for a0 <= lo; expand upward until the target is bracketed,
    # starting from a no-clipping estimate of the solution scale.
    lo = float(np.min(inv_h2 - q))
    guess = (target_power / (spacing * noise_density * float(np.sum(np.sqrt(inv_h2)))
                             + 1e-300)) ** 2
    hi = min(max(lo + 1.0, 2.0 * guess), max_zero_lag)
    while power_and_slope(hi)[0] < target_power:
        if hi >= max_zero_lag:
            return None
        hi = min(lo + 2.0 * (hi - lo), max_zero_lag)

    x = min(max(guess, lo + 1e-12 * (hi - lo)), hi)
    best_x, best_gap = x, np.inf
    for _ in range(max_iter):
        p, slope = power_and_slope(x)
        gap = abs(p - target_power)
        if gap < best_gap:
            best_x, best_gap = x, gap
        if gap <= rel_tol * target_power:
            break
        if p < target_power:
            lo = x
        else:
            hi = x
        if hi - lo <= np.finfo(float).eps * max(1.0, abs(hi)):
            break  # float64 exhausted; best_x is as close as representable
        nxt = x + (target_power - p) / slope if slope > 0.0 else np.nan
        x = nxt if lo < nxt < hi else 0.5 * (lo + hi)
    else:
        raise NumericalError("water-level search did not converge")
    if abs(best_x) > max_zero_lag:
        return None
    return TrigPolyCoeffs(best_x, off)


def zero_phase_taps(spectrum: SampledSpectrum, num_taps: int) -> tuple[np.ndarray, int]:
    """Centered impulse response of the zero-phase square root of a spectrum.

    Returns ``(taps, offset)`` where offset is the time index of taps[0]
    (always -(num_taps-1)//2).  num_taps must be odd.
    """
    if num_taps < 1 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and positive, got {num_taps}")
    half = num_taps // 2
    root = np.sqrt(spectrum.values)
    n = np.arange(-half, half + 1)
    taps = np.exp(1j * np.outer(n, spectrum.grid.omegas)) @ root / spectrum.grid.size
    return taps, -half
