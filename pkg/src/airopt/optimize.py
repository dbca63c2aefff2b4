"""Transmit-spectrum optimization within the square-root family,
reduced to the off-diagonal lag coefficients.

The zero-lag coefficient is never a search variable: every candidate
re-solves it so the spectrum meets the power budget exactly, which
removes the equality constraint from the search.  The remaining off-lag
coefficients are searched with Nelder-Mead; real channels restrict them
to real values (symmetric spectra), halving the dimension.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import NumericalError, OptimizationError
from .shortening import (
    ShorteningProblem,
    ShorteningSolution,
    shortening_residual,
    solve_shortening,
)
from .spectral import (
    TWO_PI,
    ChannelTaps,
    DEFAULT_GRID,
    FrequencyGrid,
    SampledSpectrum,
    TrigPolyCoeffs,
    _harmonics,
    dtft_power,
    solve_water_level,
    spectrum_from_coeffs,
)

log = logging.getLogger(__name__)

_FLAT_SLACK = 1e-9


@dataclass
class OptimizerOptions:
    """Knobs for the derivative-free search.

    ``real_coeffs=None`` lets the channel decide: real channels use real
    coefficients, complex channels use complex ones.
    """

    restarts: int = 3
    max_iterations: int = 2000
    x_tolerance: float = 1e-9
    f_tolerance: float = 1e-12
    rng_seed: int = 0
    init_scale: float = 0.1
    real_coeffs: bool | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class OptimizedFilter:
    """Best design found: coefficients, spectrum, receiver, and rate."""

    coeffs: TrigPolyCoeffs
    spectrum: SampledSpectrum
    air: float
    receiver: ShorteningSolution
    converged: bool
    restarts_used: int

    @property
    def residual(self) -> float:
        return self.receiver.residual


def design_for_lags(
    off_lags,
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int | None = None,
    target_power: float = TWO_PI,
) -> tuple[TrigPolyCoeffs, SampledSpectrum, ShorteningSolution] | None:
    """Full design pipeline for fixed off-lags; None when infeasible.

    Solves the water level, builds the spectrum, and designs the receiver
    for the combined spectrum.  ``memory`` defaults to the number of
    off-lags (family degree equals receiver memory).
    """
    off = np.atleast_1d(np.asarray(off_lags, dtype=complex))
    if memory is None:
        memory = off.size
    coeffs = solve_water_level(off, channel_power, noise_density, target_power)
    if coeffs is None:
        return None
    spectrum = spectrum_from_coeffs(coeffs, channel_power, noise_density)
    combined = SampledSpectrum(channel_power.grid, channel_power.values * spectrum.values)
    solution = solve_shortening(ShorteningProblem(combined, noise_density, memory))
    return coeffs, spectrum, solution


def evaluate_objective(
    off_lags,
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int | None = None,
    target_power: float = TWO_PI,
) -> float:
    """Prediction residual of the design for the given off-lags.

    Infeasible water levels and numerical failures return +inf so that
    derivative-free search stays total.
    """
    off = np.atleast_1d(np.asarray(off_lags, dtype=complex))
    if memory is None:
        memory = off.size
    try:
        coeffs = solve_water_level(off, channel_power, noise_density, target_power)
        if coeffs is None:
            return np.inf
        spectrum = spectrum_from_coeffs(coeffs, channel_power, noise_density)
        combined = SampledSpectrum(channel_power.grid,
                                   channel_power.values * spectrum.values)
        return shortening_residual(ShorteningProblem(combined, noise_density, memory))
    except NumericalError:
        return np.inf


def flat_spectrum_receiver(
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int,
) -> ShorteningSolution:
    """Receiver for the flat transmit spectrum (no shaping at all)."""
    return solve_shortening(ShorteningProblem(channel_power, noise_density, memory))


def _lags_from_vector(x: np.ndarray, memory: int, symmetric: bool) -> np.ndarray:
    if symmetric:
        return x.astype(complex)
    return x[0::2] + 1j * x[1::2]


def _vector_from_lags(off_lags: np.ndarray, symmetric: bool) -> np.ndarray:
    off = np.atleast_1d(np.asarray(off_lags, dtype=complex))
    if symmetric:
        return off.real.copy()
    return np.column_stack((off.real, off.imag)).ravel()


def flat_projection_lags(
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int,
    symmetric: bool,
) -> np.ndarray:
    """Off-lags of the least-squares family approximation to a flat spectrum.

    The flat transmit spectrum corresponds to the polynomial
    (H2+N0)^2/(N0^2 H2) wherever the channel passes; its leading Fourier
    coefficients give a deterministic, well-scaled starting point.
    """
    grid = channel_power.grid
    h2 = channel_power.values
    # Nodes far below the peak would dominate 1/H2 without carrying any
    # meaningful power; leave them out of the projection.
    inband = h2 > 1e-9 * float(h2.max(initial=0.0))
    f = np.zeros_like(h2)
    f[inband] = (h2[inband] + noise_density) ** 2 / (noise_density ** 2 * h2[inband])
    table = _harmonics(grid, memory)
    lags = np.conj(table[1:]) @ f / grid.size
    if symmetric:
        lags = lags.real.astype(complex)
    scale = float(np.max(np.abs(lags)))
    zero_scale = float(np.mean(f[inband])) if inband.any() else 1.0
    if scale > 100.0 * max(zero_scale, 1.0):
        lags = lags * (100.0 * max(zero_scale, 1.0) / scale)
    return lags


def optimize_for_spectrum(
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int,
    opts: OptimizerOptions | None = None,
    *,
    symmetric: bool = False,
    warm_starts=(),
    target_power: float = TWO_PI,
) -> OptimizedFilter:
    """Search the square-root family for the minimum-residual design.

    Start list: all-zero off-lags first, then the flat-projection start,
    any warm starts, and random Gaussian starts until ``opts.restarts``
    searches have run.  Each raw start is also scored directly so the
    returned design can never be worse than the best start.

    Raises OptimizationError when every start is infeasible.
    """
    opts = opts or OptimizerOptions()
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")

    if not np.any(channel_power.values > 0.0):
        raise OptimizationError("channel power is zero everywhere; nothing to optimize")

    if memory == 0:
        designed = design_for_lags((), channel_power, noise_density, 0, target_power)
        if designed is None:
            raise OptimizationError("memoryless design infeasible on this channel")
        coeffs, spectrum, solution = designed
        return OptimizedFilter(coeffs, spectrum, solution.air, solution, True, 0)

    dim = memory if symmetric else 2 * memory

    def objective(x: np.ndarray) -> float:
        lags = _lags_from_vector(x, memory, symmetric)
        return evaluate_objective(lags, channel_power, noise_density, memory, target_power)

    # Deterministic starts (zero lags, flat projection, warm starts) always
    # run; random Gaussian starts pad the list up to the restart budget.
    rng = np.random.default_rng(opts.rng_seed)
    starts = [np.zeros(dim)]
    projection = flat_projection_lags(channel_power, noise_density, memory, symmetric)
    if np.all(np.isfinite(projection)):
        starts.append(_vector_from_lags(projection, symmetric))
    for lags in warm_starts:
        vec = _vector_from_lags(np.asarray(lags, dtype=complex)[:memory], symmetric)
        vec = np.concatenate((vec, np.zeros(dim - vec.size)))
        starts.append(vec)
    while len(starts) < opts.restarts:
        starts.append(opts.init_scale * rng.standard_normal(dim))

    best_x = None
    best_f = np.inf
    converged = False
    for x0 in starts:
        f0 = objective(x0)
        if f0 < best_f:
            best_f, best_x = f0, x0.copy()
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options=dict(
                maxiter=opts.max_iterations,
                maxfev=4 * opts.max_iterations,
                xatol=opts.x_tolerance,
                fatol=opts.f_tolerance,
            ),
        )
        if np.isfinite(result.fun) and result.fun < best_f:
            best_f, best_x = float(result.fun), result.x.copy()
        converged = converged or bool(result.success and np.isfinite(result.fun))

    if best_x is None or not np.isfinite(best_f):
        raise OptimizationError(
            f"all {len(starts)} starts infeasible (memory={memory}, "
            f"noise={noise_density}, degree bound {1e12:.0e})"
        )

    flat = flat_spectrum_receiver(channel_power, noise_density, memory)
    if best_f > flat.residual and converged:
        # Should not happen for a converged search (the family contains the
        # optimum); one deeper polish from the projection start before giving up.
        result = minimize(
            objective,
            starts[min(1, len(starts) - 1)],
            method="Nelder-Mead",
            options=dict(maxiter=4 * opts.max_iterations, xatol=opts.x_tolerance,
                         fatol=opts.f_tolerance),
        )
        if np.isfinite(result.fun) and result.fun < best_f:
            best_f, best_x = float(result.fun), result.x.copy()
        if best_f > flat.residual + _FLAT_SLACK:
            log.warning(
                "optimized residual %.6e did not reach the flat-spectrum residual %.6e",
                best_f, flat.residual,
            )
            converged = False

    designed = design_for_lags(
        _lags_from_vector(best_x, memory, symmetric),
        channel_power, noise_density, memory, target_power,
    )
    if designed is None:
        raise OptimizationError("best candidate became infeasible on re-evaluation")
    coeffs, spectrum, solution = designed
    return OptimizedFilter(coeffs, spectrum, solution.air, solution, converged, len(starts))


def optimize_transmit_filter(
    channel: ChannelTaps,
    noise_density: float,
    memory: int,
    opts: OptimizerOptions | None = None,
    grid: FrequencyGrid = DEFAULT_GRID,
    warm_starts=(),
) -> OptimizedFilter:
    """Optimize the transmit spectrum for a channel and receiver memory."""
    opts = opts or OptimizerOptions()
    grid.require_alias_free(channel.memory + memory)
    symmetric = channel.is_real if opts.real_coeffs is None else opts.real_coeffs
    h2 = dtft_power(channel, grid)
    return optimize_for_spectrum(
        h2, noise_density, memory, opts, symmetric=symmetric, warm_starts=warm_starts
    )


@dataclass(frozen=True)
class StationarityReport:
    """Finite-difference audit of a converged design."""

    components: np.ndarray
    max_component: float
    step: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.max_component < self.threshold


def stationarity_check(
    result: OptimizedFilter,
    channel_power: SampledSpectrum,
    noise_density: float,
    memory: int,
    step: float = 1e-5,
    threshold: float = 1e-4,
) -> StationarityReport:
    """Central differences of the residual along every off-lag coordinate.

    The water level is re-solved at every probe, so the differences are
    taken along the power-feasible manifold.  Report-only: callers decide
    what to do with a large component.
    """
    x0 = _vector_from_lags(result.coeffs.off_lags, symmetric=False)
    comps = np.zeros(x0.size)
    for i in range(x0.size):
        hi = x0.copy()
        lo = x0.copy()
        hi[i] += step
        lo[i] -= step
        f_hi = evaluate_objective(_lags_from_vector(hi, memory, False),
                                  channel_power, noise_density, memory)
        f_lo = evaluate_objective(_lags_from_vector(lo, memory, False),
                                  channel_power, noise_density, memory)
        comps[i] = (f_hi - f_lo) / (2.0 * step)
    max_comp = float(np.max(np.abs(comps))) if comps.size else 0.0
    return StationarityReport(comps, max_comp, step, threshold)
