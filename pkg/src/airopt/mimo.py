"""MIMO-ISI extension: per-frequency SVD decomposition into parallel
scalar subchannels, joint transmit optimization under a pooled power
constraint, and the waterfilling capacity baseline.

Only the singular-value spectra are materialized; the per-frequency
unitaries are not needed for rate computation and realizing them as
filters is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizationError
from .optimize import (
    OptimizedFilter,
    OptimizerOptions,
    design_for_lags,
    flat_projection_lags,
    _lags_from_vector,
    _vector_from_lags,
    optimize_transmit_filter,
)
from .shortening import ShorteningProblem, solve_shortening
from .spectral import (
    TWO_PI,
    ChannelTaps,
    DEFAULT_GRID,
    FrequencyGrid,
    SampledSpectrum,
)
from .waterfill import _fill_gains, solve_common_level


@dataclass(frozen=True)
class MimoChannelTaps:
    """Matrix impulse response H_0..H_{memory} of a square MIMO channel."""

    taps: np.ndarray  # shape (memory+1, size, size)

    def __post_init__(self):
        arr = np.asarray(self.taps, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[1] < 1:
            raise ValueError(f"expected (memory+1, N, N) matrix taps, got {arr.shape}")
        if not np.any(arr):
            raise ValueError("channel matrices are all zero")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "taps", arr)

    @property
    def size(self) -> int:
        return self.taps.shape[1]

    @property
    def memory(self) -> int:
        return self.taps.shape[0] - 1

    @property
    def energy(self) -> float:
        """Channel energy sum_l tr(H_l H_l^+)."""
        return float(np.sum(self.taps.real ** 2 + self.taps.imag ** 2))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.taps.imag == 0.0))

    @classmethod
    def random(cls, size: int, memory: int, seed: int) -> "MimoChannelTaps":
        """Complex Gaussian taps, convenient for seeded experiments."""
        rng = np.random.default_rng(seed)
        shape = (memory + 1, size, size)
        taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        return cls(taps)


@dataclass(frozen=True)
class SubchannelSet:
    """Per-frequency singular values, sorted descending at each node."""

    grid: FrequencyGrid
    sigma: np.ndarray  # shape (size, grid.size)
    energy: float

    @property
    def size(self) -> int:
        return self.sigma.shape[0]

    def gain_spectra(self) -> list[SampledSpectrum]:
        """Power spectra sigma_n(w)^2 of the parallel scalar subchannels."""
        return [SampledSpectrum(self.grid, row ** 2) for row in self.sigma]


def svd_spectra(channel: MimoChannelTaps, grid: FrequencyGrid = DEFAULT_GRID) -> SubchannelSet:
    """Singular-value spectra of H(w) = sum_l H_l e^{-jlw}.

    Computed from the Hermitian eigenvalues of H(w)^+ H(w); rank-deficient
    frequencies simply yield zero singular values.
    """
    grid.require_alias_free(channel.memory)
    phases = np.exp(-1j * np.outer(grid.omegas, np.arange(channel.memory + 1)))
    response = np.tensordot(phases, channel.taps, axes=(1, 0))  # (M, N, N)
    gram = np.einsum("mij,mik->mjk", response.conj(), response)
    evals = np.linalg.eigvalsh(gram)  # ascending per node
    sigma = np.sqrt(np.clip(evals, 0.0, None))[:, ::-1].T.copy()
    return SubchannelSet(grid=grid, sigma=sigma, energy=channel.energy)


@dataclass(frozen=True)
class MimoOptimizedFilter:
    """Joint design: one filter per subchannel plus the power split."""

    subchannels: tuple[OptimizedFilter, ...]
    power_split: np.ndarray
    total_air: float
    converged: bool
    restarts_used: int


def _softmax_split(raw: np.ndarray) -> np.ndarray:
    """Map N-1 unconstrained reals to a positive length-N simplex."""
    z = np.concatenate((raw, [0.0]))
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def optimize_mimo(
    channel: MimoChannelTaps,
    noise_density: float,
    memory: int,
    opts: OptimizerOptions | None = None,
    grid: FrequencyGrid = DEFAULT_GRID,
) -> MimoOptimizedFilter:
    """Jointly optimize per-subchannel spectra under the pooled constraint.

    The search runs over the off-lags of every subchannel plus a softmax
    power split; each subchannel's zero lag is re-solved to meet its share
    of the pooled budget 2*pi*N exactly.  A 1x1 channel reduces exactly to
    the scalar optimizer.
    """
    opts = opts or OptimizerOptions()
    n = channel.size
    if n == 1:
        scalar = optimize_transmit_filter(
            ChannelTaps(channel.taps[:, 0, 0]), noise_density, memory, opts, grid
        )
        return MimoOptimizedFilter(
            subchannels=(scalar,),
            power_split=np.array([1.0]),
            total_air=scalar.air,
            converged=scalar.converged,
            restarts_used=scalar.restarts_used,
        )

    grid.require_alias_free(channel.memory + memory)
    sub = svd_spectra(channel, grid)
    gains = sub.gain_spectra()
    symmetric = channel.is_real
    total_power = TWO_PI * n

    def assemble(split: np.ndarray, lag_sets) -> list | None:
        designs = []
        for frac, g, lags in zip(split, gains, lag_sets):
            designed = design_for_lags(lags, g, noise_density, memory,
                                       target_power=total_power * frac)
            if designed is None:
                return None
            designs.append(designed)
        return designs

    if memory == 0:
        dim_sub = 0

        def decode(x):
            return _softmax_split(x), [np.zeros(0, complex)] * n
    else:
        dim_sub = memory if symmetric else 2 * memory

        def decode(x):
            split = _softmax_split(x[: n - 1])
            lag_sets = [
                _lags_from_vector(x[n - 1 + i * dim_sub: n - 1 + (i + 1) * dim_sub],
                                  memory, symmetric)
                for i in range(n)
            ]
            return split, lag_sets

    dim = (n - 1) + n * dim_sub

    def objective(x: np.ndarray) -> float:
        split, lag_sets = decode(x)
        designs = assemble(split, lag_sets)
        if designs is None:
            return np.inf
        return float(sum(np.log2(d[2].residual) for d in designs))

    rng = np.random.default_rng(opts.rng_seed)
    starts = [np.zeros(dim)]
    if memory > 0:
        proj = np.concatenate(
            [np.zeros(n - 1)]
            + [_vector_from_lags(
                   flat_projection_lags(g, noise_density, memory, symmetric), symmetric)
               for g in gains]
        )
        if np.all(np.isfinite(proj)):
            starts.append(proj)
    while len(starts) < opts.restarts:
        starts.append(opts.init_scale * rng.standard_normal(dim))

    best_x, best_f, converged = None, np.inf, False
    for x0 in starts:
        f0 = objective(x0)
        if f0 < best_f:
            best_f, best_x = f0, x0.copy()
        result = minimize(
            objective, x0, method="Nelder-Mead",
            options=dict(maxiter=opts.max_iterations, maxfev=4 * opts.max_iterations,
                         xatol=opts.x_tolerance, fatol=opts.f_tolerance),
        )
        if np.isfinite(result.fun) and result.fun < best_f:
            best_f, best_x = float(result.fun), result.x.copy()
        converged = converged or bool(result.success and np.isfinite(result.fun))

    if best_x is None or not np.isfinite(best_f):
        raise OptimizationError(f"all {len(starts)} joint starts infeasible")

    split, lag_sets = decode(best_x)
    designs = assemble(split, lag_sets)
    if designs is None:
        raise OptimizationError("best joint candidate became infeasible on re-evaluation")
    filters = tuple(
        OptimizedFilter(coeffs, spectrum, solution.air, solution, converged, len(starts))
        for coeffs, spectrum, solution in designs
    )
    total_air = float(sum(f.air for f in filters))
    return MimoOptimizedFilter(filters, split, total_air, converged, len(starts))


def mimo_flat_air(sub: SubchannelSet, noise_density: float, memory: int) -> float:
    """Total rate with flat unit spectra on every subchannel."""
    total = 0.0
    for g in sub.gain_spectra():
        total += solve_shortening(ShorteningProblem(g, noise_density, memory)).air
    return total


def mimo_waterfill_capacity(sub: SubchannelSet, noise_density: float) -> float:
    """Capacity with one water level across all subchannel gain spectra.

    The pooled power budget is 2*pi*N; raises ValueError when every
    subchannel gain is identically zero.
    """
    gains = sub.sigma ** 2
    theta = solve_common_level(gains, noise_density, sub.grid.spacing,
                               TWO_PI * sub.size)
    powers = _fill_gains(gains, noise_density, theta)
    return float(np.sum(np.mean(np.log2(1.0 + gains * powers / noise_density), axis=1)))
