"""Closed-form reduced-memory receiver design for a combined power
spectrum and noise level.

For a combined transmit+channel power spectrum Sv and receiver memory L,
the detector that maximizes the Gaussian-input achievable rate is fixed
by the Fourier coefficients of the mismatch kernel N0/(Sv + N0): an
order-L linear prediction problem whose residual determines the rate
(-log2 of it), whose prediction filter seeds the target response, and
whose spectral form fixes the receiver front end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedError, NumericalError
from .spectral import FrequencyGrid, SampledSpectrum, _harmonics

_COND_LIMIT = 1e12
_RESIDUAL_FLOOR = 1e-300


@dataclass(frozen=True)
class ShorteningProblem:
    """Receiver design input: combined power spectrum, noise, memory."""

    combined_spectrum: SampledSpectrum
    noise_density: float
    memory: int

    def __post_init__(self):
        if self.noise_density <= 0.0:
            raise ValueError(f"noise density must be positive, got {self.noise_density}")
        if self.memory < 0:
            raise ValueError(f"memory must be nonnegative, got {self.memory}")

    @property
    def grid(self) -> FrequencyGrid:
        return self.combined_spectrum.grid

    def kernel(self) -> np.ndarray:
        """Mismatch kernel N0/(Sv + N0); lies in (0, 1] at every node."""
        return self.noise_density / (self.combined_spectrum.values + self.noise_density)


@dataclass(frozen=True)
class ShorteningSolution:
    """Receiver design output.

    ``target_values`` holds the signed offset form of the target response
    (it may be negative; the +1 shift is explicit wherever it is used),
    and ``target_lags`` its lag coefficients 0..L.  ``shortener_values``
    are the complex front-end response samples.  The Gaussian-input AIR is
    ``-log2(residual)`` in bits per channel use.
    """

    problem: ShorteningProblem
    kernel_lags: np.ndarray
    residual: float
    prediction_taps: np.ndarray
    target_values: np.ndarray
    target_lags: np.ndarray
    shortener_values: np.ndarray
    air: float

    @property
    def grid(self) -> FrequencyGrid:
        return self.problem.grid

    @property
    def memory(self) -> int:
        return self.problem.memory

    @property
    def noise_density(self) -> float:
        return self.problem.noise_density


def mismatch_kernel_lags(problem: ShorteningProblem) -> np.ndarray:
    """Fourier coefficients b_0..b_L of the mismatch kernel.

    b_k = (1/2pi) int y(w) e^{jkw} dw under the rectangle rule; b_0 is real
    in (0, 1] and negative lags follow by conjugation.
    """
    y = problem.kernel()
    table = _harmonics(problem.grid, problem.memory)
    lags = table @ y / problem.grid.size
    lags[0] = lags[0].real
    return lags


def solve_prediction(lags: np.ndarray, method: str = "levinson") -> tuple[np.ndarray, float]:
    """Order-L linear prediction from Hermitian autocorrelation lags.

    Returns ``(coefficients a_1..a_L, residual)`` solving the normal
    equations sum_i a_i r_{k-i} = r_k.  The Levinson recursion is the
    default; it falls back to a dense Hermitian solve when a reflection
    coefficient magnitude comes within 1e-12 of one.
    """
    r = np.atleast_1d(np.asarray(lags, dtype=complex))
    order = r.size - 1
    if r[0].real <= 0.0:
        raise IllConditionedError("zero-lag coefficient must be positive")
    if order == 0:
        return np.zeros(0, dtype=complex), float(r[0].real)
    if method == "dense":
        return _dense_prediction(r)
    if method != "levinson":
        raise ValueError(f"unknown prediction method {method!r}")

    a = np.zeros(0, dtype=complex)
    err = float(r[0].real)
    for m in range(1, order + 1):
        acc = r[m] - (np.dot(a, r[m - 1:0:-1]) if m > 1 else 0.0)
        k = acc / err
        if abs(k) >= 1.0 - 1e-12:
            return _dense_prediction(r)
        new_a = np.empty(m, dtype=complex)
        if m > 1:
            new_a[:m - 1] = a - k * np.conj(a[::-1])
        new_a[m - 1] = k
        a = new_a
        err *= 1.0 - abs(k) ** 2
    return a, float(err)


def _prediction_matrix(r: np.ndarray) -> np.ndarray:
    """Hermitian Toeplitz matrix M_ki = r_{k-i}, k,i = 1..L."""
    order = r.size - 1
    full = np.concatenate((np.conj(r[order - 1:0:-1]), r[:order]))
    idx = np.arange(order)
    return full[order - 1 + idx[:, None] - idx[None, :]]


def _dense_prediction(r: np.ndarray) -> tuple[np.ndarray, float]:
    mat = _prediction_matrix(r)
    a = np.linalg.solve(mat, r[1:])
    err = float((r[0] - np.dot(a, np.conj(r[1:]))).real)
    return a, err


def assert_well_conditioned(lags: np.ndarray) -> None:
    """Raise IllConditionedError when the prediction matrix is untrustworthy."""
    if lags.size <= 1:
        return
    cond = np.linalg.cond(_prediction_matrix(np.asarray(lags, dtype=complex)))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise IllConditionedError(
            f"prediction matrix condition {cond:.3e} exceeds {_COND_LIMIT:.0e}; "
            "increase the grid size or reduce the receiver memory"
        )


def _residual_core(problem: ShorteningProblem) -> tuple[np.ndarray, np.ndarray, float]:
    """Kernel lags, prediction coefficients, and clamped residual."""
    lags = mismatch_kernel_lags(problem)
    assert_well_conditioned(lags)
    coeffs, residual = solve_prediction(lags)
    b0 = float(lags[0].real)
    if residual <= 0.0 or residual > b0 + 1e-9 or b0 > 1.0 + 1e-9:
        raise NumericalError(
            f"prediction residual {residual} outside (0, b0={b0}]"
        )
    return lags, coeffs, min(max(residual, _RESIDUAL_FLOOR), 1.0)


def shortening_residual(problem: ShorteningProblem) -> float:
    """Prediction residual alone, for callers that only need the rate.

    Identical to ``solve_shortening(problem).residual`` but skips the
    target-response and front-end synthesis; optimization loops call this
    many thousands of times.
    """
    return _residual_core(problem)[2]


def solve_shortening(
    problem: ShorteningProblem,
    combined_response: np.ndarray | None = None,
) -> ShorteningSolution:
    """Design the rate-optimal reduced-memory receiver for ``problem``.

    Parameters
    ----------
    problem : ShorteningProblem
        Combined power spectrum, noise density, and receiver memory.
    combined_response : optional complex samples of V(w) on the grid.
        Defaults to the zero-phase convention V = sqrt(Sv); the residual
        and rate depend on the power spectrum only, so the choice affects
        the front-end phase, never the AIR.

    Raises
    ------
    IllConditionedError
        If the prediction matrix condition estimate exceeds 1e12
        (increase the grid size or reduce the memory).
    """
    lags, coeffs, residual = _residual_core(problem)
    order = problem.memory

    taps = np.concatenate(([1.0 + 0.0j], -coeffs)) / np.sqrt(residual)
    table = _harmonics(problem.grid, order)
    response = taps @ np.conj(table)          # U(w) = sum_k u_k e^{-jkw}
    target_values = (response.real ** 2 + response.imag ** 2) - 1.0
    target_lags = np.correlate(taps, taps, mode="full")[order:]
    target_lags = target_lags.copy()
    target_lags[0] = target_lags[0].real - 1.0

    sv = problem.combined_spectrum.values
    if combined_response is None:
        combined_response = np.sqrt(sv)
    else:
        combined_response = np.asarray(combined_response, dtype=complex)
        if combined_response.shape != sv.shape:
            raise ValueError("combined response length does not match the grid")
    shortener = combined_response * (target_values + 1.0) / (sv + problem.noise_density)

    return ShorteningSolution(
        problem=problem,
        kernel_lags=lags,
        residual=residual,
        prediction_taps=taps,
        target_values=target_values,
        target_lags=target_lags,
        shortener_values=shortener,
        air=gaussian_air(residual),
    )


def gaussian_air(residual: float) -> float:
    """Gaussian-input achievable rate -log2(residual), bits per channel use."""
    if residual <= 0.0 or residual > 1.0 + 1e-12:
        raise ValueError(f"residual must lie in (0, 1], got {residual}")
    return float(-np.log2(min(max(residual, _RESIDUAL_FLOOR), 1.0)))


def matched_gaussian_air(combined_spectrum: SampledSpectrum, noise_density: float) -> float:
    """Full-memory Gaussian rate (1/2pi) int log2(1 + Sv/N0) dw."""
    if noise_density <= 0.0:
        raise ValueError(f"noise density must be positive, got {noise_density}")
    return float(np.mean(np.log2(1.0 + combined_spectrum.values / noise_density)))
