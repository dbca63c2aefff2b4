"""Monte-Carlo estimation of the achievable information rate of the
reduced-memory detector for discrete alphabets.

The detector scores a symbol sequence with per-step branch metrics

    m_k = 2 Re{u_k^* z_k} - |u_k|^2 t_0 - 2 Re{u_k^* sum_{l=1..L} t_l u_{k-l}}

where z is the front-end output and t_l are the target-response lags.
Summed over a block the metrics reproduce the quadratic-form exponent of
the detector's likelihood, so the rate is the gap between the score of
the transmitted sequence and the forward-recursion marginal over all
sequences under uniform priors.  The recursion is renormalized at every
step, with the scale factors absorbed into the log-likelihood; blocks are
processed as a batch dimension of the same recursion.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import SimulationError
from .shortening import ShorteningSolution
from .spectral import FrequencyGrid

log = logging.getLogger(__name__)

LOG2E = float(np.log2(np.e))
_MAX_STATES = 4096


@dataclass(frozen=True)
class Alphabet:
    """Unit-average-energy constellation."""

    points: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("alphabet needs at least two points")
        energy = float(np.mean(arr.real ** 2 + arr.imag ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"alphabet average energy {energy} is not 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)

    @property
    def size(self) -> int:
        return self.points.size

    @staticmethod
    def bpsk() -> "Alphabet":
        return Alphabet(np.array([-1.0, 1.0]))

    @staticmethod
    def qpsk() -> "Alphabet":
        return Alphabet((np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])) / np.sqrt(2.0))


@dataclass(frozen=True)
class TrellisSpec:
    """State space and branch-metric tables of the detector.

    States enumerate the last ``memory`` symbols in base-U; digit 1 (most
    significant) is the most recent.  The z-independent part of the branch
    metric is precomputed per (state, symbol).
    """

    memory: int
    alphabet: Alphabet
    target_lags: np.ndarray

    def __post_init__(self):
        lags = np.atleast_1d(np.asarray(self.target_lags, dtype=complex))
        if lags.size != self.memory + 1:
            raise ValueError(
                f"expected {self.memory + 1} target lags, got {lags.size}"
            )
        if self.alphabet.size ** self.memory > _MAX_STATES:
            raise ValueError(
                f"trellis would need {self.alphabet.size ** self.memory} states; "
                f"limit is {_MAX_STATES}"
            )
        lags = lags.copy()
        lags.flags.writeable = False
        object.__setattr__(self, "target_lags", lags)

    @property
    def num_states(self) -> int:
        return self.alphabet.size ** self.memory

    @functools.cached_property
    def _const_part(self) -> np.ndarray:
        """(states, symbols) array of the z-independent metric terms."""
        points = self.alphabet.points
        u = self.alphabet.size
        states = self.num_states
        digits = np.empty((states, self.memory), dtype=int)
        idx = np.arange(states)
        for i in range(self.memory):
            digits[:, i] = (idx // u ** (self.memory - 1 - i)) % u
        # Past-symbol contribution sum_l t_l * u_{k-l}; digit i holds u_{k-1-i}.
        past = np.zeros(states, dtype=complex)
        for lag in range(1, self.memory + 1):
            past += self.target_lags[lag] * points[digits[:, lag - 1]]
        abs2 = points.real ** 2 + points.imag ** 2
        g0 = float(self.target_lags[0].real)
        return (abs2 * g0)[None, :] + 2.0 * (np.conj(points)[None, :] * past[:, None]).real


def simulate_channel(
    symbols: np.ndarray,
    taps: np.ndarray,
    offset: int,
    noise_density: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Pass symbols through the combined response and add complex noise.

    y_k = sum_l v_l u_{k-l} + w_k with w circular Gaussian of variance
    ``noise_density`` per sample; taps[i] sits at time index i + offset.
    Returns samples aligned with the symbol indices 0..N-1.
    """
    symbols = np.asarray(symbols)
    n = symbols.shape[-1]
    full = np.convolve(symbols, np.asarray(taps))
    out = np.zeros(n, dtype=complex)
    # full[i] is the contribution at time i + offset; keep times 0..N-1.
    lo = max(0, offset)
    hi = min(n, offset + full.size)
    if lo < hi:
        out[lo:hi] = full[lo - offset: hi - offset]
    scale = np.sqrt(noise_density / 2.0)
    noise = rng.normal(scale=scale, size=n) + 1j * rng.normal(scale=scale, size=n)
    return out + noise


def frontend_impulse(
    shortener_values: np.ndarray,
    grid: FrequencyGrid,
    num_taps: int,
) -> tuple[np.ndarray, float]:
    """Centered impulse response of the front-end response and its truncation loss.

    Returns ``(taps, loss)`` where taps[i] is the response at time
    i - (num_taps-1)//2 and loss is the energy fraction outside the window.
    """
    if num_taps < 1 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and positive, got {num_taps}")
    half = num_taps // 2
    n = np.arange(-half, half + 1)
    taps = np.exp(1j * np.outer(n, grid.omegas)) @ shortener_values / grid.size
    total = float(np.mean(shortener_values.real ** 2 + shortener_values.imag ** 2))
    window = float(np.sum(taps.real ** 2 + taps.imag ** 2))
    loss = max(0.0, 1.0 - window / total) if total > 0.0 else 0.0
    return taps, loss


def frontend_filter(
    received: np.ndarray,
    shortener_values: np.ndarray,
    grid: FrequencyGrid,
    num_taps: int = 129,
) -> tuple[np.ndarray, float]:
    """Adjoint-filter the received samples with the truncated front end.

    z_k = sum_n conj(h_{-n}) y_{k-n}, i.e. convolution with the
    conjugate-reversed impulse response, delay-compensated so z_k aligns
    with symbol k.  Returns ``(z, truncation_loss)``; losses above 1e-2
    are logged as warnings.
    """
    taps, loss = frontend_impulse(shortener_values, grid, num_taps)
    if loss > 1e-2:
        log.warning("front-end truncation loss %.3e exceeds 1e-2; "
                    "consider more taps", loss)
    half = num_taps // 2
    matched = np.conj(taps[::-1])
    z = np.convolve(received, matched)[half: half + received.size]
    return z, loss


def sequence_metrics(
    trellis: TrellisSpec,
    symbols: np.ndarray,
    z: np.ndarray,
) -> np.ndarray:
    """Branch metrics of the pinned (transmitted) sequence, zero-padded history.

    Works on (..., N) stacks of blocks.
    """
    lags = trellis.target_lags
    g0 = float(lags[0].real)
    isi = np.zeros_like(symbols)
    for lag in range(1, trellis.memory + 1):
        isi[..., lag:] += lags[lag] * symbols[..., :-lag]
    abs2 = symbols.real ** 2 + symbols.imag ** 2
    return (2.0 * (np.conj(symbols) * z).real
            - abs2 * g0
            - 2.0 * (np.conj(symbols) * isi).real)


def trellis_marginal_steps(trellis: TrellisSpec, z: np.ndarray) -> np.ndarray:
    """Per-step log2 increments of the sequence marginal, per block.

    z has shape (blocks, N).  The recursion starts at step ``memory`` from
    a uniform prior over prefix states; entries before that are zero.  The
    summed increments over steps memory..N-1 equal log2 of the uniform
    mixture of exp(metric sums) over all U^N sequences.
    """
    z = np.atleast_2d(z)
    blocks, n = z.shape
    u = trellis.alphabet.size
    states = trellis.num_states
    const_part = trellis._const_part
    conj_points = np.conj(trellis.alphabet.points)

    alpha = np.full((blocks, states), 1.0 / states)
    steps = np.zeros((blocks, n))
    for k in range(trellis.memory, n):
        zterm = 2.0 * (conj_points[None, :] * z[:, k, None]).real   # (B, U)
        metric = zterm[:, None, :] - const_part[None, :, :]          # (B, S, U)
        mmax = metric.max(axis=(1, 2))
        weights = np.exp(metric - mmax[:, None, None])
        contrib = alpha[:, :, None] * weights / u
        if states == 1:
            alpha_new = contrib.sum(axis=2)
        else:
            q = states // u
            alpha_new = (contrib.reshape(blocks, q, u, u).sum(axis=2)
                         .transpose(0, 2, 1).reshape(blocks, states))
        scale = alpha_new.sum(axis=1)
        if not np.all(np.isfinite(scale)) or np.any(scale <= 0.0):
            raise SimulationError(
                f"forward recursion degenerated at step {k}; the noise level "
                "may be too extreme for the metric scaling"
            )
        alpha = alpha_new / scale[:, None]
        steps[:, k] = np.log2(scale) + mmax * LOG2E
    return steps


@dataclass
class SimConfig:
    """Monte-Carlo shape: block length, block count, seeds, truncations."""

    symbols_per_block: int = 4096
    num_blocks: int = 8
    rng_seed: int = 0
    frontend_taps: int = 129
    guard: int = 32

    def __post_init__(self):
        if self.symbols_per_block < 1 or self.num_blocks < 1:
            raise ValueError("block shape must be positive")
        if self.guard < 0:
            raise ValueError("guard must be nonnegative")


@dataclass(frozen=True)
class AirEstimate:
    """Estimated rate with its Monte-Carlo error bar."""

    air: float
    stderr: float
    block_rates: np.ndarray
    truncation_loss: float
    symbols_counted: int


def mismatched_air_estimate(
    alphabet: Alphabet,
    combined_taps: np.ndarray,
    combined_offset: int,
    solution: ShorteningSolution,
    config: SimConfig | None = None,
) -> AirEstimate:
    """Simulate the detector of ``solution`` over the physical channel.

    Parameters
    ----------
    alphabet : constellation the symbols are drawn from (uniform i.i.d.).
    combined_taps, combined_offset : time-domain combined response the
        symbols actually pass through (transmit filter convolved with the
        channel); ``solution`` should be designed for its power spectrum.
    config : Monte-Carlo shape; block results are reproducible per seed
        and independent of batching.

    The estimate averages per-block rates (pinned-sequence score minus the
    forward-recursion marginal, per counted symbol); the standard error
    comes from the block-to-block variance.
    """
    config = config or SimConfig()
    memory = solution.memory
    if config.symbols_per_block < 100 * max(memory, 1):
        raise ValueError(
            f"blocks of {config.symbols_per_block} symbols are too short for "
            f"memory {memory}; need at least {100 * max(memory, 1)}"
        )
    guard = max(config.guard, memory)
    n = config.symbols_per_block
    lo, hi = guard, n - guard
    if hi - lo < 16:
        raise ValueError("guard leaves too few counted symbols per block")

    trellis = TrellisSpec(memory, alphabet, solution.target_lags)
    blocks = config.num_blocks
    seeds = np.random.SeedSequence(config.rng_seed).spawn(blocks)

    symbols = np.empty((blocks, n), dtype=complex)
    z = np.empty((blocks, n), dtype=complex)
    taps, loss = frontend_impulse(solution.shortener_values, solution.grid,
                                  config.frontend_taps)
    if loss > 1e-2:
        log.warning("front-end truncation loss %.3e exceeds 1e-2", loss)
    half = config.frontend_taps // 2
    matched = np.conj(taps[::-1])
    for b, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        idx = rng.integers(alphabet.size, size=n)
        symbols[b] = alphabet.points[idx]
        received = simulate_channel(symbols[b], combined_taps, combined_offset,
                                    solution.noise_density, rng)
        z[b] = np.convolve(received, matched)[half: half + n]

    cond = sequence_metrics(trellis, symbols, z)
    marg = trellis_marginal_steps(trellis, z)
    counted = slice(lo, hi)
    num = cond[:, counted].sum(axis=1) * LOG2E - marg[:, counted].sum(axis=1)
    rates = num / (hi - lo)
    air = float(rates.mean())
    stderr = float(rates.std(ddof=1) / np.sqrt(blocks)) if blocks > 1 else 0.0
    return AirEstimate(air=air, stderr=stderr, block_rates=rates,
                       truncation_loss=loss, symbols_counted=blocks * (hi - lo))


def bpsk_awgn_air(noise_density: float, num_points: int = 20001, span: float = 12.0) -> float:
    """Numerically integrated BPSK rate over the memoryless AWGN channel.

    Only the real part of the observation carries information; the noise
    there has variance N0/2.  Serves as an independent oracle for the
    Monte-Carlo estimator.
    """
    sigma2 = noise_density / 2.0
    sigma = np.sqrt(sigma2)
    t = np.linspace(1.0 - span * sigma, 1.0 + span * sigma, num_points)
    pdf = np.exp(-((t - 1.0) ** 2) / (2.0 * sigma2)) / np.sqrt(2.0 * np.pi * sigma2)
    penalty = np.log2(1.0 + np.exp(-2.0 * t / sigma2))
    f = pdf * penalty
    integral = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t)))
    return 1.0 - integral
