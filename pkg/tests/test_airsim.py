import itertools

import numpy as np
import pytest

from airopt.airsim import (
    LOG2E,
    Alphabet,
    SimConfig,
    TrellisSpec,
    bpsk_awgn_air,
    frontend_filter,
    frontend_impulse,
    mismatched_air_estimate,
    sequence_metrics,
    simulate_channel,
    trellis_marginal_steps,
)
from airopt.shortening import ShorteningProblem, solve_shortening
from airopt.spectral import ChannelTaps, dtft, dtft_power


@pytest.fixture
def reference_solution(grid):
    channel = ChannelTaps([1.0, 0.6, -0.3])
    h2 = dtft_power(channel, grid)
    response = dtft(channel.taps, grid)
    return channel, solve_shortening(ShorteningProblem(h2, 0.5, 2), response)


class TestAlphabet:
    def test_bpsk(self):
        bpsk = Alphabet.bpsk()
        assert bpsk.size == 2
        assert np.mean(np.abs(bpsk.points) ** 2) == pytest.approx(1.0)

    def test_energy_enforced(self):
        with pytest.raises(ValueError):
            Alphabet(np.array([-2.0, 2.0]))

    def test_trellis_state_budget(self):
        with pytest.raises(ValueError):
            TrellisSpec(13, Alphabet.bpsk(), np.zeros(14, complex))


class TestSimulateChannel:
    def test_noiseless_identity(self):
        rng = np.random.default_rng(0)
        u = rng.choice([-1.0, 1.0], size=50)
        y = simulate_channel(u, np.array([1.0]), 0, 1e-30, rng)
        assert np.allclose(y, u, atol=1e-12)

    def test_pure_noise_variance(self):
        rng = np.random.default_rng(1)
        y = simulate_channel(np.zeros(20000), np.array([1.0]), 0, 0.5, rng)
        measured = np.mean(np.abs(y) ** 2)
        assert abs(measured - 0.5) < 3.0 * 0.5 / np.sqrt(20000)

    def test_impulse_traces_taps(self, four_tap_channel):
        u = np.zeros(16)
        u[4] = 1.0
        y = simulate_channel(u, four_tap_channel.taps, 0, 1e-30, np.random.default_rng(2))
        assert np.allclose(y[4:8], four_tap_channel.taps, atol=1e-12)

    def test_offset_alignment(self):
        u = np.zeros(16)
        u[8] = 1.0
        taps = np.array([0.2, 1.0, 0.2])
        y = simulate_channel(u, taps, -1, 1e-30, np.random.default_rng(3))
        assert np.allclose(y[7:10], taps, atol=1e-12)


class TestFrontend:
    def test_identity_response(self, grid):
        y = np.arange(10, dtype=complex)
        z, loss = frontend_filter(y, np.ones(grid.size, complex), grid, 9)
        assert np.allclose(z, y, atol=1e-10)
        assert loss < 1e-12

    def test_constant_scaling(self, grid, flat_spectrum):
        solution = solve_shortening(ShorteningProblem(flat_spectrum, 0.5, 0))
        y = np.random.default_rng(4).standard_normal(32) + 0j
        z, _ = frontend_filter(y, solution.shortener_values, grid, 33)
        assert np.allclose(z, y * 2.0, atol=1e-9)  # V/N0 = 1/0.5

    def test_energy_matches_quadrature(self, grid, reference_solution):
        _, solution = reference_solution
        taps, loss = frontend_impulse(solution.shortener_values, grid, 129)
        window_energy = float(np.sum(np.abs(taps) ** 2))
        total = float(np.mean(np.abs(solution.shortener_values) ** 2))
        assert window_energy == pytest.approx(total * (1.0 - loss), rel=1e-9)
        assert loss < 1e-3


class TestMetricsAndRecursion:
    def test_metric_sum_equals_dense_quadratic_form(self, grid, reference_solution):
        _, solution = reference_solution
        trellis = TrellisSpec(2, Alphabet.bpsk(), solution.target_lags)
        rng = np.random.default_rng(5)
        for _ in range(4):
            n = int(rng.integers(8, 33))
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            u = Alphabet.bpsk().points[rng.integers(2, size=n)]
            metrics = sequence_metrics(trellis, u[None], z[None])[0]
            dense = np.zeros((n, n), complex)
            for k in range(n):
                for m in range(n):
                    d = k - m
                    if 0 <= d <= 2:
                        dense[k, m] = solution.target_lags[d]
                    elif -2 <= d < 0:
                        dense[k, m] = np.conj(solution.target_lags[-d])
            oracle = 2.0 * np.real(np.conj(u) @ z) - np.real(np.conj(u) @ dense @ u)
            assert metrics.sum() == pytest.approx(oracle, rel=1e-8)

    def test_forward_recursion_equals_brute_force(self, grid, reference_solution):
        _, solution = reference_solution
        bpsk = Alphabet.bpsk()
        trellis = TrellisSpec(2, bpsk, solution.target_lags)
        rng = np.random.default_rng(6)
        n = 10
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        steps = trellis_marginal_steps(trellis, z[None])[0]
        scored = []
        for bits in itertools.product(range(2), repeat=n):
            u = bpsk.points[list(bits)]
            scored.append(sequence_metrics(trellis, u[None], z[None])[0][2:].sum())
        scored = np.array(scored)
        peak = scored.max()
        brute = np.log2(np.sum(np.exp(scored - peak))) + peak * LOG2E - n
        assert steps[2:].sum() == pytest.approx(brute, abs=1e-10)

    def test_marginal_dominates_pinned_sequence(self, grid, reference_solution):
        _, solution = reference_solution
        bpsk = Alphabet.bpsk()
        trellis = TrellisSpec(2, bpsk, solution.target_lags)
        rng = np.random.default_rng(7)
        n = 64
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u = bpsk.points[rng.integers(2, size=n)]
        marginal = trellis_marginal_steps(trellis, z[None])[0][2:].sum()
        pinned = sequence_metrics(trellis, u[None], z[None])[0][2:].sum() * LOG2E
        assert marginal >= pinned - n * np.log2(bpsk.size)


class TestAirEstimate:
    def test_memoryless_matches_integration_oracle(self, grid, flat_spectrum):
        noise = 0.8
        solution = solve_shortening(ShorteningProblem(flat_spectrum, noise, 0))
        config = SimConfig(symbols_per_block=5000, num_blocks=20, rng_seed=7)
        estimate = mismatched_air_estimate(Alphabet.bpsk(), np.array([1.0 + 0j]), 0,
                                           solution, config)
        oracle = bpsk_awgn_air(noise)
        assert abs(estimate.air - oracle) < max(0.01, 2.0 * estimate.stderr)

    def test_heavy_noise_rate_vanishes(self, grid, four_tap_channel):
        h2 = dtft_power(four_tap_channel, grid)
        response = dtft(four_tap_channel.taps, grid)
        solution = solve_shortening(ShorteningProblem(h2, 1e4, 1), response)
        config = SimConfig(symbols_per_block=2000, num_blocks=6, rng_seed=1)
        estimate = mismatched_air_estimate(Alphabet.bpsk(), four_tap_channel.taps, 0,
                                           solution, config)
        assert abs(estimate.air) < max(3.0 * estimate.stderr, 1e-3)

    def test_deterministic_given_seed(self, grid, reference_solution):
        channel, solution = reference_solution
        config = SimConfig(symbols_per_block=1000, num_blocks=4, rng_seed=11)
        a = mismatched_air_estimate(Alphabet.bpsk(), channel.taps, 0, solution, config)
        b = mismatched_air_estimate(Alphabet.bpsk(), channel.taps, 0, solution, config)
        assert a.air == b.air
        assert np.array_equal(a.block_rates, b.block_rates)

    def test_metric_offset_invariance(self, grid, reference_solution):
        # shifting the zero lag adds a constant per BPSK step to both scores
        channel, solution = reference_solution
        config = SimConfig(symbols_per_block=1000, num_blocks=4, rng_seed=13)
        base = mismatched_air_estimate(Alphabet.bpsk(), channel.taps, 0, solution, config)
        import dataclasses
        shifted_lags = solution.target_lags.copy()
        shifted_lags[0] += 0.7
        shifted = dataclasses.replace(solution, target_lags=shifted_lags)
        moved = mismatched_air_estimate(Alphabet.bpsk(), channel.taps, 0, shifted, config)
        assert moved.air == pytest.approx(base.air, abs=1e-9)

    def test_short_blocks_rejected(self, grid, reference_solution):
        channel, solution = reference_solution
        with pytest.raises(ValueError):
            mismatched_air_estimate(Alphabet.bpsk(), channel.taps, 0, solution,
                                    SimConfig(symbols_per_block=150, num_blocks=2))

    def test_bpsk_oracle_self_consistency(self):
        # closed-form low/high noise limits of the integration oracle
        assert bpsk_awgn_air(1e-4) == pytest.approx(1.0, abs=1e-9)
        assert bpsk_awgn_air(1e3) == pytest.approx(np.log2(np.e) / 1e3, rel=0.05)
