import numpy as np
import pytest

from airopt.mimo import (
    MimoChannelTaps,
    mimo_flat_air,
    mimo_waterfill_capacity,
    optimize_mimo,
    svd_spectra,
)
from airopt.optimize import OptimizerOptions, optimize_transmit_filter
from airopt.spectral import TWO_PI, ChannelTaps, FrequencyGrid, dtft_power, spectrum_power
from airopt.waterfill import waterfill

FAST = OptimizerOptions(restarts=2)


def diagonal_channel(taps_a, taps_b):
    la, lb = len(taps_a), len(taps_b)
    taps = np.zeros((max(la, lb), 2, 2), complex)
    taps[:la, 0, 0] = taps_a
    taps[:lb, 1, 1] = taps_b
    return MimoChannelTaps(taps)


class TestSvdSpectra:
    def test_identity(self, grid):
        sub = svd_spectra(MimoChannelTaps(np.eye(2)[None]), grid)
        assert np.allclose(sub.sigma, 1.0)
        assert sub.energy == pytest.approx(2.0)

    def test_diagonal_sorted_scalars(self, grid):
        a = np.array([1.0, 0.5])
        b = np.array([0.8, -0.3, 0.2])
        sub = svd_spectra(diagonal_channel(a, b), grid)
        mag_a = np.abs(np.exp(-1j * np.outer(grid.omegas, np.arange(2))) @ a)
        mag_b = np.abs(np.exp(-1j * np.outer(grid.omegas, np.arange(3))) @ b)
        stacked = np.sort(np.stack([mag_a, mag_b]), axis=0)[::-1]
        assert np.max(np.abs(sub.sigma - stacked)) < 1e-10

    def test_matches_dense_svd_oracle(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=1)
        sub = svd_spectra(channel, grid)
        rng = np.random.default_rng(0)
        nodes = rng.integers(0, grid.size, 16)
        phases = np.exp(-1j * np.outer(grid.omegas[nodes], np.arange(channel.memory + 1)))
        response = np.tensordot(phases, channel.taps, axes=(1, 0))
        oracle = np.linalg.svd(response, compute_uv=False)  # descending
        assert np.max(np.abs(oracle.T - sub.sigma[:, nodes])) < 1e-10

    def test_frobenius_parseval(self, grid):
        channel = MimoChannelTaps.random(3, 2, seed=7)
        sub = svd_spectra(channel, grid)
        frob = float(np.mean(np.sum(sub.sigma ** 2, axis=0)))
        assert frob == pytest.approx(channel.energy, rel=1e-8)

    def test_unitary_invariance_nodewise(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=3)
        q, _ = np.linalg.qr(np.random.default_rng(9).standard_normal((2, 2))
                            + 1j * np.random.default_rng(10).standard_normal((2, 2)))
        rotated = MimoChannelTaps(np.einsum("ij,ljk->lik", q, channel.taps))
        a = svd_spectra(channel, grid)
        b = svd_spectra(rotated, grid)
        assert np.max(np.abs(a.sigma - b.sigma)) < 1e-10


class TestWaterfillCapacity:
    def test_identity(self, grid):
        sub = svd_spectra(MimoChannelTaps(np.eye(2)[None]), grid)
        assert mimo_waterfill_capacity(sub, 1.0) == pytest.approx(2.0, abs=1e-9)

    def test_duplicated_scalar_channel(self, grid):
        taps = np.array([1.0, 0.5]) / np.sqrt(1.25)
        sub = svd_spectra(diagonal_channel(taps, taps), grid)
        scalar = waterfill(dtft_power(ChannelTaps(taps), grid), 0.4).capacity
        assert mimo_waterfill_capacity(sub, 0.4) == pytest.approx(2.0 * scalar, abs=1e-9)

    def test_fine_grid_oracle(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=1)
        noise = channel.energy / 10.0
        coarse = mimo_waterfill_capacity(svd_spectra(channel, grid), noise)
        fine = mimo_waterfill_capacity(svd_spectra(channel, FrequencyGrid(1 << 16)), noise)
        assert abs(coarse - fine) < 1e-6

    def test_dead_channel_rejected(self, grid):
        sub = svd_spectra(MimoChannelTaps(np.eye(2)[None]), grid)
        dead = type(sub)(grid=sub.grid, sigma=np.zeros_like(sub.sigma), energy=0.0)
        with pytest.raises(ValueError):
            mimo_waterfill_capacity(dead, 1.0)


class TestOptimizeMimo:
    def test_single_antenna_reduces_to_scalar(self, grid, four_tap_channel):
        mono = MimoChannelTaps(four_tap_channel.taps[:, None, None])
        joint = optimize_mimo(mono, 0.1, 1, FAST, grid)
        scalar = optimize_transmit_filter(four_tap_channel, 0.1, 1, FAST, grid)
        assert abs(joint.total_air - scalar.air) < 1e-12
        assert joint.power_split[0] == 1.0

    def test_identical_diagonal_splits_evenly(self, grid):
        taps = np.array([1.0, 0.5]) / np.sqrt(1.25)
        channel = diagonal_channel(taps, taps)
        joint = optimize_mimo(channel, 0.2, 1, FAST, grid)
        scalar = optimize_transmit_filter(ChannelTaps(taps), 0.2, 1, FAST, grid)
        assert abs(joint.total_air - 2.0 * scalar.air) < 1e-4
        assert abs(joint.power_split[0] - 0.5) < 1e-4

    def test_beats_flat_spectra(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=1)
        noise = channel.energy / 10.0
        joint = optimize_mimo(channel, noise, 1, FAST, grid)
        assert joint.total_air >= mimo_flat_air(svd_spectra(channel, grid), noise, 1) - 1e-9

    def test_total_power_budget(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=4)
        noise = channel.energy / 6.0
        joint = optimize_mimo(channel, noise, 1, FAST, grid)
        total = sum(spectrum_power(f.spectrum) for f in joint.subchannels)
        assert total == pytest.approx(2.0 * TWO_PI, rel=1e-8)
        assert joint.power_split.sum() == pytest.approx(1.0, rel=1e-12)

    def test_unitary_invariance_of_total_air(self, grid):
        channel = MimoChannelTaps.random(2, 3, seed=3)
        rng = np.random.default_rng(9)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        rotated = MimoChannelTaps(np.einsum("ij,ljk->lik", q, channel.taps))
        noise = channel.energy / 8.0
        a = optimize_mimo(channel, noise, 1, FAST, grid)
        b = optimize_mimo(rotated, noise, 1, FAST, grid)
        assert abs(a.total_air - b.total_air) < 1e-6

    def test_low_snr_concentrates_power(self, grid):
        channel = MimoChannelTaps.random(2, 2, seed=8)
        noise = channel.energy * 20.0
        joint = optimize_mimo(channel, noise, 1, FAST, grid)
        # waterfilling across eigenchannels shows the same lopsided split
        sub = svd_spectra(channel, grid)
        gains = sub.sigma ** 2
        from airopt.waterfill import _fill_gains, solve_common_level
        theta = solve_common_level(gains, noise, grid.spacing, 2.0 * TWO_PI)
        powers = _fill_gains(gains, noise, theta)
        wf_frac = powers.sum(axis=1)[0] / powers.sum()
        opt_frac = joint.power_split[np.argmax(joint.power_split)]
        assert opt_frac > 0.8
        assert abs(opt_frac - max(wf_frac, 1.0 - wf_frac)) < 0.15
