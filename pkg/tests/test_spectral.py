import numpy as np
import pytest

from airopt.errors import GridError
from airopt.spectral import (
    TWO_PI,
    ChannelTaps,
    FrequencyGrid,
    SampledSpectrum,
    TrigPolyCoeffs,
    channel_autocorrelation,
    dtft_power,
    solve_water_level,
    spectrum_from_coeffs,
    spectrum_power,
    zero_phase_taps,
)


def lag(g: np.ndarray, ell: int) -> complex:
    return g[(g.size - 1) // 2 + ell]


class TestGrid:
    def test_nodes_cover_half_open_interval(self, grid):
        assert grid.omegas[0] == -np.pi
        assert grid.omegas[-1] < np.pi
        assert np.allclose(np.diff(grid.omegas), grid.spacing)
        # omega = 0 and omega = -pi are exact nodes
        assert 0.0 in grid.omegas

    def test_odd_or_tiny_sizes_rejected(self):
        with pytest.raises(GridError):
            FrequencyGrid(1001)
        with pytest.raises(GridError):
            FrequencyGrid(4)

    def test_alias_free_guard(self):
        FrequencyGrid(64).require_alias_free(3)
        with pytest.raises(GridError):
            FrequencyGrid(16).require_alias_free(5)


class TestChannelTaps:
    def test_single_tap(self):
        g = channel_autocorrelation(ChannelTaps([1.0]))
        assert g.shape == (1,)
        assert g[0] == 1.0

    def test_trailing_zero_trimmed(self):
        ch = ChannelTaps([0.7, 0.0])
        assert ch.memory == 0
        g = channel_autocorrelation(ch)
        assert np.allclose(g, [abs(0.7) ** 2])

    def test_leading_zero_trimmed(self):
        assert ChannelTaps([0.0, 1.0, 0.5]).memory == 1

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            ChannelTaps([0.0, 0.0])

    def test_four_tap_lags(self, four_tap_channel):
        g = channel_autocorrelation(four_tap_channel)
        assert lag(g, 0) == pytest.approx(1.0)
        assert lag(g, 1) == pytest.approx(0.25j)
        assert lag(g, 2) == pytest.approx(-0.25 - 0.25j)
        assert lag(g, 3) == pytest.approx(-0.25j)

    def test_hermitian_lags_random(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            taps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            ch = ChannelTaps(taps)
            g = channel_autocorrelation(ch)
            # direct double-sum oracle
            expect = np.array([
                sum(ch.taps[k] * np.conj(ch.taps[k - ell])
                    for k in range(ch.taps.size) if 0 <= k - ell < ch.taps.size)
                for ell in range(-ch.memory, ch.memory + 1)
            ])
            assert np.allclose(g, expect, atol=1e-14)
            assert lag(g, 0).imag == pytest.approx(0.0, abs=1e-15)
            assert lag(g, 0).real > 0


class TestDtftPower:
    def test_unit_tap_flat(self, grid):
        s = dtft_power(ChannelTaps([1.0]), grid)
        assert np.allclose(s.values, 1.0)

    def test_two_tap_endpoints(self, grid):
        s = dtft_power(ChannelTaps(np.array([1.0, 1.0]) / np.sqrt(2)), grid)
        zero = np.argmin(np.abs(grid.omegas))
        assert s.values[zero] == pytest.approx(2.0)
        assert s.values[0] == pytest.approx(0.0, abs=1e-28)  # node at -pi

    def test_four_tap_at_zero(self, grid, four_tap_channel):
        s = dtft_power(four_tap_channel, grid)
        zero = np.argmin(np.abs(grid.omegas))
        assert s.values[zero] == pytest.approx(0.5)

    def test_mean_equals_energy(self, grid, four_tap_channel):
        s = dtft_power(four_tap_channel, grid)
        assert np.mean(s.values) == pytest.approx(four_tap_channel.energy, rel=1e-12)

    def test_coarse_grid_rejected(self):
        with pytest.raises(GridError):
            dtft_power(ChannelTaps(np.ones(8)), FrequencyGrid(16))

    def test_parseval_link(self, grid):
        rng = np.random.default_rng(3)
        taps = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        ch = ChannelTaps(taps)
        s = dtft_power(ch, grid)
        assert spectrum_power(s) / TWO_PI == pytest.approx(ch.energy, rel=1e-10)


class TestSampledSpectrum:
    def test_negative_rejected(self, grid):
        vals = np.ones(grid.size)
        vals[0] = -0.5
        with pytest.raises(ValueError):
            SampledSpectrum(grid, vals)

    def test_rounding_noise_clamped(self, grid):
        vals = np.ones(grid.size)
        vals[0] = -1e-15
        s = SampledSpectrum(grid, vals)
        assert s.values[0] == 0.0


class TestFamilySpectrum:
    def test_constant_case(self, grid, flat_spectrum):
        out = spectrum_from_coeffs(TrigPolyCoeffs(4.0, []), flat_spectrum, 1.0)
        assert np.allclose(out.values, 1.0)

    def test_fully_clipped(self, grid, flat_spectrum):
        out = spectrum_from_coeffs(TrigPolyCoeffs(0.5, []), flat_spectrum, 1.0)
        assert np.all(out.values == 0.0)

    def test_degree_one_values(self, grid, flat_spectrum):
        out = spectrum_from_coeffs(TrigPolyCoeffs(4.0, [1.0]), flat_spectrum, 1.0)
        zero = np.argmin(np.abs(grid.omegas))
        assert out.values[zero] == pytest.approx(np.sqrt(6.0) - 1.0, rel=1e-14)
        assert out.values[0] == pytest.approx(np.sqrt(2.0) - 1.0, rel=1e-14)  # -pi node

    def test_bad_noise_rejected(self, grid, flat_spectrum):
        with pytest.raises(ValueError):
            spectrum_from_coeffs(TrigPolyCoeffs(4.0, []), flat_spectrum, 0.0)

    def test_out_of_band_zero(self, grid):
        h2 = np.ones(grid.size)
        h2[: grid.size // 4] = 0.0
        out = spectrum_from_coeffs(TrigPolyCoeffs(9.0, []),
                                   SampledSpectrum(grid, h2), 1.0)
        assert np.all(out.values[: grid.size // 4] == 0.0)
        assert np.all(out.values[grid.size // 4:] == 2.0)

    def test_continuous_at_clip_boundary(self, grid, flat_spectrum):
        # value -> 0 from above as poly*H2 -> 1+
        for eps in (1e-4, 1e-6, 1e-8):
            out = spectrum_from_coeffs(TrigPolyCoeffs(1.0 + eps, []), flat_spectrum, 1.0)
            assert 0.0 < out.values[0] < eps


class TestSpectrumPower:
    def test_flat(self, flat_spectrum):
        assert spectrum_power(flat_spectrum) == pytest.approx(TWO_PI, rel=1e-14)

    def test_zero(self, grid):
        assert spectrum_power(SampledSpectrum(grid, np.zeros(grid.size))) == 0.0

    def test_trig_poly_exact(self, grid):
        s = SampledSpectrum(grid, 1.0 + np.cos(grid.omegas))
        assert abs(spectrum_power(s) - TWO_PI) < 1e-12

    def test_alias_free_under_doubling(self):
        coeffs = TrigPolyCoeffs(3.0, [0.5 + 0.2j, -0.3j, 0.1])
        powers = []
        for m in (2048, 4096):
            g = FrequencyGrid(m)
            powers.append(spectrum_power(SampledSpectrum(g, coeffs.evaluate(g))))
        assert abs(powers[0] - powers[1]) < 1e-12


class TestWaterLevel:
    def test_flat_unit_target(self, flat_spectrum):
        coeffs = solve_water_level([], flat_spectrum, 1.0, TWO_PI)
        assert coeffs.zero_lag == pytest.approx(4.0, rel=1e-9)

    def test_quarter_noise(self, flat_spectrum):
        coeffs = solve_water_level([], flat_spectrum, 0.25, TWO_PI)
        assert coeffs.zero_lag == pytest.approx(25.0, rel=1e-9)

    def test_off_lag_power_met_on_fine_grid(self, flat_spectrum):
        coeffs = solve_water_level([1.0], flat_spectrum, 1.0, TWO_PI)
        fine = FrequencyGrid(1 << 16)
        fine_flat = SampledSpectrum(fine, np.ones(fine.size))
        out = spectrum_from_coeffs(coeffs, fine_flat, 1.0)
        assert spectrum_power(out) == pytest.approx(TWO_PI, rel=1e-10)

    def test_power_monotone_and_unique(self, grid):
        rng = np.random.default_rng(11)
        h2 = SampledSpectrum(grid, 0.2 + np.abs(np.sin(grid.omegas)) ** 2)
        for _ in range(5):
            off = 0.2 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
            coeffs = solve_water_level(off, h2, 0.7, TWO_PI)
            assert coeffs is not None
            up = spectrum_from_coeffs(
                TrigPolyCoeffs(coeffs.zero_lag + 0.1, off), h2, 0.7)
            down = spectrum_from_coeffs(
                TrigPolyCoeffs(coeffs.zero_lag - 0.1, off), h2, 0.7)
            assert spectrum_power(up) > TWO_PI > spectrum_power(down)
            again = solve_water_level(off, h2, 0.7, TWO_PI)
            assert again.zero_lag == coeffs.zero_lag

    def test_infeasible_returns_none(self, grid):
        all_zero = SampledSpectrum(grid, np.zeros(grid.size))
        assert solve_water_level([], all_zero, 1.0, TWO_PI) is None

    def test_huge_target_returns_none(self, flat_spectrum):
        assert solve_water_level([], flat_spectrum, 1.0, 1e30) is None

    def test_bad_target_rejected(self, flat_spectrum):
        with pytest.raises(ValueError):
            solve_water_level([], flat_spectrum, 1.0, 0.0)


class TestTrigPoly:
    def test_real_on_axis(self, grid):
        rng = np.random.default_rng(4)
        coeffs = TrigPolyCoeffs(1.5, rng.standard_normal(3) + 1j * rng.standard_normal(3))
        vals = coeffs.evaluate(grid)
        assert vals.dtype == float
        # matches a direct Hermitian sum
        direct = np.zeros(grid.size, complex)
        for ell, a in enumerate(np.concatenate(([coeffs.zero_lag], coeffs.off_lags))):
            if ell == 0:
                direct += a
            else:
                direct += a * np.exp(1j * ell * grid.omegas)
                direct += np.conj(a) * np.exp(-1j * ell * grid.omegas)
        assert np.max(np.abs(direct.imag)) < 1e-12 * abs(coeffs.zero_lag)
        assert np.allclose(vals, direct.real, atol=1e-12)


class TestZeroPhaseTaps:
    def test_roundtrip_energy(self, grid):
        s = SampledSpectrum(grid, 1.0 + np.cos(grid.omegas))
        taps, offset = zero_phase_taps(s, 129)
        assert offset == -64
        energy = float(np.sum(taps.real ** 2 + taps.imag ** 2))
        assert energy == pytest.approx(spectrum_power(s) / TWO_PI, rel=1e-3)

    def test_even_taps_rejected(self, grid, flat_spectrum):
        with pytest.raises(ValueError):
            zero_phase_taps(flat_spectrum, 128)
