import numpy as np
import pytest
from pydantic import ValidationError

from roughfilter.errors import ConfigError
from roughfilter.moments import regress_hurst
from roughfilter.noisecal import (
    BIAS_TABLE_COLUMNS,
    SmoothingSpec,
    bias_table,
    measurement_noise_variance,
    perceived_hurst_bias,
    smoothed_fbm_curve,
    smoothing_factor,
    smoothing_variance_finite,
)


class TestMeasurementNoise:
    def test_two_sigma_four_over_n(self):
        assert measurement_noise_variance(1e-4, 1440) == pytest.approx(2e-8 / 1440)

    @pytest.mark.parametrize("sigma2,n", [(0.0, 10), (-1.0, 10), (1.0, 0)])
    def test_rejects_bad_inputs(self, sigma2, n):
        with pytest.raises(ConfigError):
            measurement_noise_variance(sigma2, n)


class TestSmoothingFactor:
    def test_brownian_closed_form(self):
        taus = np.arange(1, 101)
        assert np.allclose(smoothing_factor(taus, 0.5), 1.0 - 1.0 / (3.0 * taus), rtol=0, atol=1e-12)

    def test_one_day_value(self):
        expected = (2 ** 2.3 - 4.0) / (1.3 * 2.3)
        assert smoothing_factor(1, 0.15) == pytest.approx(expected, rel=1e-12)
        assert smoothing_factor(1, 0.15) == pytest.approx(0.3092, abs=1e-4)

    @pytest.mark.parametrize("hurst", [0.1, 0.3, 0.5])
    def test_tends_to_one_at_large_scales(self, hurst):
        assert abs(smoothing_factor(1000, hurst) - 1.0) < 0.01

    @pytest.mark.parametrize("hurst", [0.05, 0.15, 0.25, 0.5, 0.75, 0.95])
    def test_bounded_and_nondecreasing_in_scale(self, hurst):
        values = smoothing_factor(np.arange(1, 1001), hurst)
        assert np.all(values > 0.0)
        assert np.all(values <= 1.0)
        assert np.all(np.diff(values) >= -1e-12)

    def test_scalar_in_scalar_out(self):
        assert isinstance(smoothing_factor(3, 0.2), float)
        assert smoothing_factor(np.array([1.0, 2.0]), 0.2).shape == (2,)

    @pytest.mark.parametrize("tau,hurst", [(0.5, 0.2), (2, 0.0), (2, 1.0)])
    def test_rejects_bad_inputs(self, tau, hurst):
        with pytest.raises(ConfigError):
            smoothing_factor(tau, hurst)

    @pytest.mark.parametrize("hurst", [0.1, 0.25, 0.5, 0.75])
    @pytest.mark.parametrize("tau", [1, 5, 20])
    def test_limit_of_the_finite_sum(self, hurst, tau):
        finite = smoothing_variance_finite(tau, SmoothingSpec(hurst=hurst, N=1000))
        assert abs(finite / tau ** (2 * hurst) - smoothing_factor(tau, hurst)) < 0.01 * smoothing_factor(tau, hurst)

    def test_finite_sum_converges_to_the_one_day_value(self):
        finite = smoothing_variance_finite(1, SmoothingSpec(hurst=0.15, N=10_000))
        assert finite == pytest.approx(0.3092, abs=1e-3)


class TestFiniteSmoothing:
    def test_single_sample_is_unsmoothed(self):
        spec = SmoothingSpec(hurst=0.3, xi=0.5, N=1)
        assert smoothing_variance_finite(7, spec) == pytest.approx(0.25 * 7 ** 0.6, rel=1e-12)

    def test_block_days_sum_the_variance(self):
        # one sample per two-day block: proxy 2 sigma^2, lag of 2 days
        one = smoothing_variance_finite(2, SmoothingSpec(hurst=0.3, N=1, d=1))
        two = smoothing_variance_finite(1, SmoothingSpec(hurst=0.3, N=1, d=2))
        assert two == pytest.approx(4.0 * one)

    def test_xi_scales_quadratically(self):
        base = smoothing_variance_finite(4, SmoothingSpec(hurst=0.2, N=50))
        assert smoothing_variance_finite(4, SmoothingSpec(hurst=0.2, xi=3.0, N=50)) == pytest.approx(9.0 * base)

    def test_rejects_zero_scale(self):
        with pytest.raises(ConfigError):
            smoothing_variance_finite(0, SmoothingSpec(hurst=0.3))

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            SmoothingSpec(hurst=0.3, N=0)

    def test_smoothed_curve(self):
        curve = smoothed_fbm_curve(SmoothingSpec(hurst=0.15, N=100), [1, 2, 5, 10])
        assert curve.k == 2.0
        assert curve.metadata["theoretical"] is True
        assert regress_hurst(curve, 1, 2).hurst == pytest.approx(perceived_hurst_bias(0.15, 100, 1, (1, 2)))


class TestPerceivedHurst:
    def test_smoothing_inflates_small_scale_roughness(self):
        assert perceived_hurst_bias(0.15, 100, 1, (1, 2)) == pytest.approx(0.42, abs=0.02)
        assert perceived_hurst_bias(0.15, 100, 1, (5, 10)) == pytest.approx(0.24, abs=0.02)

    def test_no_smoothing_no_bias(self):
        assert perceived_hurst_bias(0.15, 1, 1, (1, 2)) == pytest.approx(0.15, abs=1e-12)

    def test_bias_grows_with_samples_per_day(self):
        values = [perceived_hurst_bias(0.1, N, 1, (1, 2)) for N in (1, 2, 10, 100)]
        assert values == sorted(values)
        assert values[0] < values[-1]

    def test_bias_fades_with_scale(self):
        values = [perceived_hurst_bias(0.15, 100, 1, pair) for pair in [(1, 2), (5, 10), (50, 100)]]
        assert values[0] > values[1] > values[2] > 0.15

    def test_bias_shrinks_as_the_input_exponent_grows(self):
        grid = np.arange(0.1, 0.91, 0.1)
        bias = [abs(perceived_hurst_bias(h, 100, 1, (5, 10)) - h) for h in grid]
        assert np.all(np.diff(bias) < 0)

    def test_pair_order(self):
        with pytest.raises(ConfigError):
            perceived_hurst_bias(0.15, 100, 1, (2, 1))

    def test_table_layout(self):
        table = bias_table([0.1, 0.2, 0.3], [10, 100], 1, [(1, 2), (5, 10)])
        assert list(table.columns) == BIAS_TABLE_COLUMNS
        assert len(table) == 12
        assert table["perceived_h"].between(0.0, 1.0).all()
