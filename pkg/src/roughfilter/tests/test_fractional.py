"""Tests for fBm, fGn and fOU simulation."""
import numpy as np
import pytest
from pydantic import ValidationError

from roughfilter.errors import ConfigError, GenerationError
from roughfilter.fractional import (
    CHOLESKY_MAX_LENGTH,
    FbmParams,
    FouParams,
    PathSeries,
    fbm_abs_moment,
    fbm_covariance,
    fgn_autocovariance,
    simulate_fbm,
    simulate_fgn,
    simulate_fou,
)


class TestCovariance:
    def test_fbm_covariance_is_symmetric_with_variance_on_diagonal(self):
        params = FbmParams(hurst=0.3, scale=2.0, length=10)
        assert fbm_covariance(3.0, 5.0, params) == pytest.approx(fbm_covariance(5.0, 3.0, params))
        assert fbm_covariance(4.0, 4.0, params) == pytest.approx(4.0 * 4.0 ** 0.6)

    def test_fgn_autocovariance_unit_variance(self):
        assert fgn_autocovariance(0, 0.2) == pytest.approx(1.0)

    def test_brownian_increments_are_uncorrelated(self):
        assert np.allclose(fgn_autocovariance(np.arange(1, 20), 0.5), 0.0, atol=1e-15)

    @pytest.mark.parametrize("hurst,sign", [(0.2, -1), (0.8, 1)])
    def test_lag_one_sign(self, hurst, sign):
        assert np.sign(fgn_autocovariance(1, hurst)) == sign

    def test_abs_moment_second_order(self):
        params = FbmParams(hurst=0.25, scale=0.5, length=10)
        taus = np.array([1.0, 4.0, 9.0])
        assert np.allclose(fbm_abs_moment(taus, 2.0, params), 0.25 * taus ** 0.5)

    def test_abs_moment_first_order_is_half_normal_mean(self):
        params = FbmParams(hurst=0.5, length=10)
        assert fbm_abs_moment(1.0, 1.0, params) == pytest.approx(np.sqrt(2.0 / np.pi))

    def test_abs_moment_rejects_non_positive_tau(self):
        with pytest.raises(ConfigError):
            fbm_abs_moment(0.0, 2.0, FbmParams(hurst=0.5, length=10))


class TestParams:
    @pytest.mark.parametrize("hurst", [0.0, 1.0, 1.2, -0.1])
    def test_hurst_outside_unit_interval_rejected(self, hurst):
        with pytest.raises(ValidationError):
            FbmParams(hurst=hurst, length=10)

    def test_length_must_allow_an_increment(self):
        with pytest.raises(ValidationError):
            FbmParams(hurst=0.5, length=1)

    def test_path_series_times(self):
        path = PathSeries(values=np.zeros(3), step=0.5, kind="fbm", start=0.5)
        assert np.allclose(path.times, [0.5, 1.0, 1.5])

    def test_path_series_rejects_bad_step(self):
        with pytest.raises(ConfigError):
            PathSeries(values=np.zeros(3), step=0.0, kind="fbm")


class TestSimulateFgn:
    def test_same_seed_same_path(self, fbm_params):
        assert np.array_equal(simulate_fgn(fbm_params).values, simulate_fgn(fbm_params).values)

    def test_different_seeds_differ(self, fbm_params):
        other = fbm_params.model_copy(update={"seed": 12})
        assert not np.allclose(simulate_fgn(fbm_params).values, simulate_fgn(other).values)

    def test_scale_and_step_rescale_the_same_draw(self, fbm_params):
        unit = simulate_fgn(fbm_params).values
        scaled = simulate_fgn(fbm_params.model_copy(update={"scale": 3.0, "step": 0.25})).values
        assert np.allclose(scaled, 3.0 * 0.25 ** 0.3 * unit)

    def test_circulant_matches_covariance(self):
        """Lag-0 and lag-1 sample autocovariances of a long path."""
        params = FbmParams(hurst=0.3, length=2 ** 16, seed=3)
        x = simulate_fgn(params).values
        assert x.shape == (2 ** 16,)
        assert np.mean(x * x) == pytest.approx(1.0, abs=0.03)
        assert np.mean(x[1:] * x[:-1]) == pytest.approx(fgn_autocovariance(1, 0.3), abs=0.02)

    def test_cholesky_matches_covariance(self):
        products = []
        for seed in range(200):
            x = simulate_fgn(FbmParams(hurst=0.7, length=100, seed=seed), method="cholesky").values
            products.append(np.mean(x[1:] * x[:-1]))
        assert np.mean(products) == pytest.approx(fgn_autocovariance(1, 0.7), abs=0.03)

    def test_unknown_method(self, fbm_params):
        with pytest.raises(ConfigError):
            simulate_fgn(fbm_params, method="hosking")

    def test_falls_back_to_cholesky_on_short_paths(self, fbm_params, mocker):
        mocker.patch(
            "roughfilter.fractional._circulant_sqrt_eigenvalues",
            side_effect=GenerationError("negative eigenvalue"),
        )
        fallback = simulate_fgn(fbm_params)
        assert np.allclose(fallback.values, simulate_fgn(fbm_params, method="cholesky").values)

    def test_long_paths_do_not_fall_back(self, mocker):
        mocker.patch(
            "roughfilter.fractional._circulant_sqrt_eigenvalues",
            side_effect=GenerationError("negative eigenvalue"),
        )
        with pytest.raises(GenerationError):
            simulate_fgn(FbmParams(hurst=0.3, length=CHOLESKY_MAX_LENGTH + 1))


class TestSimulateFbm:
    def test_fbm_is_cumulative_fgn(self, fbm_params):
        fbm = simulate_fbm(fbm_params)
        assert fbm.kind == "fbm"
        assert fbm.start == fbm_params.step
        assert np.allclose(fbm.values, np.cumsum(simulate_fgn(fbm_params).values))

    def test_terminal_variance(self):
        finals = [simulate_fbm(FbmParams(hurst=0.2, length=64, seed=s)).values[-1] for s in range(400)]
        assert np.var(finals) == pytest.approx(64 ** 0.4, rel=0.2)


class TestSimulateFou:
    def test_no_reversion_is_shifted_fbm(self, fbm_params):
        fou = simulate_fou(FouParams(base=fbm_params, reversion_rate=0.0, long_mean=2.0))
        assert np.allclose(fou.values, 2.0 + simulate_fbm(fbm_params).values)

    def test_drift_step_is_refined(self, fbm_params):
        fou = simulate_fou(FouParams(base=fbm_params, reversion_rate=0.5))
        assert fou.metadata["substeps"] == 5
        assert len(fou) == fbm_params.length
        assert fou.step == fbm_params.step

    def test_slow_reversion_needs_no_substeps(self, fbm_params):
        fou = simulate_fou(FouParams(base=fbm_params, reversion_rate=0.02))
        assert fou.metadata["substeps"] == 1

    def test_stationary_variance_of_brownian_ou(self):
        """H = 1/2, rate 1: stationary variance close to 1 / (2 rate)."""
        fou = simulate_fou(FouParams(base=FbmParams(hurst=0.5, length=20_000, seed=5), reversion_rate=1.0))
        assert np.var(fou.values[1000:]) == pytest.approx(0.5, abs=0.15)

    def test_reverts_to_long_mean(self):
        fou = simulate_fou(FouParams(
            base=FbmParams(hurst=0.3, scale=0.1, length=5000, seed=1),
            reversion_rate=0.2,
            long_mean=-3.0,
        ))
        assert np.mean(fou.values) == pytest.approx(-3.0, abs=0.1)


class TestExactLaw:
    def test_persistent_noise_autocovariance(self):
        x = simulate_fgn(FbmParams(hurst=0.8, length=100_000, seed=21)).values
        lags = np.arange(1, 6)
        sample = np.array([np.mean(x[lag:] * x[:-lag]) for lag in lags])
        assert np.allclose(sample, fgn_autocovariance(lags, 0.8), atol=0.05)

    def test_two_sample_correlation(self):
        draws = np.array([simulate_fgn(FbmParams(hurst=0.2, length=2, seed=s)).values for s in range(4000)])
        correlation = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
        assert correlation == pytest.approx(fgn_autocovariance(1, 0.2), abs=0.05)


class TestStationarityAndScaling:
    def test_noise_is_stationary_across_seeds(self):
        draws = np.array([simulate_fgn(FbmParams(hurst=0.3, length=256, seed=s)).values for s in range(100)])
        early, late = draws[:, :64], draws[:, -64:]
        assert np.mean(early ** 2) == pytest.approx(1.0, abs=0.1)
        assert np.mean(late ** 2) == pytest.approx(1.0, abs=0.1)
        lag_one = fgn_autocovariance(1, 0.3)
        assert np.mean(early[:, 1:] * early[:, :-1]) == pytest.approx(lag_one, abs=0.1)
        assert np.mean(late[:, 1:] * late[:, :-1]) == pytest.approx(lag_one, abs=0.1)

    @pytest.mark.parametrize("hurst", [0.15, 0.5, 0.75])
    def test_increment_variance_scales_as_a_power_of_lag(self, hurst):
        lags = np.array([1, 2, 4, 8, 16, 32])
        slopes = []
        for seed in range(20):
            path = simulate_fbm(FbmParams(hurst=hurst, length=4096, seed=seed)).values
            variances = [np.mean((path[lag:] - path[:-lag]) ** 2) for lag in lags]
            slopes.append(np.polyfit(np.log(lags), np.log(variances), 1)[0])
        assert np.mean(slopes) / 2.0 == pytest.approx(hurst, abs=0.04)

    def test_fast_reversion_reaches_the_stationary_variance(self):
        variances = [
            np.var(simulate_fou(FouParams(base=FbmParams(hurst=0.5, length=200, seed=s), reversion_rate=10.0)).values[10:])
            for s in range(50)
        ]
        assert np.mean(variances) == pytest.approx(1.0 / 20.0, rel=0.1)
