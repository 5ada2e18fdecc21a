import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError
from scipy import stats

from roughfilter.errors import ConfigError, DataError
from roughfilter.fractional import PathSeries
from roughfilter.moments import abs_moment_overlapping
from roughfilter.proxies import ProxyKind
from roughfilter.volmodels import (
    GbmVarianceParams,
    NoiseSpec,
    RfsvParams,
    add_observation_noise,
    simulate_gbm_variance,
    simulate_noisy_gbm_variance,
    simulate_price_path,
    simulate_rfsv_realized,
    simulate_rfsv_variance,
    synthetic_minute_bars,
)


@pytest.fixture
def rfsv_params():
    return RfsvParams(sigma_base=0.01, vol_of_vol=0.3, hurst=0.15, days=20, steps_per_day=4, seed=5)


class TestRfsv:
    def test_variance_path_is_positive_on_the_intraday_grid(self, rfsv_params):
        spot = simulate_rfsv_variance(rfsv_params)
        assert len(spot) == 80
        assert spot.step == pytest.approx(0.25)
        assert np.all(spot.values > 0)
        assert spot.metadata["model"] == "rfsv"

    def test_deterministic(self, rfsv_params):
        assert np.array_equal(simulate_rfsv_variance(rfsv_params).values, simulate_rfsv_variance(rfsv_params).values)

    def test_log_variance_is_scaled_fbm(self, rfsv_params):
        spot = simulate_rfsv_variance(rfsv_params)
        wider = simulate_rfsv_variance(rfsv_params.model_copy(update={"vol_of_vol": 0.6}))
        log_ratio = np.log(spot.values / 1e-4)
        assert np.allclose(np.log(wider.values / 1e-4), 2.0 * log_ratio)

    def test_log_variance_increments_follow_the_power_law(self):
        xi, taus = 0.3, (1, 4, 16)
        moments = []
        for seed in range(10):
            params = RfsvParams(sigma_base=0.01, vol_of_vol=xi, hurst=0.25, days=5000, seed=seed)
            log_variance = np.log(simulate_rfsv_variance(params).values)
            moments.append([abs_moment_overlapping(log_variance, 2.0, tau) for tau in taus])
        expected = 4.0 * xi ** 2 * np.asarray(taus) ** 0.5
        assert np.allclose(np.mean(moments, axis=0), expected, rtol=0.1)

    def test_realized_variance_has_one_value_per_day(self, rfsv_params):
        spot, realized = simulate_rfsv_realized(rfsv_params, substeps=3)
        assert len(realized) == rfsv_params.days
        assert realized.n_intraday == 12
        assert realized.diagnostics["days_without_anchor"] == 0
        assert np.all(realized.values > 0)

    def test_realized_variance_tracks_spot_level(self):
        params = RfsvParams(sigma_base=0.01, vol_of_vol=0.05, hurst=0.3, days=200, steps_per_day=1, seed=2)
        spot, realized = simulate_rfsv_realized(params, substeps=100)
        assert np.mean(realized.values) == pytest.approx(np.mean(spot.values), rel=0.05)

    def test_rejects_single_sample(self):
        with pytest.raises(ConfigError):
            simulate_rfsv_variance(RfsvParams(sigma_base=0.01, vol_of_vol=0.3, hurst=0.2, days=1))

    def test_params_validated(self):
        with pytest.raises(ValidationError):
            RfsvParams(sigma_base=0.0, vol_of_vol=0.3, hurst=0.2, days=10)


class TestGbmVariance:
    def test_starts_at_sigma0_squared(self):
        path = simulate_gbm_variance(GbmVarianceParams(sigma0=0.02, beta=0.1, days=50, seed=1))
        assert path.values[0] == pytest.approx(4e-4)
        assert path.start == 0.0
        assert len(path) == 50

    def test_martingale_mean(self):
        finals = [
            simulate_gbm_variance(GbmVarianceParams(sigma0=1.0, beta=0.2, days=11, seed=s)).values[-1]
            for s in range(400)
        ]
        assert np.mean(finals) == pytest.approx(1.0, abs=0.12)

    def test_marginal_is_lognormal(self):
        beta, day = 0.2, 10
        values = [
            simulate_gbm_variance(GbmVarianceParams(sigma0=0.1, beta=beta, days=day + 1, seed=s)).values[day]
            for s in range(500)
        ]
        law = stats.lognorm(s=beta * math.sqrt(day), scale=0.01 * math.exp(-0.5 * beta ** 2 * day))
        assert stats.kstest(values, law.cdf).pvalue > 0.001

    def test_noisy_pair_is_daily(self):
        params = GbmVarianceParams(sigma0=0.01, beta=0.05, days=30, steps_per_day=4, seed=3)
        path, noisy = simulate_noisy_gbm_variance(params, NoiseSpec.from_intraday(36, seed=3))
        assert len(path) == 30
        assert path.step == 1.0
        assert len(noisy) == 30
        assert noisy.n_intraday == 36


class TestObservationNoise:
    def test_from_intraday(self):
        noise = NoiseSpec.from_intraday(50)
        assert noise.relative_sd == pytest.approx(0.2)
        assert noise.n_intraday == 50

    def test_zero_noise_keeps_the_path(self):
        path = PathSeries(values=[1.0, 2.0], step=1.0, kind="variance")
        noisy = add_observation_noise(path, NoiseSpec(relative_sd=0.0))
        assert np.array_equal(noisy.values, [1.0, 2.0])
        assert noisy.kind == ProxyKind.VARIANCE
        assert noisy.n_intraday == 1

    def test_n_intraday_inferred_from_relative_sd(self):
        path = PathSeries(values=np.ones(5), step=1.0, kind="variance")
        noisy = add_observation_noise(path, NoiseSpec(relative_sd=math.sqrt(2.0 / 36)))
        assert noisy.n_intraday == 36

    def test_relative_error_has_requested_spread(self):
        path = PathSeries(values=np.full(20_000, 3.0), step=1.0, kind="variance")
        noisy = add_observation_noise(path, NoiseSpec(relative_sd=0.1, seed=4))
        assert np.std(noisy.values / 3.0 - 1.0) == pytest.approx(0.1, rel=0.03)

    def test_non_positive_draws_are_floored(self, caplog):
        path = PathSeries(values=np.ones(1000), step=1.0, kind="variance")
        noisy = add_observation_noise(path, NoiseSpec(relative_sd=2.0, seed=1))
        assert noisy.diagnostics["floored"] > 0
        assert np.all(noisy.values > 0)
        assert "Floored" in caplog.text

    @pytest.mark.parametrize("relative_sd", [0.1, 0.25, 0.3])
    def test_flooring_is_rare_at_moderate_noise(self, relative_sd):
        path = PathSeries(values=np.ones(100_000), step=1.0, kind="variance")
        noisy = add_observation_noise(path, NoiseSpec(relative_sd=relative_sd, seed=6))
        assert noisy.diagnostics["floored"] / len(noisy) < 0.001

    def test_rejects_non_positive_clean_path(self):
        path = PathSeries(values=[1.0, 0.0], step=1.0, kind="variance")
        with pytest.raises(DataError) as excinfo:
            add_observation_noise(path, NoiseSpec(relative_sd=0.1))
        assert excinfo.value.index == 1


class TestPricePath:
    def test_shape_and_origin(self):
        spot = PathSeries(values=[1e-4, 4e-4], step=1.0, kind="variance")
        prices = simulate_price_path(spot, substeps=10, seed=0)
        assert len(prices) == 21
        assert prices.values[0] == 0.0
        assert prices.step == pytest.approx(0.1)

    def test_zero_variance_is_flat(self):
        spot = PathSeries(values=np.zeros(3), step=1.0, kind="variance")
        assert np.array_equal(simulate_price_path(spot, substeps=2, seed=0).values, np.zeros(7))

    def test_price_is_a_martingale(self):
        spot = PathSeries(values=np.full(10, 1e-4), step=1.0, kind="variance")
        finals = np.exp([simulate_price_path(spot, substeps=100, seed=s).values[-1] for s in range(1000)])
        assert np.mean(finals) == pytest.approx(1.0, abs=0.004)

    def test_negative_variance_rejected(self):
        spot = PathSeries(values=[1.0, -1.0], step=1.0, kind="variance")
        with pytest.raises(DataError):
            simulate_price_path(spot, substeps=1, seed=0)


class TestSyntheticMinuteBars:
    def test_business_day_minutes(self):
        params = RfsvParams(sigma_base=0.005, vol_of_vol=0.3, hurst=0.2, days=3, seed=9)
        bars = synthetic_minute_bars(params, start_date="2021-03-05")
        assert list(bars.columns) == ["timestamp", "price"]
        assert len(bars) == 3 * 1440
        days = bars["timestamp"].dt.normalize().unique()
        assert list(pd.DatetimeIndex(days).strftime("%Y-%m-%d")) == ["2021-03-05", "2021-03-08", "2021-03-09"]
        assert bars["timestamp"].iloc[1] - bars["timestamp"].iloc[0] == pd.Timedelta(minutes=1)
        assert np.all(bars["price"] > 0)
