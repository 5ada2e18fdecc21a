"""Variance models and intraday price synthesis.

RFSV (log-volatility driven by an fBm), geometric Brownian variance, the
additive observation-noise model, and zero-drift log-price paths with
volatility frozen between variance samples.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from roughfilter.config import MINUTES_PER_DAY
from roughfilter.errors import ConfigError, DataError
from roughfilter.fractional import FbmParams, PathSeries, simulate_fbm
from roughfilter.proxies import DailyProxySeries, ProxyKind, realized_variance
from roughfilter.seeding import STREAM_NOISE, STREAM_OBSERVATION, STREAM_PRICE, make_rng

logger = logging.getLogger(__name__)

# Noisy variances at or below zero are floored at this fraction of the path median.
NOISE_FLOOR_FRACTION = 1e-12


class RfsvParams(BaseModel):
    """sigma_t = sigma_base * exp(vol_of_vol * B^H_t), sampled steps_per_day times a day."""
    model_config = ConfigDict(frozen=True)

    sigma_base: float = Field(..., gt=0.0, description="Daily volatility level sigma")
    vol_of_vol: float = Field(..., gt=0.0, description="xi")
    hurst: float = Field(..., gt=0.0, lt=1.0)
    days: int = Field(..., ge=1)
    steps_per_day: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)


class GbmVarianceParams(BaseModel):
    """sigma_t^2 = sigma0^2 exp(beta B_t - beta^2 t / 2)."""
    model_config = ConfigDict(frozen=True)

    sigma0: float = Field(..., gt=0.0, description="Initial daily volatility")
    beta: float = Field(..., gt=0.0, description="Vol of vol of the variance, per sqrt(day)")
    days: int = Field(..., ge=1)
    steps_per_day: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)


class NoiseSpec(BaseModel):
    """Multiplicative Gaussian observation noise sigma^2 (1 + relative_sd Z)."""
    model_config = ConfigDict(frozen=True)

    relative_sd: float = Field(..., ge=0.0)
    seed: int = Field(0, ge=0)
    n_intraday: Optional[int] = Field(None, ge=1, description="Proxy step count recorded on the noisy series")

    @classmethod
    def from_intraday(cls, n: int, seed: int = 0) -> "NoiseSpec":
        """Noise of a realized variance computed from n returns: relative sd sqrt(2/n)."""
        return cls(relative_sd=math.sqrt(2.0 / n), seed=seed, n_intraday=n)


def simulate_rfsv_variance(params: RfsvParams) -> PathSeries:
    """Spot variance sigma_base^2 exp(2 xi B^H_t) on the intraday grid."""
    length = params.days * params.steps_per_day
    if length < 2:
        raise ConfigError("RFSV path needs at least two samples (days * steps_per_day >= 2)")

    fbm = simulate_fbm(FbmParams(
        hurst=params.hurst,
        scale=1.0,
        step=1.0 / params.steps_per_day,
        length=length,
        seed=params.seed,
    ))
    values = params.sigma_base ** 2 * np.exp(2.0 * params.vol_of_vol * fbm.values)
    return PathSeries(
        values=values,
        step=fbm.step,
        kind="variance",
        start=fbm.start,
        metadata={"model": "rfsv", "steps_per_day": params.steps_per_day},
    )


def simulate_gbm_variance(params: GbmVarianceParams) -> PathSeries:
    """Exact lognormal variance path starting at sigma0^2 at t = 0."""
    length = params.days * params.steps_per_day
    step = 1.0 / params.steps_per_day
    rng = make_rng(params.seed, STREAM_NOISE)

    brownian = np.zeros(length)
    brownian[1:] = np.cumsum(math.sqrt(step) * rng.standard_normal(length - 1))
    times = step * np.arange(length)

    values = params.sigma0 ** 2 * np.exp(params.beta * brownian - 0.5 * params.beta ** 2 * times)
    return PathSeries(
        values=values,
        step=step,
        kind="variance",
        start=0.0,
        metadata={"model": "gbm_var", "steps_per_day": params.steps_per_day},
    )


def add_observation_noise(variance_path: PathSeries, noise: NoiseSpec) -> DailyProxySeries:
    """Noisy proxies sigma^2_t (1 + relative_sd Z_t) with Z_t i.i.d. N(0, 1).

    Values at or below zero are floored at NOISE_FLOOR_FRACTION times the
    path median; the count is kept in `diagnostics["floored"]`.
    """
    clean = variance_path.values
    non_positive = np.flatnonzero(clean <= 0)
    if non_positive.size:
        index = int(non_positive[0])
        raise DataError(f"Variance path must be strictly positive (index {index})", index=index)

    z = make_rng(noise.seed, STREAM_OBSERVATION).standard_normal(len(clean))
    noisy = clean * (1.0 + noise.relative_sd * z)

    floor = NOISE_FLOOR_FRACTION * float(np.median(clean))
    floored = noisy <= 0
    count = int(floored.sum())
    if count:
        noisy[floored] = floor
        logger.warning(f"Floored {count} non-positive noisy variances ({count / len(noisy):.4%} of samples)")

    if noise.n_intraday is not None:
        n_intraday = noise.n_intraday
    elif noise.relative_sd > 0:
        n_intraday = max(1, int(round(2.0 / noise.relative_sd ** 2)))
    else:
        n_intraday = 1

    return DailyProxySeries(
        values=noisy,
        kind=ProxyKind.VARIANCE,
        n_intraday=n_intraday,
        diagnostics={"floored": count},
    )


def simulate_price_path(variance_path: PathSeries, substeps: int, seed: int) -> PathSeries:
    """Zero-drift log-price path driven by a (daily-unit) variance path.

    Each variance sample holds for `substeps` price steps of length
    step / substeps; increments are sigma sqrt(delta) Z - sigma^2 delta / 2.
    The returned path starts at log S_0 = 0 and has len * substeps + 1 points.
    """
    if substeps < 1:
        raise ConfigError(f"substeps must be >= 1, got {substeps}")
    variance = variance_path.values
    negative = np.flatnonzero(variance < 0)
    if negative.size:
        index = int(negative[0])
        raise DataError(f"Variance path must be non-negative (index {index})", index=index)

    delta = variance_path.step / substeps
    spot = np.repeat(variance, substeps)
    z = make_rng(seed, STREAM_PRICE).standard_normal(len(spot))
    increments = np.sqrt(spot * delta) * z - 0.5 * spot * delta

    log_prices = np.concatenate([[0.0], np.cumsum(increments)])
    return PathSeries(values=log_prices, step=delta, kind="log_price", start=0.0)


def simulate_rfsv_realized(
    params: RfsvParams,
    substeps: int = 1,
    normalization: str = "sum",
) -> Tuple[PathSeries, DailyProxySeries]:
    """RFSV spot variance, its price path and the daily realized variance.

    The realized variance uses steps_per_day * substeps returns per day.
    """
    spot = simulate_rfsv_variance(params)
    prices = simulate_price_path(spot, substeps=substeps, seed=params.seed)
    realized = realized_variance(
        prices,
        n_per_day=params.steps_per_day * substeps,
        normalization=normalization,
    )
    return spot, realized


def simulate_noisy_gbm_variance(
    params: GbmVarianceParams,
    noise: NoiseSpec,
) -> Tuple[PathSeries, DailyProxySeries]:
    """Daily geometric Brownian variance and its noisy observation."""
    path = simulate_gbm_variance(params)
    if params.steps_per_day > 1:
        path = PathSeries(
            values=path.values[:: params.steps_per_day],
            step=1.0,
            kind=path.kind,
            start=path.start,
            metadata=dict(path.metadata),
        )
    return path, add_observation_noise(path, noise)


def synthetic_minute_bars(
    params: RfsvParams,
    start_date: str = "2019-01-07",
    price0: float = 1.1,
) -> pd.DataFrame:
    """RFSV-driven one-minute bars on business days, UTC timestamps.

    `params.steps_per_day` is ignored: the variance is sampled every minute.
    Returns a DataFrame with columns timestamp and price.
    """
    minute_params = params.model_copy(update={"steps_per_day": MINUTES_PER_DAY})
    spot = simulate_rfsv_variance(minute_params)
    log_prices = simulate_price_path(spot, substeps=1, seed=params.seed).values[1:]

    days = pd.bdate_range(start=start_date, periods=params.days, tz="UTC")
    minutes = pd.to_timedelta(np.arange(MINUTES_PER_DAY), unit="min")
    timestamps = (days.values[:, None] + minutes.values[None, :]).ravel()

    return pd.DataFrame({
        "timestamp": pd.DatetimeIndex(timestamps, tz="UTC"),
        "price": price0 * np.exp(log_prices),
    })
