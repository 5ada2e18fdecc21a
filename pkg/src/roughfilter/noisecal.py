"""Closed-form noise calculus.

Variance of the realized-variance measurement error, the smoothing error of
day-averaged variance (finite-N double sum and its N -> infinity factor
f(tau, H)), and the Hurst exponent perceived through that smoothing.
"""
import logging
from typing import Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from roughfilter.errors import ConfigError
from roughfilter.moments import LogLogCurve

logger = logging.getLogger(__name__)

BIAS_TABLE_COLUMNS = ["h_in", "N", "d", "tau1", "tau2", "perceived_h"]


class SmoothingSpec(BaseModel):
    """Variance following an fBm of exponent `hurst` and scale `xi`, averaged
    over `d` days from `N` samples per day."""
    model_config = ConfigDict(frozen=True)

    hurst: float = Field(..., gt=0.0, lt=1.0)
    xi: float = Field(1.0, gt=0.0)
    d: int = Field(1, ge=1)
    N: int = Field(1, ge=1)


def measurement_noise_variance(sigma2: float, n: int) -> float:
    """Asymptotic variance 2 sigma^4 / n of a realized variance from n returns."""
    if sigma2 <= 0:
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    return 2.0 * sigma2 ** 2 / n


def smoothing_variance_finite(tau: int, spec: SmoothingSpec) -> float:
    """Variance of a tau-block increment of the averaged variance.

    xi^2 (d/N)^2 sum_{i,j=1..N} (|tau d + (j-i) d/N|^2H - |(j-i) d/N|^2H),
    summed once per lag l = j - i with weight N - |l|.
    """
    if tau < 1:
        raise ConfigError(f"tau must be >= 1, got {tau}")
    two_h = 2.0 * spec.hurst
    N, d = spec.N, spec.d

    lags = np.arange(-(N - 1), N, dtype=float)
    weights = N - np.abs(lags)
    shift = lags * d / N
    terms = np.abs(tau * d + shift) ** two_h - np.abs(shift) ** two_h
    return float(spec.xi ** 2 * (d / N) ** 2 * np.dot(weights, terms))


def smoothing_factor(tau, hurst: float):
    """f(tau, H) = tau^2 / ((2H+1)(2H+2)) [(1+1/tau)^(2H+2) + (1-1/tau)^(2H+2) - 2 - 2 tau^-(2H+2)].

    Limit of smoothing_variance_finite / (xi^2 tau^2H) as N grows, d = 1.
    Accepts scalars or arrays of tau >= 1.
    """
    if not 0.0 < hurst < 1.0:
        raise ConfigError(f"hurst must lie in (0, 1), got {hurst}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 1):
        raise ConfigError("tau must be >= 1")

    a = 2.0 * hurst + 2.0
    x = 1.0 / tau_arr
    # log1p(-1) = -inf at tau = 1, where expm1 correctly gives -1
    with np.errstate(divide="ignore"):
        bracket = np.expm1(a * np.log1p(x)) + np.expm1(a * np.log1p(-x)) - 2.0 * x ** a
    value = tau_arr ** 2 / ((2.0 * hurst + 1.0) * a) * bracket
    return float(value) if value.ndim == 0 else value


def perceived_hurst_bias(h_in: float, N: int, d: int, scale_pair: Tuple[float, float], xi: float = 1.0) -> float:
    """Two-point Hurst exponent of the smoothed fBm between scales tau1 < tau2."""
    tau1, tau2 = scale_pair
    if not tau1 < tau2:
        raise ConfigError(f"Scale pair must satisfy tau1 < tau2, got {scale_pair}")
    spec = SmoothingSpec(hurst=h_in, xi=xi, d=d, N=N)
    v1 = smoothing_variance_finite(tau1, spec)
    v2 = smoothing_variance_finite(tau2, spec)
    return 0.5 * (np.log(v2) - np.log(v1)) / (np.log(tau2) - np.log(tau1))


def bias_table(
    h_grid: Iterable[float],
    N_values: Iterable[int],
    d: int,
    scale_pairs: Sequence[Tuple[int, int]],
) -> pd.DataFrame:
    """Perceived Hurst exponent for every (h_in, N, scale pair) combination."""
    rows = []
    for N in N_values:
        for h_in in h_grid:
            for tau1, tau2 in scale_pairs:
                rows.append({
                    "h_in": float(h_in),
                    "N": int(N),
                    "d": int(d),
                    "tau1": int(tau1),
                    "tau2": int(tau2),
                    "perceived_h": perceived_hurst_bias(h_in, N, d, (tau1, tau2)),
                })
    logger.info(f"Computed bias table with {len(rows)} rows")
    return pd.DataFrame(rows, columns=BIAS_TABLE_COLUMNS)


def smoothed_fbm_curve(spec: SmoothingSpec, taus: Iterable[int]) -> LogLogCurve:
    """Second moments of the averaged fBm variance at each scale."""
    taus = np.asarray(list(taus), dtype=int)
    return LogLogCurve(
        taus=taus,
        moments=np.array([smoothing_variance_finite(int(tau), spec) for tau in taus]),
        k=2.0,
        source_kind="variance",
        day_count=0,
        metadata={"theoretical": True, "hurst": spec.hurst, "N": spec.N, "d": spec.d},
    )
