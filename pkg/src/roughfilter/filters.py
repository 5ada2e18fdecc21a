"""Bias removal for log-log curves of noisy volatility proxies.

A raw second moment M of log-proxy increments is corrected in two steps:
the measurement-noise offset (1/n for log-volatility, 4/n for
log-variance) is subtracted, then the result is divided by the smoothing
factor f(tau, H).
"""
import logging
from enum import Enum
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import special

from roughfilter.config import settings
from roughfilter.errors import ConfigError, DataError, NumericalError
from roughfilter.moments import LOGLOG_COLUMNS, LogLogCurve, abs_moment_overlapping, regress_hurst
from roughfilter.noisecal import smoothing_factor
from roughfilter.proxies import DailyProxySeries, ProxyKind, to_log

logger = logging.getLogger(__name__)

FILTERED_COLUMNS = LOGLOG_COLUMNS + ["offset_applied", "f_value", "dropped"]

SMOOTHING_ASSUMPTION = "smoothing factor derived for variance-as-fBm"

# A perceived H outside (0, 1) cannot feed f; it is clipped to this range.
_HURST_CLIP = (0.01, 0.99)


class OffsetMode(str, Enum):
    ASYMPTOTIC = "asymptotic"
    CHI_SQUARE = "chi_square"


class FilterVariant(str, Enum):
    LOG_VOL_FBM = "log_vol_fbm"
    LOG_VAR_FBM = "log_var_fbm"

    @property
    def source_kind(self) -> ProxyKind:
        return ProxyKind.LOG_VOLATILITY if self is FilterVariant.LOG_VOL_FBM else ProxyKind.LOG_VARIANCE

    def offset(self, n_intraday: int, mode: OffsetMode = OffsetMode.ASYMPTOTIC) -> float:
        """Second moment added by measurement noise to log-proxy increments.

        Asymptotic: 2 Var(log(1 + alpha)) ~ 4/n on log-variance, a quarter of
        that on log-volatility. Chi-square: Var(log chi2_n) = trigamma(n/2)
        replaces 2/n, exact for constant intraday volatility.
        """
        if mode == OffsetMode.CHI_SQUARE:
            log_var_offset = 2.0 * float(special.polygamma(1, n_intraday / 2.0))
        else:
            log_var_offset = 4.0 / n_intraday
        return log_var_offset if self is FilterVariant.LOG_VAR_FBM else 0.25 * log_var_offset


class FilterConfig(BaseModel):
    """Which corrections to apply and with which parameters.

    hurst_input=None uses the raw curve's perceived H over large_scale,
    which falls back to `settings.LARGE_SCALE`.
    """
    model_config = ConfigDict(frozen=True)

    n_intraday: int = Field(..., ge=1)
    hurst_input: Optional[float] = Field(None, gt=0.0, lt=1.0)
    large_scale: Optional[Tuple[float, float]] = None
    variant: FilterVariant = FilterVariant.LOG_VOL_FBM
    offset_mode: OffsetMode = OffsetMode.ASYMPTOTIC
    apply_measurement: bool = True
    apply_smoothing: bool = True

    @field_validator("large_scale")
    @classmethod
    def _ordered_window(cls, value):
        if value is not None and not 1.0 <= value[0] < value[1]:
            raise ValueError(f"large_scale must satisfy 1 <= min < max, got {value}")
        return value


def _check_curve(raw: LogLogCurve, cfg: FilterConfig) -> None:
    if raw.k != 2:
        raise ConfigError(f"Filters apply to second moments only, got k={raw.k}")
    expected = cfg.variant.source_kind.value
    if raw.source_kind != expected:
        raise ConfigError(
            f"Variant {cfg.variant.value} expects a {expected} curve, got {raw.source_kind}; "
            "convert the proxy or pick the other variant"
        )


def resolve_hurst_input(raw: LogLogCurve, cfg: FilterConfig) -> float:
    """H fed to the smoothing factor: configured, else large-scale perceived H."""
    if cfg.hurst_input is not None:
        return cfg.hurst_input

    window = cfg.large_scale or settings.LARGE_SCALE
    try:
        estimate = regress_hurst(raw, *window)
    except DataError:
        logger.warning(
            f"Large-scale window {tuple(window)} holds fewer than 2 points; "
            "using the whole curve for hurst_input"
        )
        estimate = regress_hurst(raw, float(raw.taus.min()), float(raw.taus.max()))

    hurst = float(np.clip(estimate.hurst, *_HURST_CLIP))
    if hurst != estimate.hurst:
        logger.warning(f"Perceived H={estimate.hurst:.4f} clipped to {hurst} for the smoothing factor")
    logger.info(f"hurst_input defaulted to the large-scale perceived H={hurst:.4f}")
    return hurst


def filter_report(raw: LogLogCurve, cfg: FilterConfig) -> pd.DataFrame:
    """Every raw point with its correction; dropped points carry NaN moments."""
    _check_curve(raw, cfg)
    offset = cfg.variant.offset(cfg.n_intraday, cfg.offset_mode) if cfg.apply_measurement else 0.0
    if cfg.apply_smoothing:
        hurst = resolve_hurst_input(raw, cfg)
        f_values = np.asarray(smoothing_factor(raw.taus.astype(float), hurst), dtype=float)
    else:
        hurst = cfg.hurst_input
        f_values = np.ones(len(raw))

    shifted = raw.moments - offset
    dropped = shifted <= 0
    filtered = np.where(dropped, np.nan, shifted / f_values)
    with np.errstate(invalid="ignore"):
        log_filtered = np.log(filtered)

    frame = pd.DataFrame({
        "tau_days": raw.taus,
        "log_tau": raw.log_taus,
        "moment": filtered,
        "log_moment": log_filtered,
        "offset_applied": offset,
        "f_value": f_values,
        "dropped": dropped,
    }, columns=FILTERED_COLUMNS)
    frame.attrs["hurst_input"] = hurst
    return frame


def filter_curve(raw: LogLogCurve, cfg: FilterConfig) -> LogLogCurve:
    """M' = (M - offset) / f(tau, hurst_input) at every point that stays positive.

    Raises:
        NumericalError: If every point is dropped (n too small for the noise)
    """
    report = filter_report(raw, cfg)
    kept = report[~report["dropped"]]
    dropped = int(report["dropped"].sum())
    if dropped:
        logger.warning(
            f"Dropped {dropped} of {len(report)} curve points with M <= offset "
            f"{report['offset_applied'].iloc[0]:.4g}"
        )
    if kept.empty:
        raise NumericalError(
            f"All {len(report)} curve points fall below the measurement offset; "
            f"n_intraday={cfg.n_intraday} is too small for this proxy"
        )

    return LogLogCurve(
        taus=kept["tau_days"].to_numpy(),
        moments=kept["moment"].to_numpy(),
        k=raw.k,
        source_kind=raw.source_kind,
        day_count=raw.day_count,
        metadata={
            **raw.metadata,
            "filtered": True,
            "variant": cfg.variant.value,
            "n_intraday": cfg.n_intraday,
            "hurst_input": report.attrs["hurst_input"],
            "offset": float(report["offset_applied"].iloc[0]),
            "apply_measurement": cfg.apply_measurement,
            "apply_smoothing": cfg.apply_smoothing,
            "dropped": dropped,
            "assumption": SMOOTHING_ASSUMPTION,
        },
    )


def unfilter_curve(filtered: LogLogCurve, cfg: FilterConfig) -> LogLogCurve:
    """Inverse of filter_curve on the kept points: M = M' f(tau, H) + offset."""
    offset = cfg.variant.offset(cfg.n_intraday, cfg.offset_mode) if cfg.apply_measurement else 0.0
    moments = filtered.moments
    if cfg.apply_smoothing:
        hurst = cfg.hurst_input if cfg.hurst_input is not None else filtered.metadata.get("hurst_input")
        if hurst is None:
            raise ConfigError("hurst_input is required to undo the smoothing correction")
        moments = moments * np.asarray(smoothing_factor(filtered.taus.astype(float), hurst), dtype=float)

    metadata = {key: value for key, value in filtered.metadata.items() if key != "filtered"}
    return LogLogCurve(
        taus=filtered.taus,
        moments=moments + offset,
        k=filtered.k,
        source_kind=filtered.source_kind,
        day_count=filtered.day_count,
        metadata=metadata,
    )


def measurement_bias_check(
    noisy: DailyProxySeries,
    clean: DailyProxySeries,
    tau_grid: Iterable[int],
) -> np.ndarray:
    """M_{2,tau}(log noisy) - M_{2,tau}(log clean) at each tau.

    About 4/n for variance proxies and 1/n for volatility proxies.
    """
    if len(noisy) != len(clean):
        raise DataError(f"Misaligned series: {len(noisy)} noisy vs {len(clean)} clean days")
    if noisy.kind != clean.kind:
        raise DataError(f"Series kinds differ: {noisy.kind.value} vs {clean.kind.value}")

    log_noisy = to_log(noisy)
    log_clean = to_log(clean)
    return np.array([
        abs_moment_overlapping(log_noisy, 2.0, int(tau)) - abs_moment_overlapping(log_clean, 2.0, int(tau))
        for tau in tau_grid
    ])
