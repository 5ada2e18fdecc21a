"""Daily variance/volatility proxies.

Realized variance from intraday log-prices, the discrete day-average of a
spot variance path, and conversions between variance, volatility and their
logarithms.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from roughfilter.errors import ConfigError, DataError
from roughfilter.fractional import PathSeries

logger = logging.getLogger(__name__)


class ProxyKind(str, Enum):
    VARIANCE = "variance"
    VOLATILITY = "volatility"
    LOG_VARIANCE = "log_variance"
    LOG_VOLATILITY = "log_volatility"

    @property
    def is_log(self) -> bool:
        return self in (ProxyKind.LOG_VARIANCE, ProxyKind.LOG_VOLATILITY)


@dataclass
class DailyProxySeries:
    """One proxy value per day.

    Level kinds (variance, volatility) may hold zeros, e.g. flat synthetic
    days; sign checks happen when a square root or logarithm is taken.
    """
    values: np.ndarray
    kind: ProxyKind
    n_intraday: int
    dates: Optional[np.ndarray] = None
    diagnostics: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.kind = ProxyKind(self.kind)
        if self.values.ndim != 1:
            raise DataError(f"Proxy values must be one-dimensional, got shape {self.values.shape}")
        bad = np.flatnonzero(~np.isfinite(self.values))
        if bad.size:
            raise DataError(f"Non-finite proxy value at day {bad[0]}", index=int(bad[0]))
        if self.n_intraday < 1:
            raise ConfigError(f"n_intraday must be >= 1, got {self.n_intraday}")
        if self.dates is not None:
            self.dates = np.asarray(self.dates)
            if len(self.dates) != len(self.values):
                raise DataError(f"{len(self.dates)} dates for {len(self.values)} proxy values")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def day_count(self) -> int:
        return len(self.values)


def realized_variance(
    intraday_log_prices: PathSeries,
    n_per_day: int,
    *,
    day_anchors: Optional[Sequence[float]] = None,
    normalization: str = "sum",
) -> DailyProxySeries:
    """Sum of squared intraday log-returns, one value per day.

    Days are consecutive blocks of `n_per_day` samples. The first return of a
    day starts from its anchor: by default the last sample of the previous
    day, or a leading sample when the path holds D * n + 1 points. Without an
    anchor (day 0 of a D * n path, or NaN in `day_anchors`) the day has
    n - 1 returns.

    Args:
        intraday_log_prices: Log-price path
        n_per_day: Samples per day
        day_anchors: Optional per-day starting log-prices (NaN for none)
        normalization: "sum" (realized variance) or "mean" (average squared return)

    Raises:
        DataError: If the path does not split into whole days
    """
    if n_per_day < 1:
        raise ConfigError(f"n_per_day must be >= 1, got {n_per_day}")
    if normalization not in ("sum", "mean"):
        raise ConfigError(f"Unknown normalization: {normalization!r}. Use 'sum' or 'mean'.")

    values = intraday_log_prices.values
    total = len(values)
    leading = None
    if total % n_per_day == 0:
        body = values
    elif total % n_per_day == 1:
        leading, body = values[0], values[1:]
    else:
        raise DataError(
            f"Path of {total} samples is not a whole number of {n_per_day}-sample days; "
            "align days first (see roughfilter.ingest.build_days)"
        )

    days = len(body) // n_per_day
    if days == 0:
        raise DataError("Path holds no complete day")
    grid = body.reshape(days, n_per_day)

    if day_anchors is not None:
        anchors = np.asarray(day_anchors, dtype=float)
        if anchors.shape != (days,):
            raise DataError(f"Expected {days} day anchors, got {anchors.shape}")
    else:
        anchors = np.empty(days)
        anchors[0] = np.nan if leading is None else leading
        anchors[1:] = grid[:-1, -1]

    first = grid[:, 0] - anchors
    has_first = ~np.isnan(first)
    squares = np.sum(np.diff(grid, axis=1) ** 2, axis=1) + np.where(has_first, first, 0.0) ** 2
    counts = (n_per_day - 1) + has_first.astype(int)

    if normalization == "mean":
        squares = np.divide(squares, counts, out=np.zeros_like(squares), where=counts > 0)

    short_days = int(np.sum(~has_first))
    if short_days:
        logger.debug(f"{short_days} day(s) without an opening anchor use {n_per_day - 1} returns")

    return DailyProxySeries(
        values=squares,
        kind=ProxyKind.VARIANCE,
        n_intraday=n_per_day,
        diagnostics={"days_without_anchor": short_days},
    )


def averaged_spot_variance(spot_variance: PathSeries, d: int, N: int) -> DailyProxySeries:
    """Discrete integrated variance (d / N) * sum_i sigma^2_{t - i d / N}.

    `spot_variance` holds N samples per day. Each output value covers a block
    of d days and uses every d-th sample of the block, ending at the block's
    last sample; trailing samples that do not fill a block are ignored.
    """
    if d < 1 or N < 1:
        raise ConfigError(f"d and N must be >= 1, got d={d}, N={N}")
    block = d * N
    if len(spot_variance) < block:
        raise DataError(f"Spot path of {len(spot_variance)} samples is shorter than one {d}-day block ({block})")

    blocks = len(spot_variance) // block
    picked = spot_variance.values[: blocks * block].reshape(blocks, N, d)[:, :, d - 1]
    return DailyProxySeries(
        values=d * picked.mean(axis=1),
        kind=ProxyKind.VARIANCE,
        n_intraday=N,
        diagnostics={"block_days": d},
    )


def _positive_levels(series: DailyProxySeries) -> Tuple[np.ndarray, int]:
    """Level values ready for a logarithm; zeros become the smallest positive value."""
    values = series.values.copy()
    negative = np.flatnonzero(values < 0)
    if negative.size:
        index = int(negative[0])
        raise DataError(f"Negative {series.kind.value} {values[index]:.3e} at day {index}", index=index)

    zeros = values == 0
    replaced = int(zeros.sum())
    if replaced:
        positive = values[~zeros]
        if positive.size == 0:
            raise DataError(f"All {series.kind.value} proxies are zero; no logarithm exists", index=0)
        values[zeros] = positive.min()
        logger.warning(f"Replaced {replaced} zero {series.kind.value} proxies by the smallest positive value")
    return values, replaced


def _non_negative_levels(series: DailyProxySeries) -> np.ndarray:
    negative = np.flatnonzero(series.values < 0)
    if negative.size:
        index = int(negative[0])
        raise DataError(f"Negative {series.kind.value} {series.values[index]:.3e} at day {index}", index=index)
    return series.values


def convert(series: DailyProxySeries, kind: ProxyKind) -> DailyProxySeries:
    """Re-express a proxy series as another kind."""
    kind = ProxyKind(kind)
    source = series.kind
    diagnostics = dict(series.diagnostics)

    if source == kind:
        return replace(series, values=series.values.copy(), diagnostics=diagnostics)

    if source.is_log:
        log_variance = series.values if source == ProxyKind.LOG_VARIANCE else 2.0 * series.values
        if kind == ProxyKind.LOG_VARIANCE:
            values = log_variance
        elif kind == ProxyKind.LOG_VOLATILITY:
            values = 0.5 * log_variance
        elif kind == ProxyKind.VARIANCE:
            values = np.exp(log_variance)
        else:
            values = np.exp(0.5 * log_variance)
    elif not kind.is_log:
        levels = _non_negative_levels(series)
        values = np.sqrt(levels) if kind == ProxyKind.VOLATILITY else levels ** 2
    else:
        levels, replaced = _positive_levels(series)
        if replaced:
            diagnostics["zero_replaced"] = diagnostics.get("zero_replaced", 0) + replaced
        log_variance = np.log(levels) if source == ProxyKind.VARIANCE else 2.0 * np.log(levels)
        values = log_variance if kind == ProxyKind.LOG_VARIANCE else 0.5 * log_variance

    return replace(series, values=values, kind=kind, diagnostics=diagnostics)


def to_log(series: DailyProxySeries) -> DailyProxySeries:
    """variance -> log_variance, volatility -> log_volatility."""
    if series.kind.is_log:
        return convert(series, series.kind)
    target = ProxyKind.LOG_VARIANCE if series.kind == ProxyKind.VARIANCE else ProxyKind.LOG_VOLATILITY
    return convert(series, target)


def to_volatility(series: DailyProxySeries) -> DailyProxySeries:
    """variance -> volatility, log_variance -> log_volatility."""
    if series.kind in (ProxyKind.VOLATILITY, ProxyKind.LOG_VOLATILITY):
        return convert(series, series.kind)
    target = ProxyKind.VOLATILITY if series.kind == ProxyKind.VARIANCE else ProxyKind.LOG_VOLATILITY
    return convert(series, target)
