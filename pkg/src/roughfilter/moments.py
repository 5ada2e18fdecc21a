"""Absolute-moment statistics, log-log curves and Hurst regression."""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from roughfilter.config import settings
from roughfilter.errors import ConfigError, DataError
from roughfilter.fractional import FbmParams, fbm_abs_moment
from roughfilter.proxies import DailyProxySeries

logger = logging.getLogger(__name__)

SeriesLike = Union[DailyProxySeries, Sequence[float], np.ndarray]
Window = Tuple[float, float]

LOGLOG_COLUMNS = ["tau_days", "log_tau", "moment", "log_moment"]

_GRID_MANTISSAS = (1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.5)


@dataclass
class LogLogCurve:
    """Points (tau, M_{k,tau}) of one moment order."""
    taus: np.ndarray
    moments: np.ndarray
    k: float
    source_kind: str
    day_count: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=int)
        self.moments = np.asarray(self.moments, dtype=float)
        self.source_kind = str(getattr(self.source_kind, "value", self.source_kind))
        if self.taus.shape != self.moments.shape:
            raise DataError(f"{len(self.taus)} scales for {len(self.moments)} moments")
        if np.any(np.diff(self.taus) <= 0):
            raise DataError("Curve scales must be strictly increasing")
        if np.any(~(self.moments > 0)):
            raise DataError("Curve moments must be positive")

    def __len__(self) -> int:
        return len(self.taus)

    @property
    def log_taus(self) -> np.ndarray:
        return np.log(self.taus)

    @property
    def log_moments(self) -> np.ndarray:
        return np.log(self.moments)

    def window(self, scale_min: float, scale_max: float) -> np.ndarray:
        """Boolean mask of the points with scale_min <= tau <= scale_max."""
        return (self.taus >= scale_min) & (self.taus <= scale_max)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "tau_days": self.taus,
            "log_tau": self.log_taus,
            "moment": self.moments,
            "log_moment": self.log_moments,
        }, columns=LOGLOG_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, k: float, source_kind: str, day_count: int) -> "LogLogCurve":
        missing = [column for column in ("tau_days", "moment") if column not in frame.columns]
        if missing:
            raise DataError(f"Curve table lacks columns: {', '.join(missing)}")
        return cls(
            taus=frame["tau_days"].to_numpy(),
            moments=frame["moment"].to_numpy(),
            k=k,
            source_kind=source_kind,
            day_count=day_count,
        )


@dataclass
class HurstEstimate:
    """Result of regressing ln M on ln tau over one window."""
    hurst: float
    intercept: float
    k: float
    scale_min: float
    scale_max: float
    r_squared: float
    slope: float
    points: int
    residual_ss: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _values(series: SeriesLike) -> np.ndarray:
    if isinstance(series, DailyProxySeries):
        return series.values
    return np.asarray(series, dtype=float)


def default_tau_grid(day_count: int, tau_max: Optional[int] = None, divisor: int = 3) -> np.ndarray:
    """Integer scales 1..10, 12, 15, 20, 25, 30, 40, ... capped at N / divisor.

    N = day_count - 1 is the number of one-day increments.
    """
    cap = (day_count - 1) // divisor
    if tau_max is not None:
        cap = min(cap, int(tau_max))
    if cap < 1:
        raise DataError(f"Series of {day_count} days is too short for any scale")

    grid = set(range(1, min(cap, 10) + 1))
    decade = 10.0
    while decade <= cap:
        grid.update(int(round(m * decade)) for m in _GRID_MANTISSAS if m * decade <= cap)
        decade *= 10.0
    return np.array(sorted(grid), dtype=int)


def abs_moment_overlapping(series: SeriesLike, k: float, tau: int, overlapping: bool = True) -> float:
    """Mean of |X_i - X_{i-tau}|^k over all N - tau + 1 overlapping increments.

    With overlapping=False, the floor(N / tau) disjoint increments
    X_{i tau} - X_{(i-1) tau} are used instead.
    """
    values = _values(series)
    tau = int(tau)
    if tau < 1 or tau >= len(values):
        raise DataError(f"Scale tau={tau} outside [1, {len(values) - 1}] for a series of {len(values)} points")

    if overlapping:
        increments = values[tau:] - values[:-tau]
    else:
        blocks = (len(values) - 1) // tau
        increments = np.diff(values[: blocks * tau + 1: tau])
    return float(np.mean(np.abs(increments) ** k))


def build_loglog(
    series: SeriesLike,
    k: float = 2.0,
    tau_grid: Optional[Iterable[int]] = None,
    overlapping: bool = True,
    divisor: Optional[int] = None,
) -> LogLogCurve:
    """Absolute moments of `series` over a grid of scales.

    Scales outside [1, N / divisor] are discarded, as are zero moments; both
    are logged.

    Raises:
        DataError: If no scale survives
    """
    values = _values(series)
    divisor = divisor or settings.TAU_CAP_DIVISOR
    cap = (len(values) - 1) // divisor

    grid = default_tau_grid(len(values), divisor=divisor) if tau_grid is None else np.unique(np.asarray(list(tau_grid), dtype=int))
    outside = grid[(grid < 1) | (grid > cap)]
    if outside.size:
        logger.warning(f"Discarded {outside.size} scales outside [1, {cap}] days: {outside.tolist()}")
    grid = grid[(grid >= 1) & (grid <= cap)]
    if grid.size == 0:
        raise DataError(f"No scale left in [1, {cap}] for a series of {len(values)} days")

    moments = np.array([abs_moment_overlapping(values, k, tau, overlapping=overlapping) for tau in grid])
    zero = moments <= 0
    if zero.any():
        logger.warning(f"Excluded {int(zero.sum())} scales with zero moment: {grid[zero].tolist()}")
        grid, moments = grid[~zero], moments[~zero]
    if grid.size == 0:
        raise DataError("All absolute moments are zero (constant series?)")

    source_kind = series.kind.value if isinstance(series, DailyProxySeries) else "array"
    return LogLogCurve(
        taus=grid,
        moments=moments,
        k=k,
        source_kind=source_kind,
        day_count=len(values),
        metadata={"overlapping": overlapping},
    )


def regress_hurst(curve: LogLogCurve, scale_min: float, scale_max: float) -> HurstEstimate:
    """Unweighted least squares of ln M on ln tau; H is the slope over k."""
    mask = curve.window(scale_min, scale_max)
    if mask.sum() < 2:
        raise DataError(f"Fewer than 2 curve points in [{scale_min}, {scale_max}] days")

    x = curve.log_taus[mask]
    y = curve.log_moments[mask]
    fit = stats.linregress(x, y)

    residuals = y - (fit.intercept + fit.slope * x)
    residual_ss = float(np.sum(residuals ** 2))
    total_ss = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - residual_ss / total_ss if total_ss > 0 else 1.0

    return HurstEstimate(
        hurst=float(fit.slope) / curve.k,
        intercept=float(fit.intercept),
        k=curve.k,
        scale_min=float(scale_min),
        scale_max=float(scale_max),
        r_squared=float(np.clip(r_squared, 0.0, 1.0)),
        slope=float(fit.slope),
        points=int(mask.sum()),
        residual_ss=residual_ss,
    )


def convexity_stat(curve: LogLogCurve, small: Optional[Window] = None, large: Optional[Window] = None) -> float:
    """Large-scale slope minus small-scale slope; positive means convex."""
    if len(curve) < 3:
        raise DataError("Convexity needs at least 3 curve points")
    small = small or settings.SMALL_SCALE
    large = large or settings.LARGE_SCALE
    return regress_hurst(curve, *large).slope - regress_hurst(curve, *small).slope


def theoretical_fbm_curve(params: FbmParams, taus: Iterable[int], k: float = 2.0) -> LogLogCurve:
    """Exact k-th absolute moments of fBm increments."""
    taus = np.asarray(list(taus), dtype=int)
    return LogLogCurve(
        taus=taus,
        moments=np.asarray(fbm_abs_moment(taus, k, params), dtype=float),
        k=k,
        source_kind="fbm",
        day_count=params.length,
        metadata={"theoretical": True, "hurst": params.hurst, "scale": params.scale},
    )


def average_curves(curves: Sequence[LogLogCurve]) -> LogLogCurve:
    """Average log-moments across curves on their common scales.

    `metadata["log_moment_se"]` holds the standard error of the mean
    log-moment at each scale.
    """
    if not curves:
        raise ConfigError("No curves to average")
    orders = {curve.k for curve in curves}
    if len(orders) != 1:
        raise ConfigError(f"Cannot average curves of different orders: {sorted(orders)}")

    common = curves[0].taus
    for curve in curves[1:]:
        common = np.intersect1d(common, curve.taus)
    if common.size == 0:
        raise DataError("Curves share no scale")

    logs = np.vstack([curve.log_moments[np.isin(curve.taus, common)] for curve in curves])
    mean_log = logs.mean(axis=0)
    se = logs.std(axis=0, ddof=1) / np.sqrt(len(curves)) if len(curves) > 1 else np.zeros_like(mean_log)

    first = curves[0]
    return LogLogCurve(
        taus=common,
        moments=np.exp(mean_log),
        k=first.k,
        source_kind=first.source_kind,
        day_count=first.day_count,
        metadata={**first.metadata, "curves": len(curves), "log_moment_se": se.tolist()},
    )


def scale_summary(
    curve: LogLogCurve,
    small: Optional[Window] = None,
    large: Optional[Window] = None,
) -> Dict[str, Optional[float]]:
    """Small- and large-scale perceived Hurst exponents of one curve.

    A window holding fewer than two points yields None.
    """
    small = small or settings.SMALL_SCALE
    large = large or settings.LARGE_SCALE
    summary: Dict[str, Optional[float]] = {}
    for label, window in (("small_scale", small), ("large_scale", large)):
        try:
            estimate = regress_hurst(curve, *window)
        except DataError:
            logger.warning(f"No {label} estimate: fewer than 2 points in {window} days")
            summary[f"{label}_h"] = None
            summary[f"{label}_r_squared"] = None
        else:
            summary[f"{label}_h"] = estimate.hurst
            summary[f"{label}_r_squared"] = estimate.r_squared
    return summary


def estimates_table(estimates: List[HurstEstimate]) -> pd.DataFrame:
    """Tabulate several Hurst estimates."""
    return pd.DataFrame([estimate.to_dict() for estimate in estimates])
