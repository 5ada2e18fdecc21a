"""Monte-Carlo studies of Hurst estimation on noisy volatility proxies.

Each study fans its seeds out over `settings.WORKERS` threads and reduces
the results in seed order, so outputs depend only on the master seed.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, stats

from roughfilter.config import settings
from roughfilter.errors import ConfigError, NumericalError
from roughfilter.filters import FilterConfig, FilterVariant, OffsetMode, filter_curve, measurement_bias_check
from roughfilter.fractional import FbmParams, FouParams, simulate_fbm, simulate_fou
from roughfilter.ingest import TradingDays, daily_realized_series
from roughfilter.moments import (
    HurstEstimate,
    LogLogCurve,
    abs_moment_overlapping,
    average_curves,
    build_loglog,
    convexity_stat,
    regress_hurst,
    scale_summary,
)
from roughfilter.noisecal import SmoothingSpec, smoothing_variance_finite
from roughfilter.proxies import DailyProxySeries, ProxyKind, averaged_spot_variance, convert, realized_variance
from roughfilter.seeding import fan_out, path_seeds
from roughfilter.volmodels import (
    GbmVarianceParams,
    NoiseSpec,
    RfsvParams,
    simulate_gbm_variance,
    simulate_noisy_gbm_variance,
    simulate_price_path,
    simulate_rfsv_realized,
)

logger = logging.getLogger(__name__)

Window = Tuple[float, float]

STEP_SENSITIVITY_COLUMNS = [
    "step_minutes", "n_per_day", "small_scale_h", "large_scale_h",
    "filtered_small_scale_h", "filtered_large_scale_h",
]


def _mean_se(values: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    count = values.shape[axis]
    se = values.std(axis=axis, ddof=1) / math.sqrt(count) if count > 1 else np.zeros_like(values.mean(axis=axis))
    return values.mean(axis=axis), se


def log_volatility(series: DailyProxySeries) -> DailyProxySeries:
    return convert(series, ProxyKind.LOG_VOLATILITY)


def multi_seed_curve(
    simulate: Callable[[int], DailyProxySeries],
    seeds: Sequence[int],
    k: float = 2.0,
    tau_grid: Optional[Iterable[int]] = None,
    workers: Optional[int] = None,
    divisor: Optional[int] = None,
) -> LogLogCurve:
    """Average log-moment curve of `simulate(seed)` over seeds."""
    grid = None if tau_grid is None else list(tau_grid)
    curves = fan_out(
        lambda seed: build_loglog(simulate(seed), k=k, tau_grid=grid, divisor=divisor),
        seeds,
        workers=workers or settings.WORKERS,
    )
    return average_curves(curves)


@dataclass
class FilterRecoveryResult:
    raw: LogLogCurve
    measurement_filtered: LogLogCurve
    filtered: LogLogCurve
    estimates: Dict[str, HurstEstimate]

    def to_dict(self) -> Dict[str, object]:
        return {name: estimate.to_dict() for name, estimate in self.estimates.items()}


def filter_recovery(
    hurst: float = 0.25,
    vol_of_vol: float = 0.10,
    n_intraday: int = 36,
    days: int = 3206,
    seeds: int = 20,
    sigma_base: float = 0.01,
    window: Window = (1.0, 50.0),
    seed: int = 0,
    offset_mode: OffsetMode = OffsetMode.ASYMPTOTIC,
    workers: Optional[int] = None,
) -> FilterRecoveryResult:
    """RFSV realized volatility from n returns a day: raw vs filtered log-log curves.

    Log-moments are averaged over seeds before filtering; the smoothing
    correction is fed the generating H.
    """
    def simulate(path_seed: int) -> DailyProxySeries:
        params = RfsvParams(
            sigma_base=sigma_base,
            vol_of_vol=vol_of_vol,
            hurst=hurst,
            days=days,
            steps_per_day=n_intraday,
            seed=path_seed,
        )
        _, realized = simulate_rfsv_realized(params)
        return log_volatility(realized)

    taus = np.arange(int(window[0]), int(window[1]) + 1)
    raw = multi_seed_curve(simulate, path_seeds(seed, seeds), tau_grid=taus, workers=workers)

    measurement = filter_curve(raw, FilterConfig(
        n_intraday=n_intraday, offset_mode=offset_mode, apply_smoothing=False,
    ))
    filtered = filter_curve(raw, FilterConfig(
        n_intraday=n_intraday, hurst_input=hurst, offset_mode=offset_mode,
    ))

    estimates = {
        "raw": regress_hurst(raw, *window),
        "measurement_filtered": regress_hurst(measurement, *window),
        "filtered": regress_hurst(filtered, *window),
    }
    logger.info(
        f"Filter recovery H={hurst}: raw {estimates['raw'].hurst:.4f}, "
        f"filtered {estimates['filtered'].hurst:.4f}"
    )
    return FilterRecoveryResult(raw=raw, measurement_filtered=measurement, filtered=filtered, estimates=estimates)


def _noisy_gbm_log_vol(
    sigma0: float,
    beta: float,
    relative_sd: float,
    days: int,
    path_seed: int,
    noise_mode: str,
    n_intraday: int,
) -> Tuple[DailyProxySeries, DailyProxySeries]:
    """(clean, noisy) log-volatility series of a daily gBm variance."""
    if noise_mode == "relative":
        params = GbmVarianceParams(sigma0=sigma0, beta=beta, days=days, seed=path_seed)
        clean, noisy = simulate_noisy_gbm_variance(params, NoiseSpec(relative_sd=relative_sd, seed=path_seed))
        clean_series = DailyProxySeries(values=clean.values, kind=ProxyKind.VARIANCE, n_intraday=1)
    elif noise_mode == "realized":
        params = GbmVarianceParams(sigma0=sigma0, beta=beta, days=days, steps_per_day=n_intraday, seed=path_seed)
        spot = simulate_gbm_variance(params)
        prices = simulate_price_path(spot, substeps=1, seed=path_seed)
        noisy = realized_variance(prices, n_per_day=n_intraday)
        clean_series = averaged_spot_variance(spot, d=1, N=n_intraday)
    else:
        raise ConfigError(f"Unknown noise mode {noise_mode!r}. Use 'relative' or 'realized'.")
    return log_volatility(clean_series), log_volatility(noisy)


def spurious_roughness(
    sigma0: float = 4.62e-3,
    beta: float = 0.038,
    relative_sd: float = 0.25,
    days: int = 3206,
    seed: int = 0,
    noise_mode: str = "relative",
    n_intraday: int = 1440,
    small: Optional[Window] = None,
) -> Dict[str, object]:
    """Small-scale perceived H of a smooth (H = 1/2) variance with and without noise."""
    small = small or settings.SMALL_SCALE
    clean, noisy = _noisy_gbm_log_vol(sigma0, beta, relative_sd, days, seed, noise_mode, n_intraday)
    taus = np.arange(int(small[0]), int(small[1]) + 1)
    clean_curve = build_loglog(clean, tau_grid=taus)
    noisy_curve = build_loglog(noisy, tau_grid=taus)
    return {
        "clean_curve": clean_curve,
        "noisy_curve": noisy_curve,
        "clean_h": regress_hurst(clean_curve, *small).hurst,
        "noisy_h": regress_hurst(noisy_curve, *small).hurst,
    }


def vol_of_vol_sweep(
    betas: Sequence[float] = (0.001, 0.005, 0.01, 0.02, 0.038, 0.05, 0.1, 0.15, 0.2),
    sigma0: float = 4.62e-3,
    relative_sd: float = 0.25,
    days: int = 3206,
    seeds: int = 10,
    seed: int = 0,
    noise_mode: str = "relative",
    n_intraday: int = 1440,
    small: Optional[Window] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Perceived small-scale H of noisy gBm variance against its vol of vol.

    Every beta reuses the same path seeds, so the curve is free of
    between-beta sampling noise.
    """
    small = small or settings.SMALL_SCALE
    taus = np.arange(int(small[0]), int(small[1]) + 1)

    def one_seed(path_seed: int) -> List[float]:
        estimates = []
        for beta in betas:
            _, noisy = _noisy_gbm_log_vol(sigma0, beta, relative_sd, days, path_seed, noise_mode, n_intraday)
            estimates.append(regress_hurst(build_loglog(noisy, tau_grid=taus), *small).hurst)
        return estimates

    table = np.array(fan_out(one_seed, path_seeds(seed, seeds), workers=workers or settings.WORKERS))
    mean, se = _mean_se(table)
    return pd.DataFrame({"beta": list(betas), "mean_h": mean, "se_h": se})


def log_noise_variance(relative_sd: float) -> float:
    """Var(log(1 + relative_sd Z)) for Z ~ N(0, 1) restricted to 1 + relative_sd Z > 0."""
    if relative_sd <= 0:
        return 0.0
    lower = -1.0 / relative_sd
    mass = stats.norm.sf(lower)

    def moment(power: int) -> float:
        value, _ = integrate.quad(
            lambda z: np.log1p(relative_sd * z) ** power * stats.norm.pdf(z), lower, np.inf, limit=200,
        )
        return value / mass

    return moment(2) - moment(1) ** 2


@dataclass
class MeasurementBiasResult:
    taus: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    oracle: float
    asymptotic: float
    kind: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "taus": self.taus.tolist(),
            "mean": self.mean.tolist(),
            "se": self.se.tolist(),
            "oracle": self.oracle,
            "asymptotic": self.asymptotic,
        }


def measurement_bias_experiment(
    n_intraday: int = 100,
    days: int = 10_000,
    taus: Sequence[int] = (1, 5, 20, 60),
    seeds: int = 10,
    sigma0: float = 4.62e-3,
    beta: float = 0.038,
    kind: ProxyKind = ProxyKind.VARIANCE,
    seed: int = 0,
    workers: Optional[int] = None,
) -> MeasurementBiasResult:
    """Shift of log-proxy second moments caused by noise alpha ~ N(0, 2/n).

    The oracle is 2 Var(log(1 + alpha)) on log-variance and a quarter of it
    on log-volatility; the asymptotic value is 4/n (resp. 1/n).
    """
    kind = ProxyKind(kind)
    if kind.is_log:
        raise ConfigError(f"Pass a level kind (variance or volatility), got {kind.value}")

    def one_seed(path_seed: int) -> np.ndarray:
        params = GbmVarianceParams(sigma0=sigma0, beta=beta, days=days, seed=path_seed)
        clean_path, noisy = simulate_noisy_gbm_variance(params, NoiseSpec.from_intraday(n_intraday, seed=path_seed))
        clean = DailyProxySeries(values=clean_path.values, kind=ProxyKind.VARIANCE, n_intraday=n_intraday)
        return measurement_bias_check(convert(noisy, kind), convert(clean, kind), taus)

    table = np.array(fan_out(one_seed, path_seeds(seed, seeds), workers=workers or settings.WORKERS))
    mean, se = _mean_se(table)

    factor = 1.0 if kind == ProxyKind.VARIANCE else 0.25
    return MeasurementBiasResult(
        taus=np.asarray(taus),
        mean=mean,
        se=se,
        oracle=factor * 2.0 * log_noise_variance(math.sqrt(2.0 / n_intraday)),
        asymptotic=factor * 4.0 / n_intraday,
        kind=kind.value,
    )


@dataclass
class SmoothingCheckResult:
    taus: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    theory: np.ndarray

    def to_dict(self) -> Dict[str, object]:
        return {key: value.tolist() for key, value in self.__dict__.items()}


def smoothing_monte_carlo(
    hurst: float = 0.15,
    N: int = 100,
    d: int = 1,
    days: int = 2000,
    seeds: int = 50,
    taus: Sequence[int] = (1, 2, 5, 10),
    xi: float = 1.0,
    seed: int = 0,
    workers: Optional[int] = None,
) -> SmoothingCheckResult:
    """Increment variance of the averaged fBm variance against the finite-N formula."""
    def one_seed(path_seed: int) -> np.ndarray:
        spot = simulate_fbm(FbmParams(hurst=hurst, scale=xi, step=1.0 / N, length=days * N, seed=path_seed))
        averaged = averaged_spot_variance(spot, d=d, N=N)
        return np.array([abs_moment_overlapping(averaged, 2.0, tau) for tau in taus])

    table = np.array(fan_out(one_seed, path_seeds(seed, seeds), workers=workers or settings.WORKERS))
    mean, se = _mean_se(table)
    spec = SmoothingSpec(hurst=hurst, xi=xi, d=d, N=N)
    theory = np.array([smoothing_variance_finite(int(tau), spec) for tau in taus])
    return SmoothingCheckResult(taus=np.asarray(taus), mean=mean, se=se, theory=theory)


def fou_flattening(
    hurst: float = 0.1,
    reversion_rate: float = 0.02,
    days: int = 10_000,
    seeds: int = 20,
    scale: float = 1.0,
    small: Window = (1.0, 5.0),
    large: Window = (200.0, 500.0),
    seed: int = 0,
    workers: Optional[int] = None,
) -> Dict[str, float]:
    """Convexity of fOU log-log curves: mean-reversion bends large scales down."""
    grid = sorted(set(range(int(small[0]), int(small[1]) + 1)) | set(range(int(large[0]), int(large[1]) + 1, 25)))

    def one_seed(path_seed: int) -> float:
        path = simulate_fou(FouParams(
            base=FbmParams(hurst=hurst, scale=scale, step=1.0, length=days, seed=path_seed),
            reversion_rate=reversion_rate,
        ))
        return convexity_stat(build_loglog(path.values, tau_grid=grid), small=small, large=large)

    values = np.array(fan_out(one_seed, path_seeds(seed, seeds), workers=workers or settings.WORKERS))
    mean, se = _mean_se(values)
    return {"mean": float(mean), "se": float(se), "seeds": int(seeds)}


def _filtered_summary(curve: LogLogCurve, n_intraday: int, hurst_input: Optional[float],
                      small: Window, large: Window) -> Dict[str, Optional[float]]:
    try:
        filtered = filter_curve(curve, FilterConfig(n_intraday=n_intraday, hurst_input=hurst_input,
                                                    large_scale=large))
    except NumericalError as e:
        logger.warning(f"Filtering failed at n={n_intraday}: {e}")
        return {"small_scale_h": None, "large_scale_h": None, "hurst_input": None}
    summary = scale_summary(filtered, small, large)
    summary["hurst_input"] = filtered.metadata["hurst_input"]
    return summary


def step_sensitivity(
    days: TradingDays,
    steps_minutes: Sequence[int] = (1, 5, 15, 40),
    small: Optional[Window] = None,
    large: Optional[Window] = None,
    hurst_input: Optional[float] = None,
    divisor: Optional[int] = None,
) -> pd.DataFrame:
    """Raw and filtered perceived H of realized volatility for several return steps."""
    small = small or settings.SMALL_SCALE
    large = large or settings.LARGE_SCALE
    rows = []
    for step in steps_minutes:
        if step < 1 or days.n_per_day % step:
            raise ConfigError(f"Step of {step} minutes does not divide the {days.n_per_day} minutes of a day")
        n = days.n_per_day // step
        curve = build_loglog(log_volatility(daily_realized_series(days, n_per_day=n)), divisor=divisor)
        raw = scale_summary(curve, small, large)
        filtered = _filtered_summary(curve, n, hurst_input, small, large)
        rows.append({
            "step_minutes": step,
            "n_per_day": n,
            "small_scale_h": raw["small_scale_h"],
            "large_scale_h": raw["large_scale_h"],
            "filtered_small_scale_h": filtered["small_scale_h"],
            "filtered_large_scale_h": filtered["large_scale_h"],
        })
    return pd.DataFrame(rows, columns=STEP_SENSITIVITY_COLUMNS)


@dataclass
class EmpiricalResult:
    table: pd.DataFrame
    raw_curves: Dict[str, LogLogCurve] = field(default_factory=dict)
    filtered_curves: Dict[str, LogLogCurve] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        records = self.table.astype(object).where(self.table.notna(), None).to_dict(orient="records")
        return {"schema": "hurst_table/1", "rows": records}


def empirical_table(
    days_by_symbol: Dict[str, TradingDays],
    n_per_day: Optional[int] = None,
    small: Optional[Window] = None,
    large: Optional[Window] = None,
    hurst_input: Optional[float] = None,
    tau_grid: Union[Iterable[int], Callable[[int], Iterable[int]], None] = None,
    normalization: str = "sum",
    overlapping: bool = True,
    divisor: Optional[int] = None,
) -> EmpiricalResult:
    """Small- and large-scale perceived H per symbol, before and after filtering.

    `tau_grid` is either a fixed list of scales or a callable mapping a
    symbol's day count to its scales.
    """
    small = small or settings.SMALL_SCALE
    large = large or settings.LARGE_SCALE
    rows, raw_curves, filtered_curves = [], {}, {}
    for symbol, days in days_by_symbol.items():
        series = log_volatility(daily_realized_series(days, n_per_day=n_per_day, normalization=normalization))
        grid = tau_grid(series.day_count) if callable(tau_grid) else tau_grid
        raw = build_loglog(series, tau_grid=grid, overlapping=overlapping, divisor=divisor)
        raw_curves[symbol] = raw
        summary = scale_summary(raw, small, large)

        filtered_summary = {"small_scale_h": None, "large_scale_h": None, "hurst_input": None}
        try:
            filtered = filter_curve(raw, FilterConfig(n_intraday=series.n_intraday, hurst_input=hurst_input,
                                                      variant=FilterVariant.LOG_VOL_FBM, large_scale=large))
        except NumericalError as e:
            logger.warning(f"{symbol}: filtering failed: {e}")
        else:
            filtered_curves[symbol] = filtered
            filtered_summary = scale_summary(filtered, small, large)
            filtered_summary["hurst_input"] = filtered.metadata["hurst_input"]

        rows.append({
            "symbol": symbol,
            "days": series.day_count,
            "small_scale_h": summary["small_scale_h"],
            "large_scale_h": summary["large_scale_h"],
            "filtered_small_scale_h": filtered_summary["small_scale_h"],
            "filtered_large_scale_h": filtered_summary["large_scale_h"],
            "hurst_input": filtered_summary["hurst_input"],
        })
        logger.info(f"{symbol}: small-scale H={summary['small_scale_h']}, large-scale H={summary['large_scale_h']}")
    return EmpiricalResult(table=pd.DataFrame(rows), raw_curves=raw_curves, filtered_curves=filtered_curves)
