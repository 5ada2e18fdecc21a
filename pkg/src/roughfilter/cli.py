"""Command-line interface.

Every subcommand writes plot-ready CSV/JSON artifacts plus a
`manifest.json` from which `roughfilter rerun` reproduces them.

Exit codes: 0 success, 1 unexpected failure, 2 usage or configuration
error, 3 data error, 4 numerical failure.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from roughfilter import __version__
from roughfilter import artifacts, experiments
from roughfilter.config import Settings, load_config_file, settings_from
from roughfilter.errors import ConfigError, DataError, NumericalError, RoughFilterError
from roughfilter.filters import SMOOTHING_ASSUMPTION, FilterConfig, FilterVariant, OffsetMode, filter_report
from roughfilter.fractional import FbmParams, FouParams, simulate_fbm, simulate_fou
from roughfilter.ingest import (
    BarSchema,
    TradingCalendarConfig,
    build_days,
    daily_realized_series,
    parse_bars,
)
from roughfilter.logging_config import setup_logging
from roughfilter.moments import (
    LogLogCurve,
    build_loglog,
    default_tau_grid,
    estimates_table,
    regress_hurst,
    scale_summary,
    theoretical_fbm_curve,
)
from roughfilter.noisecal import SmoothingSpec, bias_table, smoothed_fbm_curve
from roughfilter.proxies import ProxyKind, convert
from roughfilter.seeding import path_seeds
from roughfilter.volmodels import (
    GbmVarianceParams,
    NoiseSpec,
    RfsvParams,
    simulate_gbm_variance,
    simulate_noisy_gbm_variance,
    simulate_rfsv_realized,
    synthetic_minute_bars,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

SIMULATION_MODELS = ["fbm", "fou", "rfsv", "gbm_var", "noisy_gbm_var", "minute_bars"]
EXPERIMENTS = [
    "filter_recovery", "spurious_roughness", "vol_of_vol_sweep",
    "measurement_bias", "smoothing_monte_carlo", "fou_flattening",
]

# Arguments that describe the invocation rather than the computation.
_NOT_PARAMETERS = {"func", "config", "log_level", "manifest"}


@dataclass
class CommandResult:
    outputs: List[Path] = field(default_factory=list)
    inputs: List[str] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected comma-separated integers, got {text!r}") from e


def parse_float_grid(text: str) -> List[float]:
    """'0.1,0.2,0.5' or 'start:stop:step' (stop included)."""
    text = str(text)
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a float list or start:stop:step, got {text!r}") from e


def parse_pairs(text: str) -> List[Tuple[int, int]]:
    """'1-2,5-10' -> [(1, 2), (5, 10)]."""
    pairs = []
    for part in str(text).split(","):
        try:
            low, high = part.split("-")
            pairs.append((int(low), int(high)))
        except ValueError as e:
            raise ConfigError(f"Expected scale pairs like '1-2,5-10', got {text!r}") from e
    return pairs


def parse_window(text) -> Tuple[float, float]:
    values = text if isinstance(text, (list, tuple)) else parse_float_grid(text)
    if len(values) != 2 or not 1.0 <= values[0] < values[1]:
        raise ConfigError(f"A scale window is 'min,max' with 1 <= min < max, got {text!r}")
    return float(values[0]), float(values[1])


def _tau_grid(args, day_count: int) -> Optional[List[int]]:
    divisor = args.tau_cap_divisor
    cap = (day_count - 1) // divisor
    if args.tau_max is not None and args.tau_max > cap:
        raise ConfigError(
            f"--tau-max {args.tau_max} exceeds N/{divisor} = {cap} for a series of {day_count} days; "
            "larger scales have too few increments for a stable moment"
        )
    if args.tau_grid:
        return parse_int_list(args.tau_grid)
    return default_tau_grid(day_count, tau_max=args.tau_max, divisor=divisor).tolist()


def _windows(args) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    return parse_window(args.small_scale), parse_window(args.large_scale)


def _schema(args) -> BarSchema:
    return BarSchema(
        timestamp_column=args.timestamp_column,
        price_column=args.price_column,
        delimiter=args.delimiter,
        header=not args.no_header,
        timestamp_format=args.timestamp_format,
        max_bad_rows=args.max_bad_rows,
    )


def _calendar(args) -> TradingCalendarConfig:
    return TradingCalendarConfig(
        day_boundary=args.day_boundary,
        weekend_policy=args.weekend_policy,
        min_bars_per_day=args.min_bars,
    )


def _load_days(path: str, args):
    bars = parse_bars(path, _schema(args))
    return build_days(bars, _calendar(args))


def _symbols(args) -> List[str]:
    if not args.bars:
        raise ConfigError("At least one --bars file is required")
    symbols = list(args.symbol or [])
    bars = list(args.bars or [])
    if symbols and len(symbols) != len(bars):
        raise ConfigError(f"{len(bars)} --bars files but {len(symbols)} --symbol names")
    return symbols or [Path(path).stem for path in bars]


# Subcommands

def cmd_simulate(args, out: Path) -> CommandResult:
    model = args.model
    seed = args.seed
    result = CommandResult(seeds=[seed])

    if model in ("fbm", "fou"):
        base = FbmParams(hurst=args.hurst, scale=args.scale, step=1.0, length=args.days, seed=seed)
        if model == "fbm":
            path = simulate_fbm(base)
        else:
            path = simulate_fou(FouParams(base=base, reversion_rate=args.reversion_rate, long_mean=args.long_mean))
        result.outputs.append(artifacts.write_path(path, out / f"{model}_path.csv"))

    elif model == "rfsv":
        params = RfsvParams(
            sigma_base=args.sigma_base, vol_of_vol=args.xi, hurst=args.hurst,
            days=args.days, steps_per_day=args.n, seed=seed,
        )
        spot, realized = simulate_rfsv_realized(params, normalization=args.normalization)
        result.outputs.append(artifacts.write_path(spot, out / "rfsv_spot_variance.csv"))
        result.outputs.append(artifacts.write_daily_proxy(realized, out / "rfsv_proxy.csv"))

    elif model in ("gbm_var", "noisy_gbm_var"):
        params = GbmVarianceParams(sigma0=args.sigma0, beta=args.beta, days=args.days, seed=seed)
        if model == "gbm_var":
            result.outputs.append(artifacts.write_path(simulate_gbm_variance(params), out / "gbm_var_path.csv"))
        else:
            noise = NoiseSpec(relative_sd=args.noise_rel_sd, seed=seed, n_intraday=args.n)
            path, noisy = simulate_noisy_gbm_variance(params, noise)
            result.outputs.append(artifacts.write_path(path, out / "noisy_gbm_var_path.csv"))
            result.outputs.append(artifacts.write_daily_proxy(noisy, out / "noisy_gbm_var_proxy.csv"))

    elif model == "minute_bars":
        params = RfsvParams(sigma_base=args.sigma_base, vol_of_vol=args.xi, hurst=args.hurst, days=args.days, seed=seed)
        bars = synthetic_minute_bars(params, start_date=args.start_date)
        bars["timestamp"] = bars["timestamp"].dt.strftime("%Y-%m-%dT%H:%M:%SZ")
        target = out / "minute_bars.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        bars.to_csv(target, index=False, lineterminator="\n", float_format="%.17g")
        result.outputs.append(target)

    logger.info(f"Simulated {model} ({args.days} days, seed {seed})")
    return result


def cmd_ingest(args, out: Path) -> CommandResult:
    symbols = _symbols(args)
    result = CommandResult(inputs=list(args.bars))
    for symbol, path in zip(symbols, args.bars):
        days = _load_days(path, args)
        series = daily_realized_series(days, n_per_day=args.n_per_day, normalization=args.normalization)
        result.outputs.append(artifacts.write_daily_proxy(series, out / f"{symbol}_daily.csv"))
        result.outputs.append(artifacts.write_json({
            "schema": "daily_proxy/1",
            "symbol": symbol,
            "kind": series.kind.value,
            "n_intraday": series.n_intraday,
            "dates": [str(d) for d in series.dates],
            "values": series.values.tolist(),
        }, out / f"{symbol}_daily.json"))
        result.outputs.append(artifacts.write_json(
            {"schema": "ingest_report/1", "symbol": symbol, **days.report.model_dump()},
            out / f"{symbol}_ingest_report.json",
        ))
    return result


def _simulated_series(args) -> Callable[[int], Any]:
    model = args.simulate
    if model == "fbm":
        return lambda s: simulate_fbm(FbmParams(hurst=args.hurst, scale=args.scale, length=args.days, seed=s)).values
    if model == "fou":
        return lambda s: simulate_fou(FouParams(
            base=FbmParams(hurst=args.hurst, scale=args.scale, length=args.days, seed=s),
            reversion_rate=args.reversion_rate,
        )).values
    if model == "rfsv":
        def rfsv(s):
            params = RfsvParams(sigma_base=args.sigma_base, vol_of_vol=args.xi, hurst=args.hurst,
                                days=args.days, steps_per_day=args.n, seed=s)
            return convert(simulate_rfsv_realized(params)[1], args.kind)
        return rfsv
    if model == "noisy_gbm_var":
        def noisy(s):
            params = GbmVarianceParams(sigma0=args.sigma0, beta=args.beta, days=args.days, seed=s)
            noise = NoiseSpec(relative_sd=args.noise_rel_sd, seed=s, n_intraday=args.n)
            return convert(simulate_noisy_gbm_variance(params, noise)[1], args.kind)
        return noisy
    raise ConfigError(f"loglog --simulate supports fbm, fou, rfsv, noisy_gbm_var; got {model!r}")


def _empirical_loglog(args, days_by_symbol, small, large, out: Path, result: CommandResult) -> CommandResult:
    """Raw and filtered log-volatility curves per symbol, with the hurst_table summary."""
    table = experiments.empirical_table(
        days_by_symbol, n_per_day=args.n_per_day, small=small, large=large, hurst_input=args.hurst_input,
        tau_grid=lambda day_count: _tau_grid(args, day_count), normalization=args.normalization,
        overlapping=not args.non_overlapping, divisor=args.tau_cap_divisor,
    )
    for symbol, curve in table.raw_curves.items():
        result.outputs.append(artifacts.write_loglog(curve, out / f"{symbol}_loglog.csv"))
        if symbol in table.filtered_curves:
            filtered = table.filtered_curves[symbol]
            result.outputs.append(artifacts.write_loglog(filtered, out / f"{symbol}_filtered_loglog.csv"))
    result.outputs.append(artifacts.write_json(table.to_dict(), out / "summary.json"))
    return result


def cmd_loglog(args, out: Path) -> CommandResult:
    small, large = _windows(args)
    result = CommandResult()
    sources = sum(bool(x) for x in (args.series, args.bars, args.simulate, args.theoretical_fbm))
    if sources != 1:
        raise ConfigError("Give exactly one of --series, --bars, --simulate or --theoretical-fbm")

    if args.smoothed and not args.theoretical_fbm:
        raise ConfigError("--smoothed applies to --theoretical-fbm only")

    curves = {}
    if args.series:
        result.inputs.append(args.series)
        series = convert(artifacts.read_daily_proxy(args.series), args.kind)
        curves[Path(args.series).stem] = build_loglog(series, k=args.k, tau_grid=_tau_grid(args, series.day_count),
                                                      overlapping=not args.non_overlapping,
                                                      divisor=args.tau_cap_divisor)
    elif args.bars:
        result.inputs.extend(args.bars)
        days_by_symbol = {symbol: _load_days(path, args) for symbol, path in zip(_symbols(args), args.bars)}
        if args.kind == ProxyKind.LOG_VOLATILITY.value and args.k == 2:
            return _empirical_loglog(args, days_by_symbol, small, large, out, result)
        for symbol, days in days_by_symbol.items():
            series = convert(daily_realized_series(days, n_per_day=args.n_per_day,
                                                   normalization=args.normalization), args.kind)
            curves[symbol] = build_loglog(series, k=args.k, tau_grid=_tau_grid(args, series.day_count),
                                          overlapping=not args.non_overlapping, divisor=args.tau_cap_divisor)
    elif args.simulate:
        seeds = path_seeds(args.seed, args.seeds)
        result.seeds = seeds
        curves[args.simulate] = experiments.multi_seed_curve(
            _simulated_series(args), seeds, k=args.k, tau_grid=_tau_grid(args, args.days), workers=args.workers,
            divisor=args.tau_cap_divisor,
        )
    elif args.smoothed:
        if args.k != 2:
            raise ConfigError(f"The smoothed fBm curve holds second moments only, got --k {args.k}")
        spec = SmoothingSpec(hurst=args.hurst, xi=args.scale, N=args.n)
        curves["smoothed_fbm"] = smoothed_fbm_curve(spec, _tau_grid(args, args.days))
    else:
        params = FbmParams(hurst=args.hurst, scale=args.scale, length=args.days)
        curves["theoretical_fbm"] = theoretical_fbm_curve(params, _tau_grid(args, args.days), k=args.k)

    rows = []
    for name, curve in curves.items():
        result.outputs.append(artifacts.write_loglog(curve, out / f"{name}_loglog.csv"))
        whole = regress_hurst(curve, float(curve.taus.min()), float(curve.taus.max()))
        rows.append({"symbol": name, "days": curve.day_count, "k": curve.k, "kind": curve.source_kind,
                     "whole_curve_h": whole.hurst, **scale_summary(curve, small, large)})
    result.outputs.append(artifacts.write_json({"schema": "hurst_table/1", "rows": rows}, out / "summary.json"))
    return result


def _window_estimates(curves: Dict[str, LogLogCurve], small, large) -> List[Dict[str, Any]]:
    """Full regression of every curve over both windows; windows under 2 points are skipped."""
    labels, estimates = [], []
    for name, curve in curves.items():
        for window_name, window in (("small", small), ("large", large)):
            try:
                estimates.append(regress_hurst(curve, *window))
            except DataError:
                continue
            labels.append((name, window_name))
    if not estimates:
        return []
    table = estimates_table(estimates)
    table.insert(0, "curve", [name for name, _ in labels])
    table.insert(1, "window", [window_name for _, window_name in labels])
    return table.to_dict(orient="records")


def cmd_filter(args, out: Path) -> CommandResult:
    raw = artifacts.read_loglog(args.curve)
    small, large = _windows(args)
    cfg = FilterConfig(
        n_intraday=args.n,
        hurst_input=args.hurst_input,
        large_scale=large,
        variant=args.variant,
        offset_mode=args.offset_mode,
        apply_measurement=not args.no_measurement,
        apply_smoothing=not args.no_smoothing,
    )
    report = filter_report(raw, cfg)
    kept = int((~report["dropped"]).sum())
    if kept == 0:
        raise NumericalError(f"All {len(report)} curve points fall below the measurement offset (n={args.n})")

    stem = Path(args.curve).stem
    target = artifacts.write_csv(
        report, out / f"{stem}_filtered.csv", "filtered",
        k=repr(float(raw.k)), kind=raw.source_kind, variant=cfg.variant.value,
        hurst_input=repr(report.attrs["hurst_input"]), n_intraday=cfg.n_intraday,
    )
    kept_frame = report[~report["dropped"]]
    filtered = LogLogCurve(taus=kept_frame["tau_days"].to_numpy(), moments=kept_frame["moment"].to_numpy(),
                           k=raw.k, source_kind=raw.source_kind, day_count=raw.day_count)
    summary = {
        "schema": "filter_summary/1",
        "hurst_input": report.attrs["hurst_input"],
        "dropped": int(report["dropped"].sum()),
        "assumption": SMOOTHING_ASSUMPTION,
        "raw": scale_summary(raw, small, large),
        "filtered": scale_summary(filtered, small, large),
        "estimates": _window_estimates({"raw": raw, "filtered": filtered}, small, large),
    }
    return CommandResult(
        outputs=[target, artifacts.write_json(summary, out / f"{stem}_filter_summary.json")],
        inputs=[args.curve],
    )


def cmd_bias_table(args, out: Path) -> CommandResult:
    table = bias_table(parse_float_grid(args.h_grid), parse_int_list(args.N), args.d, parse_pairs(args.pairs))
    return CommandResult(outputs=[artifacts.write_csv(table, out / "bias_table.csv", "bias_table")])


def cmd_step_sensitivity(args, out: Path) -> CommandResult:
    small, large = _windows(args)
    if not args.bars or len(args.bars) != 1:
        raise ConfigError("step-sensitivity takes exactly one --bars file")
    days = _load_days(args.bars[0], args)
    table = experiments.step_sensitivity(days, parse_int_list(args.steps), small=small, large=large,
                                         hurst_input=args.hurst_input, divisor=args.tau_cap_divisor)
    return CommandResult(
        outputs=[artifacts.write_csv(table, out / "step_sensitivity.csv", "step_sensitivity")],
        inputs=[args.bars[0]],
    )


def cmd_experiment(args, out: Path) -> CommandResult:
    name = args.name
    seed = args.seed
    overrides = {key: value for key, value in {
        "hurst": args.hurst, "days": args.days, "seeds": args.seeds,
    }.items() if value is not None}
    result = CommandResult(seeds=[seed])

    if name == "filter_recovery":
        outcome = experiments.filter_recovery(
            vol_of_vol=args.xi if args.xi is not None else 0.10,
            n_intraday=args.n or 36, seed=seed, workers=args.workers,
            offset_mode=args.offset_mode, **overrides,
        )
        for label, curve in (("raw", outcome.raw), ("measurement_filtered", outcome.measurement_filtered),
                             ("filtered", outcome.filtered)):
            result.outputs.append(artifacts.write_loglog(curve, out / f"filter_recovery_{label}.csv"))
        payload = outcome.to_dict()
    elif name == "spurious_roughness":
        overrides.pop("hurst", None)
        overrides.pop("seeds", None)
        outcome = experiments.spurious_roughness(
            beta=args.beta or 0.038, relative_sd=args.noise_rel_sd if args.noise_rel_sd is not None else 0.25,
            seed=seed, noise_mode=args.noise_mode, small=parse_window(args.small_scale), **overrides,
        )
        result.outputs.append(artifacts.write_loglog(outcome["clean_curve"], out / "spurious_clean.csv"))
        result.outputs.append(artifacts.write_loglog(outcome["noisy_curve"], out / "spurious_noisy.csv"))
        payload = {"clean_h": outcome["clean_h"], "noisy_h": outcome["noisy_h"]}
    elif name == "vol_of_vol_sweep":
        overrides.pop("hurst", None)
        kwargs = {"betas": parse_float_grid(args.betas)} if args.betas else {}
        table = experiments.vol_of_vol_sweep(
            relative_sd=args.noise_rel_sd if args.noise_rel_sd is not None else 0.25, seed=seed,
            noise_mode=args.noise_mode, small=parse_window(args.small_scale), workers=args.workers,
            **kwargs, **overrides,
        )
        payload = {"rows": table.to_dict(orient="records")}
    elif name == "measurement_bias":
        overrides.pop("hurst", None)
        outcome = experiments.measurement_bias_experiment(
            n_intraday=args.n or 100, seed=seed, workers=args.workers, **overrides,
        )
        payload = outcome.to_dict()
    elif name == "smoothing_monte_carlo":
        outcome = experiments.smoothing_monte_carlo(N=args.n or 100, seed=seed, workers=args.workers, **overrides)
        payload = outcome.to_dict()
    else:
        outcome = experiments.fou_flattening(
            reversion_rate=args.reversion_rate if args.reversion_rate is not None else 0.02,
            seed=seed, workers=args.workers, **overrides,
        )
        payload = outcome

    result.outputs.append(artifacts.write_json({"schema": f"{name}/1", **payload}, out / f"{name}.json"))
    return result


HANDLERS: Dict[str, Callable[[argparse.Namespace, Path], CommandResult]] = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "loglog": cmd_loglog,
    "filter": cmd_filter,
    "bias-table": cmd_bias_table,
    "step-sensitivity": cmd_step_sensitivity,
    "experiment": cmd_experiment,
}


# Parser

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML or JSON file of defaults (flags take precedence)")
    parser.add_argument("--out", help="Output directory (default: ROUGHFILTER_OUTPUT_DIR or ./output)")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--workers", type=int, help="Threads for multi-seed runs")


def _add_model_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--days", type=int, default=3206, help="Number of days (path length for fbm/fou)")
    parser.add_argument("--hurst", type=float, default=0.25, help="Hurst exponent H")
    parser.add_argument("--scale", type=float, default=1.0, help="fBm scale eta")
    parser.add_argument("--reversion-rate", type=float, default=0.02, help="fOU mean-reversion rate, per day")
    parser.add_argument("--long-mean", type=float, default=0.0, help="fOU long-run mean")
    parser.add_argument("--xi", type=float, default=0.10, help="RFSV vol of vol")
    parser.add_argument("--sigma-base", type=float, default=0.01, help="RFSV daily volatility level")
    parser.add_argument("--n", type=int, default=36, help="Intraday returns per day")
    parser.add_argument("--sigma0", type=float, default=4.62e-3, help="gBm initial daily volatility")
    parser.add_argument("--beta", type=float, default=0.038, help="gBm vol of vol")
    parser.add_argument("--noise-rel-sd", type=float, default=0.25, help="Relative sd of observation noise")


def _add_bar_params(parser: argparse.ArgumentParser, repeatable: bool = True) -> None:
    parser.add_argument("--bars", action="append" if repeatable else None,
                        help="Minute-bar CSV" + (" (repeatable)" if repeatable else ""))
    parser.add_argument("--symbol", action="append", help="Symbol name for each --bars file")
    parser.add_argument("--timestamp-column", default="timestamp")
    parser.add_argument("--price-column", default="price")
    parser.add_argument("--delimiter", default=",")
    parser.add_argument("--no-header", action="store_true")
    parser.add_argument("--timestamp-format", default="auto", choices=["auto", "iso", "epoch_s", "epoch_ms"])
    parser.add_argument("--max-bad-rows", type=int, default=100)
    parser.add_argument("--day-boundary", default="00:00", help="UTC HH:MM at which days start")
    parser.add_argument("--weekend-policy", default="drop_incomplete", choices=["drop_incomplete", "pad_forward"])
    parser.add_argument("--min-bars", type=int, default=1380, help="Bars needed for a complete day")
    parser.add_argument("--n-per-day", type=int, help="Returns per day for realized variance (divides 1440)")
    parser.add_argument("--normalization", default="sum", choices=["sum", "mean"])


def _add_windows(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--small-scale", help="Small-scale window 'min,max' in days")
    parser.add_argument("--large-scale", help="Large-scale window 'min,max' in days")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughfilter",
        description="Hurst exponents of volatility proxies, their noise biases and filters",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Simulate a path or proxy series")
    simulate.add_argument("model", choices=SIMULATION_MODELS)
    _add_model_params(simulate)
    simulate.add_argument("--normalization", default="sum", choices=["sum", "mean"])
    simulate.add_argument("--start-date", default="2019-01-07", help="First day of minute_bars")
    _add_common(simulate)

    ingest = sub.add_parser("ingest", help="Minute bars -> daily realized variance")
    _add_bar_params(ingest)
    _add_common(ingest)

    loglog = sub.add_parser("loglog", help="Absolute-moment log-log curve and perceived Hurst exponents")
    loglog.add_argument("--series", help="daily_proxy CSV")
    _add_bar_params(loglog)
    loglog.add_argument("--simulate", choices=["fbm", "fou", "rfsv", "noisy_gbm_var"])
    loglog.add_argument("--seeds", type=int, default=1, help="Seeds averaged in --simulate mode")
    loglog.add_argument("--theoretical-fbm", action="store_true", help="Exact fBm moments")
    loglog.add_argument("--smoothed", action="store_true",
                        help="With --theoretical-fbm: moments of the fBm averaged over --n samples per day")
    loglog.add_argument("--hurst-input", type=float,
                        help="H fed to the smoothing filter in --bars mode (default: large-scale H)")
    _add_model_params(loglog)
    loglog.add_argument("--kind", default="log_volatility", choices=[k.value for k in ProxyKind],
                        help="Proxy kind the moments are taken of")
    loglog.add_argument("--k", type=float, default=2.0, help="Moment order")
    loglog.add_argument("--tau-grid", help="Comma-separated scales in days")
    loglog.add_argument("--tau-max", type=int, help="Largest scale (at most N/tau_cap_divisor, default 3)")
    loglog.add_argument("--non-overlapping", action="store_true")
    _add_windows(loglog)
    _add_common(loglog)

    filt = sub.add_parser("filter", help="Remove measurement noise and smoothing error from a curve")
    filt.add_argument("--curve", required=True, help="loglog CSV")
    filt.add_argument("--n", type=int, required=True, help="Intraday returns per day of the proxy")
    filt.add_argument("--hurst-input", type=float, help="H fed to the smoothing factor (default: large-scale H)")
    filt.add_argument("--variant", default="log_vol_fbm", choices=[v.value for v in FilterVariant])
    filt.add_argument("--offset-mode", default="asymptotic", choices=[m.value for m in OffsetMode])
    filt.add_argument("--no-measurement", action="store_true")
    filt.add_argument("--no-smoothing", action="store_true")
    _add_windows(filt)
    _add_common(filt)

    bias = sub.add_parser("bias-table", help="Perceived H of the smoothed fBm")
    bias.add_argument("--h-grid", default="0.05:0.95:0.05")
    bias.add_argument("--N", default="1,100", help="Samples per day (comma-separated)")
    bias.add_argument("--d", type=int, default=1)
    bias.add_argument("--pairs", default="1-2,5-10", help="Scale pairs 'tau1-tau2,...'")
    _add_common(bias)

    steps = sub.add_parser("step-sensitivity", help="Perceived H against the realized-variance step")
    _add_bar_params(steps)
    steps.add_argument("--steps", default="1,5,15,40", help="Return steps in minutes (divide 1440)")
    steps.add_argument("--hurst-input", type=float)
    _add_windows(steps)
    _add_common(steps)

    experiment = sub.add_parser("experiment", help="Monte-Carlo studies")
    experiment.add_argument("name", choices=EXPERIMENTS)
    experiment.add_argument("--hurst", type=float)
    experiment.add_argument("--days", type=int)
    experiment.add_argument("--seeds", type=int)
    experiment.add_argument("--xi", type=float)
    experiment.add_argument("--n", type=int)
    experiment.add_argument("--beta", type=float)
    experiment.add_argument("--betas", help="Vol-of-vol grid for vol_of_vol_sweep")
    experiment.add_argument("--noise-rel-sd", type=float)
    experiment.add_argument("--noise-mode", default="relative", choices=["relative", "realized"])
    experiment.add_argument("--reversion-rate", type=float)
    experiment.add_argument("--offset-mode", default="asymptotic", choices=[m.value for m in OffsetMode])
    _add_windows(experiment)
    _add_common(experiment)

    rerun = sub.add_parser("rerun", help="Re-execute a manifest")
    rerun.add_argument("manifest", help="manifest.json of an earlier run")
    rerun.add_argument("--out", help="Output directory (default: the recorded one)")
    rerun.add_argument("--log-level")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> Dict[str, Any]:
    """Layer config-file values under the command-line flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}

    values = load_config_file(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sub in subparsers.choices.values():
        dests = {action.dest for action in sub._actions}
        sub.set_defaults(**{key: value for key, value in values.items() if key in dests})
    return values


def _resolve(args: argparse.Namespace, cfg: Settings) -> None:
    """Fill unset ambient options from Settings so the manifest records them."""
    if args.seed is None:
        args.seed = cfg.SEED
    if args.workers is None:
        args.workers = cfg.WORKERS
    args.out = str(args.out or cfg.OUTPUT_DIR)
    if hasattr(args, "small_scale"):
        args.small_scale = list(parse_window(args.small_scale or cfg.SMALL_SCALE))
        args.large_scale = list(parse_window(args.large_scale or cfg.LARGE_SCALE))
    if args.command in ("loglog", "step-sensitivity"):
        args.tau_cap_divisor = cfg.TAU_CAP_DIVISOR


def _execute(command: str, args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = HANDLERS[command](args, out)

    parameters = {key: value for key, value in vars(args).items() if key not in _NOT_PARAMETERS}
    manifest = artifacts.RunManifest.for_inputs(command, parameters, result.inputs, seeds=result.seeds)
    manifest.outputs = [str(path) for path in result.outputs]
    path = manifest.write(out)
    logger.info(f"{command}: wrote {len(result.outputs)} artifacts and {path}")
    return path


def _rerun(args: argparse.Namespace) -> Path:
    manifest = artifacts.RunManifest.load(args.manifest)
    changed = manifest.changed_inputs()
    if changed:
        raise DataError(f"Inputs changed since the recorded run: {', '.join(changed)}")
    if manifest.subcommand not in HANDLERS:
        raise ConfigError(f"Manifest names unknown subcommand {manifest.subcommand!r}")

    replay = argparse.Namespace(**manifest.parameters)
    if args.out:
        replay.out = args.out
    logger.info(f"Re-running {manifest.subcommand} from {args.manifest}")
    return _execute(manifest.subcommand, replay)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        file_values = _apply_config_file(parser, argv)
        cfg = settings_from(file_values)
    except (ConfigError, ValidationError) as e:
        print(f"roughfilter: configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    args = parser.parse_args(argv)
    setup_logging(args.log_level or cfg.LOG_LEVEL, cfg.LOG_DIR)

    try:
        if args.command == "rerun":
            _rerun(args)
        else:
            _resolve(args, cfg)
            _execute(args.command, args)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_USAGE
    except DataError as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except RoughFilterError as e:
        logger.error(f"roughfilter error: {e}")
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return EXIT_UNEXPECTED
    return EXIT_OK
