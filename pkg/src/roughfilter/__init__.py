"""Hurst exponents of volatility proxies, their noise biases and filters."""

__version__ = "0.1.0"

from roughfilter.errors import ConfigError, DataError, GenerationError, NumericalError, RoughFilterError
from roughfilter.filters import FilterConfig, FilterVariant, filter_curve
from roughfilter.fractional import FbmParams, FouParams, PathSeries, simulate_fbm, simulate_fgn, simulate_fou
from roughfilter.moments import HurstEstimate, LogLogCurve, build_loglog, regress_hurst
from roughfilter.proxies import DailyProxySeries, ProxyKind, realized_variance

__all__ = [
    "__version__",
    "ConfigError",
    "DailyProxySeries",
    "DataError",
    "FbmParams",
    "FilterConfig",
    "FilterVariant",
    "FouParams",
    "GenerationError",
    "HurstEstimate",
    "LogLogCurve",
    "NumericalError",
    "PathSeries",
    "ProxyKind",
    "RoughFilterError",
    "build_loglog",
    "filter_curve",
    "realized_variance",
    "regress_hurst",
    "simulate_fbm",
    "simulate_fgn",
    "simulate_fou",
]
