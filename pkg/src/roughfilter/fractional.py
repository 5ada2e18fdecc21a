"""Exact simulation of fractional Gaussian noise, fBm and fractional OU paths.

Fractional Gaussian noise is drawn by circulant embedding (Davies-Harte) of
its autocovariance; an exact Cholesky factorisation of the Toeplitz
covariance is kept for short paths and as a fallback. Every generator is a
pure function of its parameters: the seed expands into a counter-based
stream (see `roughfilter.seeding`).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg, signal, special

from roughfilter.errors import ConfigError, GenerationError
from roughfilter.seeding import STREAM_NOISE, make_rng

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Longest path for which the exact Cholesky factorisation is attempted.
CHOLESKY_MAX_LENGTH = 4096

# Relative tolerance on negative circulant eigenvalues (round-off).
_EIGEN_TOLERANCE = 1e-10

# The fOU drift is discretised with at most this fraction of the reversion time.
FOU_MAX_DRIFT_STEP = 0.1


@dataclass
class PathSeries:
    """A uniformly sampled real-valued path.

    `values[i]` is observed at time `start + i * step` (days).
    """
    values: np.ndarray
    step: float
    kind: str
    start: float = 0.0
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ConfigError(f"PathSeries values must be one-dimensional, got shape {self.values.shape}")
        if self.step <= 0:
            raise ConfigError(f"PathSeries step must be positive, got {self.step}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self.values))


class FbmParams(BaseModel):
    """Parameters of a fractional Brownian motion sampled on a regular grid."""
    model_config = ConfigDict(frozen=True)

    hurst: float = Field(..., gt=0.0, lt=1.0, description="Hurst exponent H")
    scale: float = Field(1.0, gt=0.0, description="Scale eta: Var(B_t) = scale^2 t^(2H)")
    step: float = Field(1.0, gt=0.0, description="Days per sample")
    length: int = Field(..., ge=2, description="Number of samples")
    seed: int = Field(0, ge=0)


class FouParams(BaseModel):
    """Fractional Ornstein-Uhlenbeck process dX = -rate (X - mean) dt + dB^H."""
    model_config = ConfigDict(frozen=True)

    base: FbmParams
    reversion_rate: float = Field(0.0, ge=0.0, description="Mean-reversion frequency, per day")
    long_mean: float = 0.0


def fbm_covariance(s: ArrayLike, t: ArrayLike, params: FbmParams) -> ArrayLike:
    """Cov(B^H_s, B^H_t) = (scale^2 / 2)(|s|^2H + |t|^2H - |s - t|^2H)."""
    two_h = 2.0 * params.hurst
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    value = 0.5 * params.scale ** 2 * (np.abs(s) ** two_h + np.abs(t) ** two_h - np.abs(s - t) ** two_h)
    return float(value) if value.ndim == 0 else value


def fbm_abs_moment(tau: ArrayLike, k: float, params: FbmParams) -> ArrayLike:
    """E|B^H_{t+tau} - B^H_t|^k for an fBm of scale `params.scale`."""
    if np.any(np.asarray(tau) <= 0):
        raise ConfigError("tau must be positive")
    gaussian_moment = 2.0 ** (k / 2.0) * special.gamma((k + 1.0) / 2.0) / math.sqrt(math.pi)
    value = gaussian_moment * params.scale ** k * np.asarray(tau, dtype=float) ** (k * params.hurst)
    return float(value) if np.ndim(value) == 0 else value


def fgn_autocovariance(lags: ArrayLike, hurst: float, scale: float = 1.0, step: float = 1.0) -> ArrayLike:
    """Autocovariance of fBm increments over `step` at integer lags."""
    two_h = 2.0 * hurst
    j = np.abs(np.asarray(lags, dtype=float))
    gamma = 0.5 * (np.abs(j + 1.0) ** two_h - 2.0 * j ** two_h + np.abs(j - 1.0) ** two_h)
    return scale ** 2 * step ** two_h * gamma


@lru_cache(maxsize=32)
def _circulant_sqrt_eigenvalues(length: int, hurst: float) -> np.ndarray:
    """Square roots of the eigenvalues of the 2n circulant embedding (rfft layout)."""
    gamma = fgn_autocovariance(np.arange(length + 1), hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eigenvalues = np.fft.rfft(row).real

    if eigenvalues.min() < -_EIGEN_TOLERANCE * eigenvalues.max():
        raise GenerationError(
            f"Circulant embedding failed for H={hurst}, length={length}: "
            f"negative eigenvalue {eigenvalues.min():.3e}"
        )
    root = np.sqrt(np.maximum(eigenvalues, 0.0))
    root.setflags(write=False)
    return root


def _fgn_circulant(length: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    sqrt_eig = _circulant_sqrt_eigenvalues(length, hurst)
    m = 2 * length

    # Hermitian noise in rfft layout: DC and Nyquist terms are real.
    z = np.empty(length + 1, dtype=np.complex128)
    z[0] = rng.standard_normal()
    z[length] = rng.standard_normal()
    z[1:length] = (rng.standard_normal(length - 1) + 1j * rng.standard_normal(length - 1)) / math.sqrt(2.0)

    z *= sqrt_eig * math.sqrt(m)
    return np.fft.irfft(z, n=m)[:length]


def _fgn_cholesky(length: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    covariance = linalg.toeplitz(fgn_autocovariance(np.arange(length), hurst))
    lower = np.linalg.cholesky(covariance)
    return lower @ rng.standard_normal(length)


def simulate_fgn(params: FbmParams, method: str = "circulant") -> PathSeries:
    """Draw `params.length` fBm increments over `params.step`.

    Args:
        params: fBm parameters (the seed fixes the draw)
        method: "circulant" (default) or "cholesky"

    Returns:
        PathSeries of kind "fgn" whose cumulative sum is an fBm sample

    Raises:
        GenerationError: If circulant embedding fails and the path is too long
            for the Cholesky fallback
    """
    rng = make_rng(params.seed, STREAM_NOISE)

    if method == "cholesky":
        unit = _fgn_cholesky(params.length, params.hurst, rng)
    elif method == "circulant":
        try:
            unit = _fgn_circulant(params.length, params.hurst, rng)
        except GenerationError:
            if params.length > CHOLESKY_MAX_LENGTH:
                raise
            logger.warning(
                f"Circulant embedding infeasible for H={params.hurst}, length={params.length}; "
                "falling back to Cholesky"
            )
            unit = _fgn_cholesky(params.length, params.hurst, make_rng(params.seed, STREAM_NOISE))
    else:
        raise ConfigError(f"Unknown fGn method: {method!r}. Use 'circulant' or 'cholesky'.")

    values = params.scale * params.step ** params.hurst * unit
    return PathSeries(values=values, step=params.step, kind="fgn", start=params.step)


def simulate_fbm(params: FbmParams, method: str = "circulant") -> PathSeries:
    """fBm sampled at step, 2*step, ..., length*step (B^H_0 = 0 is not stored)."""
    noise = simulate_fgn(params, method=method)
    return PathSeries(values=np.cumsum(noise.values), step=params.step, kind="fbm", start=params.step)


def simulate_fou(params: FouParams) -> PathSeries:
    """Fractional OU path started at its long-run mean.

    The driving noise is exact fGn; the drift uses an explicit Euler step no
    longer than FOU_MAX_DRIFT_STEP / reversion_rate, subsampling back to the
    requested step.
    """
    base = params.base
    rate = params.reversion_rate

    if rate == 0.0:
        noise = simulate_fgn(base).values
        return PathSeries(
            values=params.long_mean + np.cumsum(noise),
            step=base.step,
            kind="fou",
            start=base.step,
        )

    substeps = max(1, math.ceil(base.step * rate / FOU_MAX_DRIFT_STEP - 1e-12))
    fine = base.model_copy(update={"step": base.step / substeps, "length": base.length * substeps})
    if substeps > 1:
        logger.debug(f"fOU drift step refined by {substeps} substeps (rate={rate}/day)")

    noise = simulate_fgn(fine).values
    decay = 1.0 - rate * fine.step
    # Y_{i+1} = decay * Y_i + dB_i with Y_0 = 0
    deviation = signal.lfilter([1.0], [1.0, -decay], noise)

    return PathSeries(
        values=params.long_mean + deviation[substeps - 1::substeps],
        step=base.step,
        kind="fou",
        start=base.step,
        metadata={"substeps": substeps},
    )
