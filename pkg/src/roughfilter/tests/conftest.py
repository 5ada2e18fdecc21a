"""Pytest configuration file."""
import os
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
import pytest

from roughfilter.fractional import FbmParams


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep ROUGHFILTER_* variables and any .env file out of the tests."""
    for key in list(os.environ):
        if key.startswith("ROUGHFILTER_"):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def fbm_params():
    return FbmParams(hurst=0.3, scale=1.0, step=1.0, length=512, seed=11)


def bar_bytes(
    days: int = 2,
    start: str = "2021-03-01",
    bars_per_day: Union[int, Sequence[int]] = 1440,
    missing: Optional[dict] = None,
    seed: int = 0,
    price0: float = 1.1,
) -> bytes:
    """Minute-bar CSV bytes on consecutive calendar days.

    `bars_per_day` keeps the first k minutes of each day; `missing` maps a
    day index to minutes removed from it.
    """
    counts = [bars_per_day] * days if isinstance(bars_per_day, int) else list(bars_per_day)
    missing = missing or {}
    rng = np.random.default_rng(seed)

    stamps = []
    for day, count in enumerate(counts):
        minutes = [m for m in range(count) if m not in set(missing.get(day, ()))]
        base = pd.Timestamp(start, tz="UTC") + pd.Timedelta(days=day)
        stamps.extend(base + pd.Timedelta(minutes=m) for m in minutes)

    prices = price0 * np.exp(np.cumsum(5e-4 * rng.standard_normal(len(stamps))))
    frame = pd.DataFrame({
        "timestamp": pd.DatetimeIndex(stamps).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "price": prices,
    })
    return frame.to_csv(index=False, float_format="%.10f").encode()


@pytest.fixture
def make_bars():
    return bar_bytes
