"""Minute-bar ingestion for the empirical pipeline.

CSV bars are parsed into a clean, sorted, de-duplicated table, cut into
trading days of exactly 1440 one-minute log-prices, and turned into daily
realized-variance series.
"""
import io
import logging
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from roughfilter.config import MINUTES_PER_DAY
from roughfilter.errors import ConfigError, DataError
from roughfilter.fractional import PathSeries
from roughfilter.proxies import DailyProxySeries, realized_variance

logger = logging.getLogger(__name__)

BarSource = Union[bytes, bytearray, str, os.PathLike, IO[bytes]]

# Epoch values above this are taken as milliseconds in "auto" mode.
_EPOCH_MS_THRESHOLD = 1e11


class TimestampFormat(str, Enum):
    AUTO = "auto"
    ISO = "iso"
    EPOCH_S = "epoch_s"
    EPOCH_MS = "epoch_ms"


class WeekendPolicy(str, Enum):
    DROP_INCOMPLETE = "drop_incomplete"
    PAD_FORWARD = "pad_forward"


class BarSchema(BaseModel):
    """Layout of a minute-bar CSV file."""
    model_config = ConfigDict(frozen=True)

    timestamp_column: str = "timestamp"
    price_column: str = "price"
    delimiter: str = ","
    header: bool = True
    timestamp_format: TimestampFormat = TimestampFormat.AUTO
    max_bad_rows: int = Field(100, ge=0, description="Unparseable rows tolerated before giving up")


class TradingCalendarConfig(BaseModel):
    """How bars are grouped into trading days."""
    model_config = ConfigDict(frozen=True)

    day_boundary: str = Field("00:00", description="UTC time of day at which a trading day starts (HH:MM)")
    weekend_policy: WeekendPolicy = WeekendPolicy.DROP_INCOMPLETE
    min_bars_per_day: int = Field(1380, ge=0, le=MINUTES_PER_DAY)

    @field_validator("day_boundary")
    @classmethod
    def check_boundary(cls, value: str) -> str:
        match = re.fullmatch(r"(\d{1,2}):(\d{2})", value)
        if not match or int(match.group(1)) > 23 or int(match.group(2)) > 59:
            raise ValueError(f"day_boundary must be HH:MM, got {value!r}")
        return value

    @property
    def boundary_offset(self) -> pd.Timedelta:
        hours, minutes = self.day_boundary.split(":")
        return pd.Timedelta(hours=int(hours), minutes=int(minutes))


@dataclass(frozen=True)
class MinuteBarRecord:
    timestamp: pd.Timestamp
    price: float


@dataclass
class ParseStats:
    rows: int = 0
    bad_rows: int = 0
    duplicates: int = 0
    reordered: int = 0

    def to_dict(self) -> Dict[str, int]:
        return {"rows": self.rows, "bad_rows": self.bad_rows, "duplicates": self.duplicates, "reordered": self.reordered}


@dataclass
class ParsedBars:
    """Cleaned bars: strictly increasing UTC minute timestamps, positive prices."""
    frame: pd.DataFrame
    stats: ParseStats

    def __len__(self) -> int:
        return len(self.frame)

    def records(self) -> Iterator[MinuteBarRecord]:
        for timestamp, price in zip(self.frame["timestamp"], self.frame["price"]):
            yield MinuteBarRecord(timestamp=timestamp, price=float(price))


class IngestReport(BaseModel):
    """Gap, drop and padding statistics of one ingest run."""
    bars: int
    days_seen: int
    days_kept: int
    days_dropped: List[str] = Field(default_factory=list)
    days_padded: List[str] = Field(default_factory=list)
    minutes_filled: int = 0
    days_without_anchor: int = 0
    parse: Dict[str, int] = Field(default_factory=dict)


@dataclass
class TradingDays:
    """Aligned days of one-minute log-prices.

    `anchors[i]` is the last log-price of the previous calendar day when
    that day was kept, else NaN.
    """
    log_prices: PathSeries
    dates: np.ndarray
    anchors: np.ndarray
    report: IngestReport
    n_per_day: int = MINUTES_PER_DAY
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def day_count(self) -> int:
        return len(self.dates)

    def day_matrix(self) -> np.ndarray:
        return self.log_prices.values.reshape(self.day_count, self.n_per_day)


def _read_source(source: BarSource) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "rb") as handle:
                return handle.read()
        except OSError as e:
            raise DataError(f"Cannot read bar file {source}: {e}") from e
    return source.read()


def _parse_timestamps(raw: pd.Series, fmt: TimestampFormat) -> pd.Series:
    if fmt == TimestampFormat.AUTO:
        numeric = pd.to_numeric(raw, errors="coerce")
        if numeric.notna().mean() > 0.5:
            fmt = TimestampFormat.EPOCH_MS if numeric.abs().median() > _EPOCH_MS_THRESHOLD else TimestampFormat.EPOCH_S
        else:
            fmt = TimestampFormat.ISO

    if fmt == TimestampFormat.ISO:
        return pd.to_datetime(raw, utc=True, errors="coerce")
    unit = "ms" if fmt == TimestampFormat.EPOCH_MS else "s"
    return pd.to_datetime(pd.to_numeric(raw, errors="coerce"), unit=unit, utc=True, errors="coerce")


def parse_bars(source: BarSource, schema: Optional[BarSchema] = None) -> ParsedBars:
    """Parse minute bars from bytes, a file path or a binary stream.

    Timestamps are read as UTC and floored to the minute. Rows out of order
    are sorted (counted in `reordered`); repeated timestamps keep the last
    row of the file (counted in `duplicates`).

    Raises:
        DataError: On an empty input, missing columns, or more unparseable
            rows than `schema.max_bad_rows`
    """
    schema = schema or BarSchema()
    payload = _read_source(source)
    if not payload.strip():
        raise DataError("Bar input is empty")

    try:
        frame = pd.read_csv(
            io.BytesIO(payload),
            sep=schema.delimiter,
            header=0 if schema.header else None,
            names=None if schema.header else [schema.timestamp_column, schema.price_column],
            usecols=None if schema.header else [0, 1],
            dtype=str,
            skipinitialspace=True,
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise DataError(f"Bar input is not a readable CSV: {e}") from e

    missing = [c for c in (schema.timestamp_column, schema.price_column) if c not in frame.columns]
    if missing:
        raise DataError(f"Bar input lacks columns {missing}; found {list(frame.columns)}")
    if frame.empty:
        raise DataError("Bar input holds a header but no rows")

    timestamps = _parse_timestamps(frame[schema.timestamp_column].str.strip(), schema.timestamp_format)
    prices = pd.to_numeric(frame[schema.price_column], errors="coerce")
    bad = timestamps.isna() | prices.isna() | ~(prices > 0)

    stats = ParseStats(rows=len(frame), bad_rows=int(bad.sum()))
    if stats.bad_rows > schema.max_bad_rows:
        first = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(
            f"{stats.bad_rows} unparseable rows exceed the budget of {schema.max_bad_rows} "
            f"(first at data row {first}); check the column names and timestamp format",
            index=first,
        )
    if stats.bad_rows:
        logger.warning(f"Skipped {stats.bad_rows} unparseable bar rows")

    bars = pd.DataFrame({"timestamp": timestamps[~bad].dt.floor("min"), "price": prices[~bad].astype(float)})
    if bars.empty:
        raise DataError("No parseable bar rows")

    ts = bars["timestamp"]
    stats.reordered = int((ts < ts.cummax().shift(1)).sum())
    if stats.reordered:
        logger.info(f"Sorted {stats.reordered} out-of-order bars")
    bars = bars.sort_values("timestamp", kind="mergesort")

    deduped = bars.drop_duplicates("timestamp", keep="last")
    stats.duplicates = len(bars) - len(deduped)
    if stats.duplicates:
        logger.info(f"Resolved {stats.duplicates} duplicate timestamps (last row wins)")

    return ParsedBars(frame=deduped.reset_index(drop=True), stats=stats)


def _anchors_for(dates: pd.DatetimeIndex, matrix: np.ndarray, leading: Optional[float] = None) -> np.ndarray:
    anchors = np.full(len(dates), np.nan)
    if leading is not None:
        anchors[0] = leading
    adjacent = np.diff(dates.values).astype("timedelta64[D]") == np.timedelta64(1, "D")
    anchors[1:] = np.where(adjacent, matrix[:-1, -1], np.nan)
    return anchors


def build_days(bars: ParsedBars, calendar: Optional[TradingCalendarConfig] = None) -> TradingDays:
    """Cut bars into days of exactly 1440 minutes.

    Missing minutes are forward-filled (leading gaps take the day's first
    price). Days with fewer than `min_bars_per_day` bars are dropped, or kept
    and padded under `pad_forward`.

    Raises:
        DataError: If no day is kept
    """
    calendar = calendar or TradingCalendarConfig()
    if len(bars) == 0:
        raise DataError("No bars to assemble")

    shifted = bars.frame["timestamp"] - calendar.boundary_offset
    day = shifted.dt.floor("D")
    minute = ((shifted - day) // pd.Timedelta(minutes=1)).astype(int)
    table = pd.DataFrame({"day": day, "minute": minute, "log_price": np.log(bars.frame["price"].to_numpy())})

    grid = table.pivot(index="day", columns="minute", values="log_price").reindex(columns=range(MINUTES_PER_DAY))
    counts = grid.notna().sum(axis=1)
    labels = [d.strftime("%Y-%m-%d") for d in grid.index]

    complete = counts >= calendar.min_bars_per_day
    if calendar.weekend_policy == WeekendPolicy.PAD_FORWARD:
        keep = counts > 0
        padded = keep & ~complete
    else:
        keep = complete
        padded = pd.Series(False, index=grid.index)

    dropped = [label for label, kept in zip(labels, keep) if not kept]
    if dropped:
        logger.warning(f"Dropped {len(dropped)} days with fewer than {calendar.min_bars_per_day} bars")
    if padded.any():
        logger.warning(f"Padded {int(padded.sum())} incomplete days by forward fill")

    kept_grid = grid[keep.to_numpy()]
    if kept_grid.empty:
        raise DataError(f"No complete day: every day has fewer than {calendar.min_bars_per_day} bars")

    minutes_filled = int(kept_grid.isna().sum().sum())
    matrix = kept_grid.ffill(axis=1).bfill(axis=1).to_numpy()

    dates = pd.DatetimeIndex(kept_grid.index).tz_localize(None)
    anchors = _anchors_for(dates, matrix)

    report = IngestReport(
        bars=len(bars),
        days_seen=len(grid),
        days_kept=len(kept_grid),
        days_dropped=dropped,
        days_padded=[label for label, pad in zip(labels, padded) if pad],
        minutes_filled=minutes_filled,
        days_without_anchor=int(np.isnan(anchors).sum()),
        parse=bars.stats.to_dict(),
    )
    logger.info(f"Assembled {report.days_kept} of {report.days_seen} days ({minutes_filled} minutes filled)")

    return TradingDays(
        log_prices=PathSeries(values=matrix.ravel(), step=1.0 / MINUTES_PER_DAY, kind="log_price"),
        dates=dates.values.astype("datetime64[D]"),
        anchors=anchors,
        report=report,
    )


def days_from_log_prices(
    values: Sequence[float],
    dates: Optional[Sequence] = None,
    n_per_day: int = MINUTES_PER_DAY,
) -> TradingDays:
    """TradingDays from an already aligned log-price path of D * n (+ 1 leading) samples.

    Dates default to consecutive calendar days, so every day after the first
    is anchored on its predecessor.
    """
    values = np.asarray(values, dtype=float)
    leading = None
    if len(values) % n_per_day == 1:
        leading, values = float(values[0]), values[1:]
    elif len(values) % n_per_day:
        raise DataError(f"Path of {len(values)} samples is not a whole number of {n_per_day}-sample days")

    matrix = values.reshape(-1, n_per_day)
    if dates is None:
        index = pd.date_range("2000-01-01", periods=len(matrix), freq="D")
    else:
        index = pd.DatetimeIndex(pd.to_datetime(list(dates)))
        if index.tz is not None:
            index = index.tz_localize(None)
        index = index.normalize()
        if len(index) != len(matrix):
            raise DataError(f"{len(index)} dates for {len(matrix)} days")

    anchors = _anchors_for(index, matrix, leading)
    report = IngestReport(
        bars=int(values.size),
        days_seen=len(matrix),
        days_kept=len(matrix),
        days_without_anchor=int(np.isnan(anchors).sum()),
    )
    return TradingDays(
        log_prices=PathSeries(values=values, step=1.0 / n_per_day, kind="log_price"),
        dates=index.values.astype("datetime64[D]"),
        anchors=anchors,
        report=report,
        n_per_day=n_per_day,
    )


def daily_realized_series(
    days: TradingDays,
    n_per_day: Optional[int] = None,
    normalization: str = "sum",
) -> DailyProxySeries:
    """Daily realized variance, optionally on coarser returns.

    With n_per_day = n < days.n_per_day, every (days.n_per_day / n)-th
    log-price is used, ending on the day's last minute.

    Raises:
        ConfigError: If n does not divide the number of minutes per day
    """
    n = n_per_day or days.n_per_day
    if n < 1 or days.n_per_day % n:
        raise ConfigError(f"Return step must divide the {days.n_per_day} samples of a day; got n_per_day={n}")
    stride = days.n_per_day // n

    sampled = days.day_matrix()[:, stride - 1::stride]
    path = PathSeries(values=sampled.ravel(), step=1.0 / n, kind="log_price")
    series = realized_variance(path, n, day_anchors=days.anchors, normalization=normalization)

    zero_days = int(np.sum(series.values == 0))
    if zero_days:
        logger.warning(f"{zero_days} days have zero realized variance (constant prices)")

    series.dates = days.dates
    series.diagnostics.update({"step_minutes": stride, "zero_days": zero_days})
    return series
