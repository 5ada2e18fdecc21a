"""Versioned CSV/JSON artifacts and run manifests.

Every CSV starts with one comment line `# schema: <name>/<version> key=value ...`
followed by a plain header row.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from roughfilter import __version__
from roughfilter.errors import DataError
from roughfilter.fractional import PathSeries
from roughfilter.moments import LOGLOG_COLUMNS, LogLogCurve
from roughfilter.proxies import DailyProxySeries

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCHEMAS: Dict[str, List[str]] = {
    "path": ["index", "time_days", "value"],
    "daily_proxy": ["date", "proxy_value", "n_intraday"],
    "loglog": LOGLOG_COLUMNS,
    "filtered": LOGLOG_COLUMNS + ["offset_applied", "f_value", "dropped"],
    "bias_table": ["h_in", "N", "d", "tau1", "tau2", "perceived_h"],
    "step_sensitivity": [
        "step_minutes", "n_per_day", "small_scale_h", "large_scale_h",
        "filtered_small_scale_h", "filtered_large_scale_h",
    ],
}
SCHEMA_VERSION = 1

MANIFEST_NAME = "manifest.json"


def _format_header(name: str, attrs: Dict[str, Any]) -> str:
    parts = [f"# schema: {name}/{SCHEMA_VERSION}"]
    for key in sorted(attrs):
        value = str(attrs[key])
        if any(ch.isspace() for ch in value) or "=" in value:
            raise ValueError(f"Header value for {key!r} must not contain spaces or '=': {value!r}")
        parts.append(f"{key}={value}")
    return " ".join(parts)


def _parse_header(line: str) -> Tuple[str, int, Dict[str, str]]:
    if not line.startswith("# schema:"):
        raise DataError(f"Missing schema line; got {line.strip()[:60]!r}")
    tokens = line[len("# schema:"):].split()
    if not tokens or "/" not in tokens[0]:
        raise DataError(f"Malformed schema line: {line.strip()!r}")
    name, version = tokens[0].split("/", 1)
    attrs = dict(token.split("=", 1) for token in tokens[1:] if "=" in token)
    return name, int(version), attrs


def write_csv(frame: pd.DataFrame, path: PathLike, schema: str, **attrs: Any) -> Path:
    """Write `frame` under a schema line; columns must match the schema exactly."""
    columns = SCHEMAS[schema]
    if list(frame.columns) != columns:
        raise ValueError(f"Columns {list(frame.columns)} do not match schema {schema}: {columns}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(_format_header(schema, attrs) + "\n")
        frame.to_csv(handle, index=False, lineterminator="\n", float_format="%.17g")
    logger.debug(f"Wrote {len(frame)} rows to {path} ({schema}/{SCHEMA_VERSION})")
    return path


def read_csv(path: PathLike, schema: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Read a CSV written by write_csv and check its schema.

    Returns:
        tuple: (frame, header attributes)

    Raises:
        DataError: On a missing file, a different schema or version, or missing columns
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            first = handle.readline()
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e

    name, version, attrs = _parse_header(first)
    if name != schema or version != SCHEMA_VERSION:
        raise DataError(f"{path} holds {name}/{version}, expected {schema}/{SCHEMA_VERSION}")

    frame = pd.read_csv(path, comment="#")
    missing = [column for column in SCHEMAS[schema] if column not in frame.columns]
    if missing:
        raise DataError(f"{path} lacks columns {missing}")
    return frame, attrs


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    """UTF-8 JSON with sorted keys; numpy scalars and arrays are converted."""
    def default(value):
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, Path):
            return str(value)
        raise TypeError(f"Not JSON serializable: {type(value).__name__}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2, default=default, allow_nan=True)
        handle.write("\n")
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, ValueError) as e:
        raise DataError(f"Cannot read JSON {path}: {e}") from e


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_path(series: PathSeries, path: PathLike) -> Path:
    frame = pd.DataFrame({
        "index": np.arange(len(series)),
        "time_days": series.times,
        "value": series.values,
    })
    return write_csv(frame, path, "path", kind=series.kind, step=repr(series.step))


def write_daily_proxy(series: DailyProxySeries, path: PathLike) -> Path:
    if series.dates is not None:
        dates = pd.to_datetime(series.dates).strftime("%Y-%m-%d")
    else:
        dates = np.arange(series.day_count).astype(str)
    frame = pd.DataFrame({"date": dates, "proxy_value": series.values, "n_intraday": series.n_intraday})
    return write_csv(frame, path, "daily_proxy", kind=series.kind.value)


def read_daily_proxy(path: PathLike) -> DailyProxySeries:
    frame, attrs = read_csv(path, "daily_proxy")
    if "kind" not in attrs:
        raise DataError(f"{path} does not record the proxy kind")
    n_values = frame["n_intraday"].unique()
    if len(n_values) != 1:
        raise DataError(f"{path} mixes n_intraday values {sorted(n_values.tolist())}")

    dates = frame["date"].astype(str)
    parsed = pd.to_datetime(dates, errors="coerce", format="%Y-%m-%d")
    return DailyProxySeries(
        values=frame["proxy_value"].to_numpy(dtype=float),
        kind=attrs["kind"],
        n_intraday=int(n_values[0]),
        dates=None if parsed.isna().any() else parsed.to_numpy().astype("datetime64[D]"),
    )


def write_loglog(curve: LogLogCurve, path: PathLike) -> Path:
    return write_csv(curve.to_frame(), path, "loglog", k=repr(float(curve.k)), kind=curve.source_kind, day_count=curve.day_count)


def read_loglog(path: PathLike) -> LogLogCurve:
    frame, attrs = read_csv(path, "loglog")
    return LogLogCurve.from_frame(
        frame,
        k=float(attrs.get("k", 2.0)),
        source_kind=attrs.get("kind", "array"),
        day_count=int(attrs.get("day_count", 0)),
    )


class RunManifest(BaseModel):
    """Everything needed to re-run one CLI invocation."""
    subcommand: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seeds: List[int] = Field(default_factory=list)
    inputs: Dict[str, str] = Field(default_factory=dict, description="Input path -> SHA-256")
    version: str = __version__
    outputs: List[str] = Field(default_factory=list)

    @classmethod
    def for_inputs(cls, subcommand: str, parameters: Dict[str, Any], input_paths: List[PathLike],
                   seeds: Optional[List[int]] = None) -> "RunManifest":
        return cls(
            subcommand=subcommand,
            parameters=parameters,
            seeds=seeds or [],
            inputs={str(p): sha256_file(p) for p in input_paths},
        )

    def write(self, out_dir: PathLike) -> Path:
        return write_json(self.model_dump(mode="json"), Path(out_dir) / MANIFEST_NAME)

    @classmethod
    def load(cls, path: PathLike) -> "RunManifest":
        return cls.model_validate(read_json(path))

    def changed_inputs(self) -> List[str]:
        """Inputs whose current hash differs from the recorded one (or that vanished)."""
        changed = []
        for name, digest in self.inputs.items():
            if not Path(name).exists() or sha256_file(name) != digest:
                changed.append(name)
        return changed
