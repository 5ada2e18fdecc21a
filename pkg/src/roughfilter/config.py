"""Configuration management for roughfilter."""
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from roughfilter.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

# One-minute bars over a 24-hour trading day.
MINUTES_PER_DAY = 1440


class Settings(BaseSettings):
    """Application settings, read from ROUGHFILTER_* environment variables."""

    # Output / Logging
    OUTPUT_DIR: Path = Field(Path("output"), description="Default directory for CSV/JSON artifacts")
    LOG_LEVEL: str = Field("INFO", description="Root logging level")
    LOG_DIR: Optional[Path] = Field(None, description="Directory for rotating log files; console only when unset")

    # Monte Carlo
    WORKERS: int = Field(4, ge=1, description="Threads used for multi-seed experiments")
    SEED: int = Field(0, ge=0, description="Master seed when none is given on the command line")

    # Scale windows (days) for perceived Hurst exponents
    SMALL_SCALE: Tuple[float, float] = Field((1.0, 21.0), description="Small-scale regression window")
    LARGE_SCALE: Tuple[float, float] = Field((60.0, 135.0), description="Large-scale regression window")
    TAU_CAP_DIVISOR: int = Field(3, ge=1, description="Largest admissible scale is day_count / divisor")

    MINUTES_PER_DAY: int = Field(MINUTES_PER_DAY, description="Intraday bars per calendar day")

    model_config = SettingsConfigDict(
        env_prefix="ROUGHFILTER_",
        env_file=".env",
        extra="ignore",
    )

    def validate_windows(self) -> None:
        """Check that both regression windows are proper intervals."""
        logger.debug(f"Scale windows: small={self.SMALL_SCALE}, large={self.LARGE_SCALE}")

        bad = []
        for name, window in (("SMALL_SCALE", self.SMALL_SCALE), ("LARGE_SCALE", self.LARGE_SCALE)):
            low, high = window
            if not (1.0 <= low < high):
                bad.append(f"{name}={window}")

        if bad:
            error_msg = (
                f"Invalid scale windows: {', '.join(bad)}\n"
                "Each window must be (min_days, max_days) with 1 <= min_days < max_days, e.g.\n"
                "export ROUGHFILTER_SMALL_SCALE='[1, 21]'"
            )
            logger.error(error_msg)
            raise ConfigError(error_msg)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a TOML or JSON key-value configuration file.

    Args:
        path: File ending in .toml or .json

    Returns:
        dict: Flat mapping with lower-cased keys and dashes turned into underscores

    Raises:
        ConfigError: If the file is missing, unreadable or not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as handle:
                raw = tomllib.load(handle)
        else:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Could not read config file {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {path} must contain a key-value mapping")

    values = {str(key).lower().replace("-", "_"): value for key, value in raw.items()}
    logger.debug(f"Loaded {len(values)} config keys from {path}")
    return values


def settings_from(values: Optional[Dict[str, Any]] = None) -> Settings:
    """Build Settings with config-file values layered over the environment."""
    fields = {name.lower(): name for name in Settings.model_fields}
    overrides = {fields[key]: value for key, value in (values or {}).items() if key in fields}
    built = Settings(**overrides)
    built.validate_windows()
    return built


# Initialize settings
settings = Settings()
