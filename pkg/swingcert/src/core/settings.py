import math
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from swingcert.schema.results import BoundUnits
from swingcert.src.core.errors import ConfigurationError

DEFAULT_OMEGA_S = 2.0 * math.pi * 60.0
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseModel):
    """
    Process-wide configuration. Values come from the environment (and ``.env``).
    """
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    log_level: str = "WARNING"
    bound_units: BoundUnits = BoundUnits.THEOREM
    omega_s: float = Field(default=DEFAULT_OMEGA_S, gt=0.0)
    phi_margin: float = Field(default=1e-9, ge=0.0)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.strip().upper()
        if value not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}")
        return value


_ENV_KEYS = {
    "threads": "SWINGCERT_THREADS",
    "log_level": "SWINGCERT_LOG_LEVEL",
    "bound_units": "SWINGCERT_BOUND_UNITS",
    "omega_s": "SWINGCERT_OMEGA_S",
    "phi_margin": "SWINGCERT_PHI_MARGIN",
}

_settings: Optional[Settings] = None


def load_settings(use_dotenv: bool = True) -> Settings:
    if use_dotenv:
        load_dotenv()
    raw = {field: os.environ[key] for field, key in _ENV_KEYS.items() if os.environ.get(key)}
    try:
        return Settings(**raw)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid environment configuration: {e}") from e


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    global _settings
    _settings = None
