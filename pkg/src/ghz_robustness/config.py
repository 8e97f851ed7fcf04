"""Configuration management using pydantic-settings.

Ambient settings (logging, tracing, metrics output) come from the environment.
Numerical settings are plain frozen models filled from command-line flags only,
so a run is reproducible from its command line.
"""

import threading

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Valid log levels
VALID_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

# Largest qubit count the dense 2^n x 2^n path accepts.
DENSE_QUBIT_CAP = 12

DEFAULT_SEED = 20070119


class AppSettings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(env_prefix="GHZ_")

    log_level: str = Field(default="INFO", description="Logging level")
    log_format: str = Field(default="json", description="Log format: json or console")
    metrics_textfile: str | None = Field(
        default=None,
        description="Write Prometheus metrics in text format to this path after each command",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is valid."""
        normalized = v.upper()
        if normalized not in VALID_LOG_LEVELS:
            raise ValueError(
                f"Invalid log level '{v}'. Must be one of: {', '.join(sorted(VALID_LOG_LEVELS))}"
            )
        return normalized

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Validate log format is valid."""
        normalized = v.lower()
        if normalized not in ("json", "console"):
            raise ValueError(f"Invalid log format '{v}'. Must be 'json' or 'console'")
        return normalized


class TracingSettings(BaseSettings):
    """OpenTelemetry tracing settings."""

    model_config = SettingsConfigDict(env_prefix="OTEL_")

    enabled: bool = Field(default=False, description="Enable OpenTelemetry tracing")
    service_name: str = Field(default="ghz-robustness", description="Service name")


class OptimizerConfig(BaseModel):
    """Multistart see-saw budget for ``max_bell``."""

    model_config = ConfigDict(frozen=True)

    starts: int = Field(default=64, description="Number of random see-saw starts")
    seed: int = Field(default=DEFAULT_SEED, description="Seed driving every start")
    tolerance: float = Field(
        default=1e-12, description="A start converges once a sweep improves less than this"
    )
    max_sweeps: int = Field(default=500, description="Sweep limit per start")
    polish: bool = Field(default=True, description="Run a simplex polish on the best start")
    polish_max_evals: int = Field(default=4000, description="Evaluation budget of the polish")

    @field_validator("starts")
    @classmethod
    def validate_starts(cls, v: int) -> int:
        """Validate the multistart count is reasonable."""
        if v < 1:
            raise ValueError(f"Starts must be at least 1, got {v}")
        if v > 4096:
            raise ValueError(f"Starts too large (max 4096), got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v: int) -> int:
        """Validate seed is non-negative."""
        if v < 0:
            raise ValueError(f"Seed must be non-negative, got {v}")
        return v

    @field_validator("tolerance")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        """Validate the stationarity tolerance is positive."""
        if not v > 0:
            raise ValueError(f"Tolerance must be positive, got {v}")
        return v

    @field_validator("max_sweeps")
    @classmethod
    def validate_max_sweeps(cls, v: int) -> int:
        """Validate sweep limit is reasonable."""
        if v < 1:
            raise ValueError(f"Max sweeps must be at least 1, got {v}")
        if v > 100_000:
            raise ValueError(f"Max sweeps too large (max 100000), got {v}")
        return v

    @field_validator("polish_max_evals")
    @classmethod
    def validate_polish_max_evals(cls, v: int) -> int:
        """Validate polish budget is non-negative."""
        if v < 0:
            raise ValueError(f"Polish evaluations must be non-negative, got {v}")
        return v


class ThresholdConfig(BaseModel):
    """Scan-then-bisect settings for ``numeric_pmax``."""

    model_config = ConfigDict(frozen=True)

    scan_step: float = Field(default=0.01, description="Coarse scan step in p")
    even_dephasing_cap: float = Field(
        default=1.0 - 1e-3, description="Largest p probed for even-n dephasing"
    )
    value_resolution: float = Field(
        default=1e-14,
        description="A scan point violates only if max_bell > 1 + value_resolution",
    )
    tie_tolerance: float = Field(
        default=1e-9,
        description="Non-violating values within this of 1 attain the local bound",
    )

    @field_validator("scan_step")
    @classmethod
    def validate_scan_step(cls, v: float) -> float:
        """Validate scan step is within (0, 0.5]."""
        if not 0 < v <= 0.5:
            raise ValueError(f"Scan step must be in (0, 0.5], got {v}")
        return v

    @field_validator("even_dephasing_cap")
    @classmethod
    def validate_cap(cls, v: float) -> float:
        """Validate cap lies inside (0, 1]."""
        if not 0 < v <= 1:
            raise ValueError(f"Cap must be in (0, 1], got {v}")
        return v

    @field_validator("value_resolution", "tie_tolerance")
    @classmethod
    def validate_resolution(cls, v: float) -> float:
        """Validate value tolerances are non-negative."""
        if v < 0:
            raise ValueError(f"Value tolerance must be non-negative, got {v}")
        return v


class Settings(BaseSettings):
    """Combined application settings.

    Optional env vars (all have defaults):
        GHZ_LOG_LEVEL, GHZ_LOG_FORMAT, GHZ_METRICS_TEXTFILE,
        OTEL_ENABLED, OTEL_SERVICE_NAME
    """

    app: AppSettings = Field(default_factory=AppSettings)
    tracing: TracingSettings = Field(default_factory=TracingSettings)

    @classmethod
    def load(cls) -> "Settings":
        """Load settings from environment variables."""
        return cls(
            app=AppSettings(),
            tracing=TracingSettings(),
        )


# Global settings instance with thread-safe initialization
_settings: Settings | None = None
_settings_lock = threading.Lock()


def get_settings() -> Settings:
    """Get or create the global settings instance.

    Thread-safe singleton pattern using double-checked locking.
    """
    global _settings
    if _settings is None:
        with _settings_lock:
            # Double-check after acquiring lock
            if _settings is None:
                _settings = Settings.load()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    with _settings_lock:
        _settings = None
