"""
Lab Configuration Module
Centralized configuration for the service-time laboratory.

NOTES:
- Every field can be overridden from the environment as SERVICETIME_<NAME>
- Use a .env file next to the backend for local overrides (not committed)
- Run manifests (TOML) describe individual experiments; this module only
  holds lab-wide defaults
"""
import logging
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # =========================================================================
    # Application Info
    # =========================================================================
    APP_NAME: str = "Servicetime Lab"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = Field(
        default="development",
        description="Environment: development, ci, batch"
    )

    # =========================================================================
    # Logging
    # =========================================================================
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_MAX_BYTES: int = 10485760  # 10MB
    LOG_BACKUP_COUNT: int = 5

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = str(v).upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level: {v}")
        return level

    # =========================================================================
    # Output
    # =========================================================================
    # Environment tier of the output directory precedence:
    # --out flag > SERVICETIME_OUTPUT_DIR > [run].out_dir in the manifest
    OUTPUT_DIR: Optional[str] = Field(
        default=None,
        description="Default output directory for command results"
    )
    FALLBACK_OUTPUT_DIR: str = "results"

    # =========================================================================
    # Analytic Series
    # =========================================================================
    SERIES_EPSILON: float = Field(
        default=1e-12,
        description="Residual probability mass at which the ARQ/HARQ series stop"
    )
    ANALYTIC_MAX_TX: int = 64
    ARQ_MAX_TERMS: int = 1_000_000
    TAU_WARN_RATIO: float = 0.1

    # =========================================================================
    # Synthetic BLER Family
    # =========================================================================
    # Threshold s0 = SYNTH_OFFSET_DB + SYNTH_SE_SLOPE_DB * spectral_efficiency
    SYNTH_STEEPNESS: float = 1.5  # per dB
    SYNTH_OFFSET_DB: float = -7.5
    SYNTH_SE_SLOPE_DB: float = 4.0

    # =========================================================================
    # SNR Grid
    # =========================================================================
    SNR_GRID_LO_DB: float = -6.0
    SNR_GRID_HI_DB: float = 27.0
    SNR_GRID_STEP_DB: float = 0.1

    # =========================================================================
    # Link / MAC
    # =========================================================================
    # 52 PRBs x 12 subcarriers x 12 data symbols
    RESOURCE_ELEMENTS_PER_TB: int = 7488
    SLOT_SECONDS: float = 0.0005  # 30 kHz numerology
    HARQ_PROCESS_CAP: int = 16
    DEFAULT_MAX_RETX: int = 15
    DEFAULT_BLER_CAP: float = 0.1

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="SERVICETIME_",
        extra="ignore",
        case_sensitive=True
    )

    @field_validator("SERIES_EPSILON", "SYNTH_STEEPNESS", "SNR_GRID_STEP_DB", "SLOT_SECONDS")
    @classmethod
    def must_be_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be > 0")
        return v


# Initialize settings
settings = Settings()
