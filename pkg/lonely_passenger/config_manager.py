"""
Configuration Management Module for the Lonely Passenger Toolkit

Handles persistent storage of settings including:
- Enumeration size limit for the brute-force oracle
- Sampling defaults (seed, path counts, batching, workers)
- Verification grid bounds and acceptance thresholds
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from config.settings import (
    CONFIG_FILE_NAME,
    CONFIG_PATH_ENV,
    DEFAULT_ENUM_LIMIT,
    DEFAULT_SEED,
    ENUM_LIMIT_ENV,
    HARD_ENUM_LIMIT,
)

logger = logging.getLogger(__name__)

# Project root directory
PROJECT_ROOT = Path(__file__).parent.parent
CONFIG_FILE = PROJECT_ROOT / CONFIG_FILE_NAME

# Default configuration values
DEFAULT_CONFIG = {
    "enumeration": {
        "limit": DEFAULT_ENUM_LIMIT
    },
    "sampling": {
        "default_seed": DEFAULT_SEED,
        "paths": 100_000,
        "batch_size": 10_000,
        "workers": 1
    },
    "checks": {
        "n_max": 12,
        "k_max": 8,
        "stirling_n_max": 200,
        "coupling_n_max": 10,
        "fit_n_max": 8,
        "fit_alpha": 0.001
    },
    "mc": {
        "sigma_threshold": 5.0,
        "exact_ref_max_n": 200
    },
    "output": {
        "format": "csv"  # Options: "csv", "json"
    },
    "logging": {
        "level": "INFO"
    }
}


# ==================== Schema ====================

class EnumerationSettings(BaseModel):
    limit: int = Field(DEFAULT_ENUM_LIMIT, ge=1, le=HARD_ENUM_LIMIT)


class SamplingSettings(BaseModel):
    default_seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    paths: int = Field(100_000, ge=1)
    batch_size: int = Field(10_000, ge=1)
    workers: int = Field(1, ge=1)


class ChecksSettings(BaseModel):
    n_max: int = Field(12, ge=2)
    k_max: int = Field(8, ge=1)
    stirling_n_max: int = Field(200, ge=2)
    coupling_n_max: int = Field(10, ge=2)
    fit_n_max: int = Field(8, ge=2)
    fit_alpha: float = Field(0.001, gt=0, lt=1)


class McSettings(BaseModel):
    sigma_threshold: float = Field(5.0, gt=0)
    exact_ref_max_n: int = Field(200, ge=1)


class OutputSettings(BaseModel):
    format: str = Field("csv", pattern="^(csv|json)$")


class LoggingSettings(BaseModel):
    level: str = Field("INFO", pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$")


class Settings(BaseModel):
    """Validated view of the merged configuration document."""

    enumeration: EnumerationSettings = EnumerationSettings()
    sampling: SamplingSettings = SamplingSettings()
    checks: ChecksSettings = ChecksSettings()
    mc: McSettings = McSettings()
    output: OutputSettings = OutputSettings()
    logging: LoggingSettings = LoggingSettings()


class ConfigManager:
    """Manages toolkit configuration."""

    def __init__(self, config_file: Optional[Path] = None):
        load_dotenv()
        if config_file is None:
            config_file = Path(os.environ.get(CONFIG_PATH_ENV, CONFIG_FILE))
        self.config_file = Path(config_file)
        self.config = self._load_config()
        self._ensure_defaults()
        self.settings = self._validate()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file."""
        try:
            if self.config_file.exists():
                with open(self.config_file, 'r') as f:
                    return json.load(f)
        except Exception as e:
            logger.error(f"Error loading config: {e}")
        return {}

    def _save_config(self):
        """Save configuration to file."""
        try:
            with open(self.config_file, 'w') as f:
                json.dump(self.config, f, indent=2)
            logger.info("Configuration saved")
        except Exception as e:
            logger.error(f"Error saving config: {e}")

    def _ensure_defaults(self):
        """Ensure all default values exist in config."""

        def merge_defaults(current: dict, defaults: dict):
            for key, value in defaults.items():
                if key not in current:
                    current[key] = copy.deepcopy(value)
                elif isinstance(value, dict) and isinstance(current.get(key), dict):
                    merge_defaults(current[key], value)

        merge_defaults(self.config, DEFAULT_CONFIG)

    def _validate(self) -> Settings:
        """Validate the merged document; fall back to defaults on bad input."""
        try:
            return Settings.model_validate(self.config)
        except ValidationError as e:
            logger.error(f"Invalid configuration in {self.config_file}, using defaults: {e}")
            self.config = copy.deepcopy(DEFAULT_CONFIG)
            return Settings.model_validate(self.config)

    def save(self):
        """Persist the current configuration."""
        self._save_config()

    # ==================== Enumeration Methods ====================

    def get_enum_limit(self) -> int:
        """Get the oracle enumeration limit (environment wins over file)."""
        env_value = os.environ.get(ENUM_LIMIT_ENV)
        if env_value:
            try:
                limit = int(env_value)
                if 1 <= limit <= HARD_ENUM_LIMIT:
                    return limit
                logger.warning(f"{ENUM_LIMIT_ENV}={env_value} outside 1..{HARD_ENUM_LIMIT}, ignored")
            except ValueError:
                logger.warning(f"{ENUM_LIMIT_ENV}={env_value!r} is not an integer, ignored")
        return self.settings.enumeration.limit

    def set_enum_limit(self, limit: int):
        """Set the oracle enumeration limit."""
        self.update_section("enumeration", {"limit": limit})

    # ==================== Sampling Methods ====================

    def get_sampling_config(self) -> Dict[str, Any]:
        """Get sampling configuration."""
        return self.settings.sampling.model_dump()

    def get_default_seed(self) -> int:
        return self.settings.sampling.default_seed

    def get_workers(self) -> int:
        return self.settings.sampling.workers

    def get_batch_size(self) -> int:
        return self.settings.sampling.batch_size

    # ==================== Checks Methods ====================

    def get_checks_config(self) -> Dict[str, Any]:
        """Get verification grid configuration."""
        return self.settings.checks.model_dump()

    def get_mc_config(self) -> Dict[str, Any]:
        """Get Monte Carlo acceptance configuration."""
        return self.settings.mc.model_dump()

    # ==================== Output Methods ====================

    def get_output_format(self) -> str:
        return self.settings.output.format

    def get_log_level(self) -> str:
        return self.settings.logging.level

    # ==================== General Methods ====================

    def update_section(self, section: str, values: Dict[str, Any]) -> Dict[str, Any]:
        """Update several keys of one section at once, validating the result."""
        if section not in DEFAULT_CONFIG:
            return {"success": False, "error": f"Unknown section: {section}"}
        candidate = copy.deepcopy(self.config)
        candidate[section].update(values)
        try:
            settings = Settings.model_validate(candidate)
        except ValidationError as e:
            return {"success": False, "error": str(e)}
        self.config = candidate
        self.settings = settings
        self._save_config()
        return {"success": True, "message": f"{section} settings updated"}

    def get_all_config(self) -> Dict[str, Any]:
        """Get all configuration."""
        return copy.deepcopy(self.config)

    def reset_to_defaults(self, section: Optional[str] = None) -> Dict[str, Any]:
        """Reset configuration to defaults."""
        try:
            if section:
                if section in DEFAULT_CONFIG:
                    self.config[section] = copy.deepcopy(DEFAULT_CONFIG[section])
                else:
                    return {"success": False, "error": f"Unknown section: {section}"}
            else:
                self.config = copy.deepcopy(DEFAULT_CONFIG)
            self.settings = self._validate()
            self._save_config()
            return {"success": True, "message": f"Reset {section or 'all'} to defaults"}
        except Exception as e:
            return {"success": False, "error": str(e)}


# Singleton instance
config_manager = ConfigManager()
