"""
Logging configuration for the robust MCT toolkit.

This module provides configurable logging levels that can be set via:
- Environment variables
- The ``--verbose`` flag (``configure_logging``)
- Default fallback values
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

VALID_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# config field -> logger name
_LOGGER_FIELDS = {
    "app_level": "robust_mct",
    "mvt_level": "robust_mct.mct.mvt",
    "mlt_level": "robust_mct.mlt",
    "sim_level": "robust_mct.sim",
    "cli_level": "robust_mct.cli",
}


@dataclass
class LoggingConfig:
    """Configuration for logging levels."""

    root_level: str = "WARNING"
    app_level: str = "INFO"
    mvt_level: str = "WARNING"
    mlt_level: str = "INFO"
    sim_level: str = "INFO"
    cli_level: str = "INFO"
    log_file: Optional[str] = None


class LoggingManager:
    """Manages logging configuration and provides runtime level changes."""

    def __init__(self):
        self.config = self._load_config()
        self._configure_logging()

    def _load_config(self) -> LoggingConfig:
        """Load logging configuration from environment variables with quiet defaults."""
        return LoggingConfig(
            root_level=os.getenv("LOG_ROOT_LEVEL", "WARNING"),
            app_level=os.getenv("LOG_APP_LEVEL", "INFO"),
            mvt_level=os.getenv("LOG_MVT_LEVEL", "WARNING"),
            mlt_level=os.getenv("LOG_MLT_LEVEL", "INFO"),
            sim_level=os.getenv("LOG_SIM_LEVEL", "INFO"),
            cli_level=os.getenv("LOG_CLI_LEVEL", "INFO"),
            log_file=os.getenv("LOG_FILE") or None,
        )

    def _configure_logging(self):
        """Configure logging based on current configuration."""
        handlers = [logging.StreamHandler()]
        if self.config.log_file:
            handlers.append(logging.FileHandler(self.config.log_file))

        logging.basicConfig(
            level=getattr(logging, self.config.root_level.upper(), logging.WARNING),
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
            handlers=handlers,
        )

        for field_name, logger_name in _LOGGER_FIELDS.items():
            self._set_logger_level(logger_name, getattr(self.config, field_name))

    def _set_logger_level(self, logger_name: str, level_name: str):
        """Set the level for a specific logger."""
        try:
            level = getattr(logging, level_name.upper())
            logging.getLogger(logger_name).setLevel(level)
        except AttributeError:
            logging.warning(f"Invalid logging level '{level_name}' for logger '{logger_name}'")

    def set_logger_level(self, logger_name: str, level: str) -> bool:
        """Set the level for a specific logger."""
        level_upper = level.upper()
        if level_upper not in VALID_LEVELS:
            return False

        self._set_logger_level(logger_name, level_upper)

        # Update config if it's a known logger
        for field_name, known in _LOGGER_FIELDS.items():
            if known == logger_name:
                setattr(self.config, field_name, level_upper)
        return True


# Global logging manager instance
_logging_manager: Optional[LoggingManager] = None


def get_logging_manager() -> LoggingManager:
    """Get the global logging manager instance."""
    global _logging_manager
    if _logging_manager is None:
        _logging_manager = LoggingManager()
    return _logging_manager


def configure_logging(verbose: bool = False):
    """Configure logging using the logging manager."""
    manager = get_logging_manager()
    if verbose:
        for logger_name in _LOGGER_FIELDS.values():
            manager.set_logger_level(logger_name, "DEBUG")
    return manager
