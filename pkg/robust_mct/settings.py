"""
Runtime settings for the robust MCT toolkit.

Values come from environment variables, optionally loaded from a ``.env``
file in the working directory. Every source of randomness defaults to
``DEFAULT_SEED`` so repeated runs are bit-identical.
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

DEFAULT_SEED = 20190501
DEFAULT_GRID = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "scenario_grid.csv")


@dataclass
class Settings:
    """Process-wide defaults, overridable per call."""

    seed: int = DEFAULT_SEED
    threads: int = 1
    # H1 shift of every dose group, in units of the base SD
    effect: float = 1.25
    base_mean: float = 90.0
    base_sd: float = 10.0
    mixture_shift: float = 3.0
    mvt_max_points: int = 2**22
    grid_path: str = DEFAULT_GRID


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw not in (None, "") else default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    return float(raw) if raw not in (None, "") else default


def load_settings() -> Settings:
    """Build settings from the environment."""
    return Settings(
        seed=_env_int("ROBUST_MCT_SEED", DEFAULT_SEED),
        threads=max(1, _env_int("ROBUST_MCT_THREADS", os.cpu_count() or 1)),
        effect=_env_float("ROBUST_MCT_EFFECT", 1.25),
        base_mean=_env_float("ROBUST_MCT_BASE_MEAN", 90.0),
        base_sd=_env_float("ROBUST_MCT_BASE_SD", 10.0),
        mixture_shift=_env_float("ROBUST_MCT_MIXTURE_SHIFT", 3.0),
        mvt_max_points=_env_int("ROBUST_MCT_MVT_MAX_POINTS", 2**22),
        grid_path=os.getenv("ROBUST_MCT_GRID", DEFAULT_GRID),
    )


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None
