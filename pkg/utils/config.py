"""Runtime settings and seed derivation."""

import logging
import os
from functools import lru_cache
from typing import Optional

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_MAX_SIMPLICES = 2_000_000


def _default_threads() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


class Settings(BaseModel):
    """Process-wide settings read from the environment (and a `.env` file if present)."""

    threads: int = Field(default_factory=_default_threads, ge=1, description="Worker cap for parallel evaluations")
    max_simplices: int = Field(DEFAULT_MAX_SIMPLICES, ge=1, description="Vietoris-Rips simplex budget")
    log_level: str = Field("WARNING", description="Log level used by the command line")

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from TOPOFLUX_* environment variables.

        Returns:
            Validated settings

        Raises:
            ConfigurationError: If a variable holds an invalid value
        """
        load_dotenv()
        values = {}
        if os.getenv("TOPOFLUX_THREADS"):
            values["threads"] = os.getenv("TOPOFLUX_THREADS")
        if os.getenv("TOPOFLUX_MAX_SIMPLICES"):
            values["max_simplices"] = os.getenv("TOPOFLUX_MAX_SIMPLICES")
        if os.getenv("TOPOFLUX_LOG_LEVEL"):
            values["log_level"] = os.getenv("TOPOFLUX_LOG_LEVEL").upper()
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid TOPOFLUX environment settings: {e}") from e


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached process settings."""
    settings = Settings.from_env()
    logger.debug("Loaded settings: %s", settings)
    return settings


def derive_seed(seed: Optional[int], *keys: int) -> int:
    """Derive an independent 32-bit seed for one consumer of the top-level seed.

    Args:
        seed: Top-level seed (None draws fresh OS entropy)
        *keys: Integers naming the consumer, e.g. (epoch, stream)

    Returns:
        A deterministic seed for the given (seed, keys) combination
    """
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    return int(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1)[0])
