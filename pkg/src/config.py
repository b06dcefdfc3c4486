"""
Environment-driven configuration.

Values are read from the process environment after loading an optional `.env`
file from the working directory:

    CARPENTER_MAX_LEVEL   level cap for every tower operation (default 11)
    CARPENTER_LOG_LEVEL   logging level used by the CLI (default WARNING)
"""

import logging
import os

from dotenv import load_dotenv

from src.errors import ConfigError

load_dotenv()

DEFAULT_MAX_LEVEL = 11
# 2^14 complex entries per side is already ~4 GB per dense matrix
HARD_MAX_LEVEL = 14
DEFAULT_LOG_LEVEL = "WARNING"


def get_max_level() -> int:
    """Return the level cap, honouring CARPENTER_MAX_LEVEL."""
    raw = os.getenv("CARPENTER_MAX_LEVEL")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_LEVEL
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"CARPENTER_MAX_LEVEL must be an integer, got {raw!r}") from None
    if not 1 <= value <= HARD_MAX_LEVEL:
        raise ConfigError(f"CARPENTER_MAX_LEVEL must lie in 1..{HARD_MAX_LEVEL}, got {value}")
    return value


def get_log_level() -> str:
    """Return the CLI log level name, honouring CARPENTER_LOG_LEVEL."""
    name = os.getenv("CARPENTER_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(name), int):
        raise ConfigError(f"Unknown CARPENTER_LOG_LEVEL {name!r}")
    return name
