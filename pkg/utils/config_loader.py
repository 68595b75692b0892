"""
Configuration loader for engine settings from .env and the environment.
"""
import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv
from config import EngineSettings, ResourceLimits
from exceptions import ConfigurationError


def _int_from_env(name: str, default: int) -> int:
    """
    Read an integer environment variable.

    Args:
        name: Variable name
        default: Value used when the variable is unset or empty

    Returns:
        Parsed integer

    Raises:
        ConfigurationError: If the value is not an integer
    """
    raw = os.getenv(name, '').strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")


def load_settings(env_path: Optional[Path] = None) -> EngineSettings:
    """
    Load engine settings, reading a .env file first if one exists.

    Recognized variables: SUPERSTAR_MAX_BUDGET, SUPERSTAR_MAX_ODD_DIM,
    SUPERSTAR_LOG_LEVEL, SUPERSTAR_NU_MARGIN.

    Args:
        env_path: Path of the .env file (defaults to ./.env)

    Returns:
        Validated EngineSettings

    Raises:
        ConfigurationError: If a value is malformed or out of range
    """
    env_path = env_path or Path(".env")
    if env_path.exists():
        load_dotenv(env_path)

    defaults = EngineSettings()
    try:
        limits = ResourceLimits(
            max_odd_dimension=_int_from_env('SUPERSTAR_MAX_ODD_DIM', defaults.limits.max_odd_dimension),
            max_budget=_int_from_env('SUPERSTAR_MAX_BUDGET', defaults.limits.max_budget),
        )
        return EngineSettings(
            limits=limits,
            nu_margin_per_odd=_int_from_env('SUPERSTAR_NU_MARGIN', defaults.nu_margin_per_odd),
            log_level=os.getenv('SUPERSTAR_LOG_LEVEL', defaults.log_level).strip() or defaults.log_level,
        )
    except ValueError as e:
        raise ConfigurationError(f"Invalid configuration: {e}")
