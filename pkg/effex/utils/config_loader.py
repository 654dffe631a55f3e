"""
Effex Configuration Loader
==========================

Utilities for loading and accessing configuration from YAML files.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

logger = logging.getLogger(__name__)

# Global config cache
_config_cache: Optional[Dict[str, Any]] = None


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from a YAML file.

    Missing keys are filled from :func:`get_default_config`, so callers can
    always rely on every documented section being present.

    Args:
        config_path: Path to config file (default: config.yaml in project root)

    Returns:
        Configuration dictionary

    Raises:
        yaml.YAMLError: If config file is invalid
    """
    global _config_cache

    if _config_cache is not None and config_path is None:
        return _config_cache

    if config_path is None:
        path = Path(__file__).parent.parent.parent / "config.yaml"
    else:
        path = Path(config_path)

    if not path.exists():
        logger.warning(f"Config file not found: {path}, using defaults")
        return get_default_config()

    try:
        with open(path, "r") as f:
            loaded = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        logger.error(f"Error parsing config file: {e}")
        raise

    config = merge_config(get_default_config(), loaded)
    if config_path is None:
        _config_cache = config
    logger.info(f"Configuration loaded from {path}")
    return config


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively overlay ``override`` onto ``base`` and return a new dict."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def get_config_value(*keys: str, default: Any = None, config: Optional[Dict] = None) -> Any:
    """
    Get a configuration value by walking nested keys.

    Args:
        *keys: Configuration keys (e.g., 'simulation', 'bfs_depth')
        default: Default value if key not found
        config: Configuration dict (if None, loads from file)

    Returns:
        Configuration value or default

    Example:
        >>> get_config_value('execution', 'fuel')
        1000000
    """
    if config is None:
        config = load_config()

    value: Any = config
    for key in keys:
        if isinstance(value, dict) and key in value:
            value = value[key]
        else:
            return default
    return value


def get_default_config() -> Dict[str, Any]:
    """
    Return default configuration if YAML file is not available.

    Returns:
        Default configuration dictionary
    """
    return {
        "execution": {
            "fuel": 1000000,
            "seed": 2024,
        },
        "simulation": {
            "bfs_depth": 32,
            "max_states": 20000,
        },
        "semantics": {
            "law_sizes": [0, 1, 2],
            "law_cases": 400,
            "table_limit": 4096,
        },
        "generation": {
            "samples": 1000,
            "max_depth": 4,
        },
        "logging": {
            "level": "WARNING",
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "file": "effex.log",
            "console": True,
            "file_enabled": False,
        },
        "output": {
            "results_dir": "results",
            "export_format": "csv",
        },
    }
