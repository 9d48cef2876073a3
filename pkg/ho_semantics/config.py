"""
Configuration Module for the HO Semantics Workbench

This module loads the default run parameters of the workbench.

Configuration is stored in config/workbench_config.json and includes:
- Bisimulation bounds (depth, argument pool sizes)
- Tracing and congruence-search parameters (steps, contexts, context size, seed)
- Open-extension bounds (closing tuples, substitution budget)
- Output format and the directory holding the shipped specifications

The environment variable HOSOS_CONFIG points to another configuration file and
HOSOS_ASSET_DIR overrides the asset directory.
"""

import json
import logging
import os

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

# Configuration file path
CONFIG_FILE = os.path.join("config", "workbench_config.json")

CONFIG_ENV = "HOSOS_CONFIG"
ASSET_DIR_ENV = "HOSOS_ASSET_DIR"

PACKAGE_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DEFAULTS = {
    "depth": 10,
    "pool_size": 3,
    "lambda_pool_size": 4,
    "max_steps": 20,
    "n_contexts": 100,
    "ctx_size": 8,
    "seed": 42,
    "closing_limit": 64,
    "renaming_budget": 4,
    "format": "text",
    "asset_dir": "assets",
}

_POSITIVE = ("depth", "pool_size", "lambda_pool_size", "n_contexts", "ctx_size",
             "closing_limit", "renaming_budget")
_NON_NEGATIVE = ("max_steps", "seed")
_FORMATS = ("text", "machine")


def _config_path(path):
    if path is not None:
        return path
    if os.environ.get(CONFIG_ENV):
        return os.environ[CONFIG_ENV]
    if os.path.exists(CONFIG_FILE):
        return CONFIG_FILE
    return os.path.join(PACKAGE_ROOT, CONFIG_FILE)


def validate_config(config):
    """
    Check the types and ranges of configuration values.

    Parameters:
    -----------
    config : dict
        Merged configuration

    Returns:
    --------
    dict
        The same configuration

    Raises:
    -------
    ConfigurationError
        On the first invalid value
    """
    for key in _POSITIVE + _NON_NEGATIVE:
        value = config[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"configuration value '{key}' must be an integer, got {value!r}")
        if key in _POSITIVE and value < 1:
            raise ConfigurationError(f"configuration value '{key}' must be positive, got {value}")
        if value < 0:
            raise ConfigurationError(f"configuration value '{key}' must be non-negative, got {value}")
    if config["format"] not in _FORMATS:
        raise ConfigurationError(f"configuration value 'format' must be one of {', '.join(_FORMATS)}")
    return config


def load_workbench_config(path=None):
    """
    Load the workbench configuration.

    Parameters:
    -----------
    path : str, optional
        Configuration file; defaults to $HOSOS_CONFIG, then config/workbench_config.json

    Returns:
    --------
    dict
        DEFAULTS overlaid with the file's values and the environment overrides
    """
    config = dict(DEFAULTS)
    config_path = _config_path(path)
    if os.path.exists(config_path):
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
            unknown = sorted(set(loaded) - set(DEFAULTS))
            if unknown:
                logger.warning("⚠️ Ignoring unknown configuration key(s): %s", ", ".join(unknown))
            config.update({k: v for k, v in loaded.items() if k in DEFAULTS})
            logger.debug("🔐 Configuration loaded from %s", config_path)
        except (OSError, ValueError, AttributeError) as e:
            logger.warning("⚠️ Error loading configuration file %s: %s", config_path, e)
            config = dict(DEFAULTS)
    else:
        logger.debug("No configuration file at %s, using defaults", config_path)
    if os.environ.get(ASSET_DIR_ENV):
        config["asset_dir"] = os.environ[ASSET_DIR_ENV]
    return validate_config(config)


def resolve_asset_dir(asset_dir=None):
    """
    The directory holding the shipped ``.hos`` specifications.

    An explicit argument wins, then $HOSOS_ASSET_DIR, then ``assets`` relative
    to the working directory, then the copy next to the package.
    """
    if asset_dir is None:
        asset_dir = os.environ.get(ASSET_DIR_ENV) or DEFAULTS["asset_dir"]
    if os.path.isabs(asset_dir) or os.path.isdir(asset_dir):
        return asset_dir
    return os.path.join(PACKAGE_ROOT, asset_dir)
