"""
Configuration loader for nttlab experiment plans.

Behavior:
- An explicit path is the only candidate and must be valid.
- Otherwise env var `NTTLAB_CONFIG`, then `./nttlab.json`.
- Each candidate is validated against `json_schema/plan.schema.json`; invalid or
  unreadable candidates are logged and skipped.
- With no valid candidate, conservative DESK defaults are returned.
"""

import copy
import json
import os
from functools import lru_cache
from typing import Any, Dict, Optional

from ..core.errors import ConfigError
from .logger import logger

_SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "..", "json_schema")

_DEFAULT_CONFIG: Dict[str, Any] = {
    "scale": "DESK",
    "scenarios": ["PRETRAIN", "CASE1", "CASE2"],
    "variants": ["FULL", "NO_AGG", "FIXED_AGG", "NO_DELAY", "NO_SIZE"],
    "tasks": ["DELAY", "MCT"],
    "seeds": [1, 2, 3],
    "output_dir": "runs",
    "workers": 1,
    "log_level": "INFO",
    "test_fraction": 0.1,
    "subsample": 0.1,
    "train": {
        "lr": 1e-3,
        "batch_size": 64,
        "window_stride": 16,
        "pretrain_epochs": 20,
        "finetune_epochs": 10,
    },
}

_config_cache: Dict[str, Any] = {}


def default_config() -> Dict[str, Any]:
    """A fresh copy of the built-in plan defaults."""
    return copy.deepcopy(_DEFAULT_CONFIG)


@lru_cache(maxsize=None)
def load_schema(name: str) -> Dict[str, Any]:
    """Load one of the bundled JSON schemas by file stem (e.g. 'plan')."""
    path = os.path.abspath(os.path.join(_SCHEMA_DIR, f"{name}.schema.json"))
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def validate_document(doc: Any, schema_name: str) -> None:
    """Validate a JSON document against a bundled schema.

    Raises:
        ConfigError: naming the failing path and the schema message.
    """
    from jsonschema import ValidationError, validate

    try:
        validate(instance=doc, schema=load_schema(schema_name))
    except ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{schema_name} invalid at {where}: {e.message}") from e


def validate_config(cfg: Dict[str, Any]) -> None:
    """Validate an experiment plan document."""
    if not isinstance(cfg, dict):
        raise ConfigError("Configuration must be a JSON object/dict")
    validate_document(cfg, "plan")


def merge_defaults(cfg: Dict[str, Any]) -> Dict[str, Any]:
    """Fill missing plan keys from the defaults (nested 'train' merged key-wise)."""
    merged = default_config()
    for key, value in cfg.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: Optional[str] = None, use_cache: bool = True) -> Dict[str, Any]:
    """Load the experiment plan configuration with fallbacks.

    Returns a dictionary with every plan key present.
    """
    global _config_cache
    if use_cache and _config_cache and path is None:
        return _config_cache

    candidates = []
    if path:
        candidates.append(path)
    else:
        env_path = os.environ.get("NTTLAB_CONFIG")
        if env_path:
            candidates.append(env_path)
        candidates.append(os.path.join(os.getcwd(), "nttlab.json"))

    for p in candidates:
        p_abs = os.path.abspath(p)
        if not os.path.exists(p_abs):
            continue
        try:
            with open(p_abs, "r", encoding="utf-8") as f:
                cfg = json.load(f)
            validate_config(cfg)
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in config file {p}: {e}")
            continue
        except ConfigError as e:
            logger.warning(f"Rejected config {p}: {e}")
            continue
        result = merge_defaults(cfg)
        if path is None:
            _config_cache = result
        logger.info(f"Configuration loaded from {p_abs}")
        return result

    if path:
        # An explicitly requested file that is missing or invalid is a hard error.
        raise ConfigError(f"No valid plan configuration at {path}")

    logger.warning("No config found; using default DESK plan configuration.")
    _config_cache = default_config()
    return _config_cache


def reset_config_cache() -> None:
    """Forget the cached configuration (mainly for testing)."""
    global _config_cache
    _config_cache = {}
