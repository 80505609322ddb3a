"""Configuration loader for sfda-lab."""

import json
import logging
import os
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from ..errors import ConfigurationError
from .models import LabConfig, ShiftConfig

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def expand_env_vars(obj: Any) -> Any:
    """Recursively expand environment variables in configuration values."""
    if isinstance(obj, str):
        return os.path.expandvars(obj)
    elif isinstance(obj, dict):
        return {key: expand_env_vars(value) for key, value in obj.items()}
    elif isinstance(obj, list):
        return [expand_env_vars(item) for item in obj]
    else:
        return obj


def describe_validation_error(error: ValidationError) -> str:
    """Render a pydantic error as ``field.path: message`` lines."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def _read_document(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    try:
        with open(path, encoding="utf-8") as f:
            # JSON documents parse as YAML flow mappings
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML/JSON in {path}: {e}") from e

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return expand_env_vars(raw)


def _validate(model: type[ModelT], raw: dict[str, Any], source: str) -> ModelT:
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(
            f"{source}: {describe_validation_error(e)}"
        ) from e


def load_config(config_path: str | Path | None = None) -> LabConfig:
    """Load configuration from a YAML or JSON file.

    Args:
        config_path: Path to configuration file. If None, defaults are returned.

    Returns:
        Loaded and validated configuration.

    Raises:
        FileNotFoundError: If config file not found.
        ConfigurationError: If config is invalid.
    """
    if config_path is None:
        logger.info("No config file given, using defaults")
        return LabConfig()

    path = Path(config_path)
    logger.info(f"Loading configuration from: {path}")
    config = _validate(LabConfig, _read_document(path), str(path))
    logger.info("Configuration loaded successfully")
    return config


def load_shift_config(config_path: str | Path) -> ShiftConfig:
    """Load a benchmark description.

    Accepts either a bare ShiftConfig document or a full LabConfig document, in
    which case its ``shift`` section is used.
    """
    path = Path(config_path)
    raw = _read_document(path)
    if "shift" in raw:
        return _validate(LabConfig, raw, str(path)).shift
    return _validate(ShiftConfig, raw, str(path))


def save_config(config: BaseModel, config_path: str | Path) -> None:
    """Save configuration to a YAML file, or JSON when the suffix is ``.json``.

    Args:
        config: Configuration object to save.
        config_path: Path to save configuration file.
    """
    path = Path(config_path)
    path.parent.mkdir(parents=True, exist_ok=True)

    config_dict = config.model_dump(mode="json", exclude_unset=False)

    with open(path, "w", encoding="utf-8") as f:
        if path.suffix.lower() == ".json":
            json.dump(config_dict, f, indent=2, sort_keys=False)
            f.write("\n")
        else:
            yaml.dump(
                config_dict,
                f,
                default_flow_style=False,
                sort_keys=False,
                indent=2,
            )

    logger.info(f"Configuration saved to: {path}")


def get_default_config() -> dict[str, Any]:
    """Get default configuration as dictionary for documentation."""
    return LabConfig().model_dump(mode="json", exclude_unset=False)
