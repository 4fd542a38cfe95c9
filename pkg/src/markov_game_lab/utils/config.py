# src/markov_game_lab/utils/config.py
from pathlib import Path
from typing import Any, Dict, Sequence, cast

import yaml
from omegaconf import DictConfig, OmegaConf
from pydantic import ValidationError

from .cli_utils import assert_file_exists
from .config_schema import Config
from .logger import log_error, log_info


def parse_overrides(argv: Sequence[str]) -> Dict[str, str]:
    """`key.sub=value` command-line tokens as a flat mapping."""
    overrides = {}
    for arg in argv:
        if "=" not in arg:
            raise ValueError(f"Override '{arg}' is not of the form key=value")
        key, value = arg.split("=", 1)
        overrides[key] = value
    return overrides


def load_config(path: str | Path, overrides: Dict[str, str] | None = None) -> DictConfig:
    assert_file_exists(str(path), "Configuration file")
    cfg = OmegaConf.load(path)
    assert isinstance(cfg, DictConfig)
    for key, value in (overrides or {}).items():
        # values arrive as text; YAML parsing turns "200", "[0, 1]" and "null" into data
        OmegaConf.update(cfg, key, yaml.safe_load(value), force_add=True)
    return cfg


def validate_config(config: DictConfig) -> Dict[str, Any]:
    """
    Validates an OmegaConf DictConfig object against the Pydantic model.
    """
    try:
        # Convert OmegaConf to a standard Python dict for Pydantic validation
        config_dict = OmegaConf.to_container(config, resolve=True)

        assert isinstance(
            config_dict, dict
        ), f"Config validation failed: expected a dict, but got {type(config_dict)}"

        Config.model_validate(config_dict)

        log_info("✅ Configuration validation successful.")
        return cast(Dict[str, Any], config_dict)
    except ValidationError as e:
        log_error("❌ Configuration is invalid!")
        log_error(str(e))
        raise
