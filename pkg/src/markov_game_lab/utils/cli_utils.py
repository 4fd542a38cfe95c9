"""
Common CLI utilities for file and DataFrame handling.
"""

import os
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import orjson
import pandas as pd


def assert_file_exists(path: str, description: str) -> None:
    """
    Ensure that the given file path exists, otherwise raise FileNotFoundError.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"{description} not found: {path}")


def assert_columns_exist(df: pd.DataFrame, columns: Iterable[str], context: str = "") -> None:
    """
    Check that all specified columns exist in the DataFrame;
    raise ValueError otherwise.
    """
    missing = set(columns) - set(df.columns)
    if missing:
        prefix = f"{context}: " if context else ""
        raise ValueError(f"{prefix}Missing columns: {sorted(missing)}")


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(f".{target.name}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, target)
    return target


def write_csv(df: pd.DataFrame, path: str | Path, float_format: str) -> Path:
    text = df.to_csv(index=False, float_format=float_format, lineterminator="\n")
    return atomic_write_bytes(path, text.encode("utf-8"))


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Type is not JSON serializable: {type(value).__name__}")


def write_json(payload: Any, path: str | Path) -> Path:
    """Indented, key-sorted JSON; identical payloads give identical bytes."""
    data = orjson.dumps(
        payload,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE,
        default=_json_default,
    )
    return atomic_write_bytes(path, data)


def read_json(path: str | Path) -> Any:
    assert_file_exists(str(path), "JSON file")
    return orjson.loads(Path(path).read_bytes())
