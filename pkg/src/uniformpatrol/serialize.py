"""JSON/CSV helpers that write probabilities with 17 significant digits."""

from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _prepare(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _emit(obj, indent, level) -> str:
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict) and obj:
        pad = "\n" + " " * (indent * (level + 1)) if indent else ""
        end = "\n" + " " * (indent * level) if indent else ""
        items = [f"{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + ",".join(items) + end + "}"
    if isinstance(obj, list) and obj:
        pad = "\n" + " " * (indent * (level + 1)) if indent else ""
        end = "\n" + " " * (indent * level) if indent else ""
        return "[" + ",".join(pad + _emit(v, indent, level + 1) for v in obj) + end + "]"
    return json.dumps(obj)


def dumps(obj, indent: int | None = 2) -> str:
    """JSON dump with floats at 17 significant digits; non-finite -> null."""
    return _emit(_prepare(obj), indent, 0)


def load_schema(name: str) -> dict:
    """JSON schema for a CLI output: solve, eval, simulate, table, verify or extension."""
    from importlib import resources

    return json.loads(resources.files("uniformpatrol").joinpath(f"data/schemas/{name}.schema.json").read_text())
