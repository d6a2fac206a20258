"""Deterministic JSON serialization for reports.

Keys are emitted sorted, floats with 17 significant decimal digits (exact
round-trip for doubles), matrices as nested row-major lists.  Identical data
always serializes to identical bytes, which the report formats rely on.
"""

from __future__ import annotations

import json
import math

import numpy as np


def _convert(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write(obj, indent: int, out: list[str]) -> None:
    obj = _convert(obj)
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj!r}")
        out.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {type(key).__name__}")
            out.append(f'{pad}  {json.dumps(key)}: ')
            _write(obj[key], indent + 1, out)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = [_convert(x) for x in obj]
        if not items:
            out.append("[]")
            return
        if all(isinstance(x, (int, float, bool)) or x is None for x in items):
            parts: list[str] = []
            for x in items:
                sub: list[str] = []
                _write(x, 0, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, item in enumerate(items):
            out.append(pad + "  ")
            _write(item, indent + 1, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Serialize to deterministic, human-readable JSON (trailing newline)."""
    out: list[str] = []
    _write(obj, 0, out)
    return "".join(out) + "\n"
