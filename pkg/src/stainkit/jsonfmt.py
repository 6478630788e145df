"""Deterministic JSON rendering for CLI reports.

Keys are emitted sorted and floats at 9 significant digits, so identical
inputs always produce byte-identical, diffable output. Non-finite floats
are rejected; callers encode infinities explicitly (e.g. the string "inf").
"""

from __future__ import annotations

import json
import math


def format_float(value: float) -> str:
    """Shortest representation of ``value`` rounded to 9 significant digits."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite floats have no JSON representation here")
    return repr(float(f"{value:.9g}"))


def dumps(obj, indent: int = 2) -> str:
    """Render dicts/lists/strings/numbers/bools/None deterministically."""
    pieces: list[str] = []
    _render(obj, pieces, indent, 0)
    return "".join(pieces)


def _render(obj, out: list[str], indent: int, depth: int) -> None:
    pad = " " * (indent * (depth + 1))
    end_pad = " " * (indent * depth)
    if obj is None or isinstance(obj, bool) or isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(repr(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj.keys())
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append(f"{pad}{json.dumps(key)}: ")
            _render(obj[key], out, indent, depth + 1)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(f"{end_pad}}}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(pad)
            _render(item, out, indent, depth + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(f"{end_pad}]")
    else:
        raise TypeError(f"cannot render {type(obj).__name__} deterministically")
