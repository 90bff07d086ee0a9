"""Deterministic text serialization for reports and tables.

Floats are rendered with 17 significant digits (round-trip exact for IEEE
doubles), CSV uses LF endings and UTF-8, and JSON is emitted by a small
writer so the float format is identical everywhere.  Reruns on identical
inputs are byte-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["fmt_float", "to_json", "write_csv", "write_text"]


def fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite value {x} must be handled by the caller")
    if x == 0.0:
        return "0"
    return f"{x:.17g}"


def _json_value(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        return f'"{out}"'
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON keys must be strings, got {k!r}")
            items.append(f"{_json_value(k)}: {_json_value(v)}")
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_pretty(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict) and obj:
        inner = ",\n".join(
            f'{pad}  {_json_value(k)}: {_json_pretty(v, indent + 1).lstrip()}'
            for k, v in obj.items()
        )
        return f"{pad}{{\n{inner}\n{pad}}}"
    if isinstance(obj, (list, tuple)) and obj and any(isinstance(v, (dict, list, tuple)) for v in obj):
        inner = ",\n".join(f"{pad}  {_json_pretty(v, indent + 1).lstrip()}" for v in obj)
        return f"{pad}[\n{inner}\n{pad}]"
    return pad + _json_value(obj)


def to_json(obj) -> str:
    """Render a report tree (dict/list/scalars) as deterministic JSON text."""
    return _json_pretty(obj) + "\n"


def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_csv(path: Path, header: list[str], rows) -> None:
    """Write pre-formatted string cells with LF endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    write_text(path, "\n".join(lines) + "\n")
