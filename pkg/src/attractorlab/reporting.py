"""CSV and JSON writers with fixed formatting and atomic replacement."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from .numbers import LogTime, LogValue, TowerValue

__all__ = [
    "format_number",
    "write_csv",
    "write_json",
    "atomic_write_text",
    "timeline_rows",
    "interval_rows",
    "read_json",
]


def format_number(v: Any) -> str:
    """Twelve significant digits for reals, ``L<level>:<mantissa>`` for towers beyond double range."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, TowerValue):
        if v.is_plain():
            return format_number(v.to_float())
        return f"L{v.level}:{v.mantissa:.12g}"
    if isinstance(v, LogValue):
        return format_number(v.log)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    if hasattr(v, "item"):  # numpy scalar
        return format_number(v.item())
    return str(v)


def atomic_write_text(path: Path, text: str) -> None:
    """Write ``text`` to a sibling temporary file and move it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(x) for x in row])
    atomic_write_text(path, buf.getvalue())
    return Path(path)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple, set, frozenset)):
        items = [_jsonable(x) for x in v]
        return sorted(items, key=str) if isinstance(v, (set, frozenset)) else items
    if isinstance(v, (TowerValue, LogValue, Fraction)):
        return format_number(v)
    if isinstance(v, float) and not math.isfinite(v):
        return format_number(v)
    if hasattr(v, "item"):
        return v.item()
    return v


def write_json(path: Path, obj: Any) -> Path:
    atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return Path(path)


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _log_token(stamp: LogTime) -> Any:
    """``ln T`` as a float, or as a tower token when it exceeds double range."""
    if stamp.anchor.is_plain():
        return stamp.log_float()
    return stamp.log()


def timeline_rows(t) -> list[tuple]:
    """Rows ``(k, logT_kA, logT_kB, tier)`` of a timeline."""
    return [(k, _log_token(t.stamps_a[k]), _log_token(t.stamps_b[k]), t.tiers[k]) for k in range(1, t.n_turns + 1)]


def interval_rows(c) -> list[tuple]:
    """Rows ``(color, tau_start, tau_end)`` sorted by start."""
    return [(iv.color, iv.start, iv.end) for iv in sorted(c.intervals, key=lambda iv: (iv.start, iv.color))]
