"""CSV / JSON writers.  Floats use a fixed format so output is byte-reproducible."""
from __future__ import annotations

import csv
import io
import json
import math

from .experiments import COLUMNS

VALIDATE_COLUMNS = ("check", "scenario", "measured", "reference", "tolerance", "passed")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".10g")
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        return None if math.isnan(v) else float(format(v, ".10g"))
    return v


def render(rows, columns=COLUMNS, fmt="csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(r[c]) for c in columns} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def write(rows, path=None, columns=COLUMNS, fmt="csv", stream=None) -> str:
    """Write to ``path`` (or ``stream`` when no path is given) and return the text."""
    text = render(rows, columns, fmt)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    return text
