"""CSV traces and deterministic JSON reports.

Trace CSV header: ``n,t,coord_0,coord_1,step,displacement,h_anchor_0,...``.
``t`` is the ray parameter for ray traces and empty for orbits; ``coord_1`` is
empty for one-dimensional spaces. Backward orbits append a ``residual`` column.
"""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("n", "t", "coord_0", "coord_1", "step", "displacement")


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def trace_rows(space, points, anchors=(), ts=None, residuals=None):
    """Rows of the trace CSV; ``anchors`` are horofunction handles."""
    header = list(TRACE_COLUMNS) + [f"h_anchor_{k}" for k in range(len(anchors))]
    if residuals is not None:
        header.append("residual")
    rows = [header]
    x0 = points[0]
    prev = None
    for n, x in enumerate(points):
        c = space.coords(x)
        row = [
            str(n),
            "" if ts is None else _fmt(ts[n]),
            _fmt(c[0]),
            _fmt(c[1]) if len(c) > 1 else "",
            "" if prev is None else _fmt(space.distance(prev, x)),
            _fmt(space.distance(x0, x)),
        ]
        row.extend(_fmt(h(x)) for h in anchors)
        if residuals is not None:
            row.append("" if n == 0 else _fmt(residuals[n - 1]))
        rows.append(row)
        prev = x
    return rows


def write_trace_csv(path, space, points, anchors=(), ts=None, residuals=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(trace_rows(space, points, anchors, ts, residuals))
    return path


def trace_csv_text(space, points, anchors=(), ts=None, residuals=None) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(trace_rows(space, points, anchors, ts, residuals))
    return buf.getvalue()


def to_jsonable(obj):
    """Plain JSON values; non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_report(report) -> str:
    """Sorted keys, fixed separators and shortest-repr floats: equal input, equal bytes."""
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, report) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report))
    return path
