"""CSV/JSON writers for time series and phase-space grids."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .observables import TimeSeries
from .phase_space import PhaseSpaceGrid


def fmt(x: float) -> str:
    """Fixed float formatting: at most 12 significant digits, no ``-0``."""
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def series_csv(series: TimeSeries) -> str:
    lines = ["lambda_t,value"]
    lines += [f"{fmt(t)},{fmt(v)}" for t, v in zip(series.times, series.values)]
    return "\n".join(lines) + "\n"


def distribution_csv(times, distributions) -> str:
    lines = ["lambda_t,n,value"]
    for t, dist in zip(times, distributions):
        lines += [f"{fmt(t)},{n},{fmt(p)}" for n, p in enumerate(dist)]
    return "\n".join(lines) + "\n"


def grid_csv(grid: PhaseSpaceGrid) -> str:
    lines = ["re,im,value"]
    for i, im in enumerate(grid.im_axis):
        row = grid.values[i]
        lines += [f"{fmt(re)},{fmt(im)},{fmt(v)}" for re, v in zip(grid.re_axis, row)]
    return "\n".join(lines) + "\n"


def emit_csv(obj, path) -> Path:
    if isinstance(obj, TimeSeries):
        return _write(path, series_csv(obj))
    if isinstance(obj, PhaseSpaceGrid):
        return _write(path, grid_csv(obj))
    raise TypeError(f"cannot write {type(obj).__name__} as CSV")


def _rounded(values) -> list:
    return [float(fmt(v)) for v in np.ravel(values)]


def to_json_dict(obj) -> dict:
    if isinstance(obj, TimeSeries):
        return {"label": obj.label, "lambda_t": _rounded(obj.times), "values": _rounded(obj.values)}
    if isinstance(obj, PhaseSpaceGrid):
        vals = np.asarray(obj.values)
        return {
            "kind": obj.kind,
            "meta": obj.meta,
            "re_axis": _rounded(obj.re_axis),
            "im_axis": _rounded(obj.im_axis),
            "values": [_rounded(row) for row in vals],
        }
    raise TypeError(f"cannot write {type(obj).__name__} as JSON")


def emit_json(obj, path) -> Path:
    return _write(path, json.dumps(to_json_dict(obj), indent=1, sort_keys=True) + "\n")
