"""Snapshot and diagnostics output.

Snapshots are legacy VTK ASCII ``STRUCTURED_POINTS`` files holding ``c``,
``theta`` and ``p`` as scalars and ``v``, ``q`` as three-component vectors
(unused components are zero).  Numbers carry 17 significant digits so a
write/read round trip is exact.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import constitutive as cst
from .diagnostics import DiagnosticsRecord
from .fields import Grid
from .solver import State

_FMT = "%.17g"
SCALARS = ("c", "theta", "p")
VECTORS = ("v", "q")


def _num(x) -> str:
    return _FMT % x


def _point_order(a: np.ndarray) -> np.ndarray:
    # VTK runs x fastest; our arrays are indexed [ix, iy]
    return np.asarray(a).ravel(order="F")


def snapshot_text(state: State, params: cst.MaterialParams) -> str:
    grid = state.grid
    nx, ny = grid.n[0], grid.n[1] if grid.dim > 1 else 1
    hx, hy = grid.h[0], grid.h[1] if grid.dim > 1 else grid.h[0]
    lines = [
        "# vtk DataFile Version 3.0",
        f"t = {_num(state.t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"SPACING {_num(hx)} {_num(hy)} {_num(hx)}",
        f"ORIGIN {_num(0.5 * hx)} {_num(0.5 * hy)} 0",
        f"POINT_DATA {grid.size}",
    ]
    scalars = {"c": state.c, "theta": state.theta, "p": cst.pressure(state.c, params)}
    for name in SCALARS:
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_num(x) for x in _point_order(scalars[name])]
    for name in VECTORS:
        u = getattr(state, name)
        comps = [_point_order(u[k]) for k in range(grid.dim)]
        comps += [np.zeros(grid.size)] * (3 - grid.dim)
        lines.append(f"VECTORS {name} double")
        lines += [" ".join(_num(x) for x in row) for row in zip(*comps)]
    return "\n".join(lines) + "\n"


def emit_snapshot(state: State, params: cst.MaterialParams, path) -> Path:
    path = Path(path)
    try:
        path.write_text(snapshot_text(state, params))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc.strerror or exc}") from exc
    return path


def read_snapshot(path) -> dict:
    """Parse a snapshot written by :func:`emit_snapshot`.

    Returns ``{"t", "dimensions", "spacing", "origin"}`` plus one array per
    field, shaped like the grid (vectors gain a leading axis of length 3).
    """
    path = Path(path)
    tokens = path.read_text().splitlines()
    out = {"t": float(tokens[1].split("=", 1)[1])}
    i = 2
    npts = None
    while i < len(tokens):
        words = tokens[i].split()
        i += 1
        if not words:
            continue
        key = words[0]
        if key == "DIMENSIONS":
            out["dimensions"] = tuple(int(w) for w in words[1:])
        elif key == "SPACING":
            out["spacing"] = tuple(float(w) for w in words[1:])
        elif key == "ORIGIN":
            out["origin"] = tuple(float(w) for w in words[1:])
        elif key == "POINT_DATA":
            npts = int(words[1])
        elif key == "SCALARS":
            i += 1  # LOOKUP_TABLE
            out[words[1]] = _from_points(np.array(tokens[i : i + npts], dtype=float), out["dimensions"])
            i += npts
        elif key == "VECTORS":
            rows = np.array([r.split() for r in tokens[i : i + npts]], dtype=float)
            out[words[1]] = np.stack([_from_points(rows[:, k], out["dimensions"]) for k in range(3)])
            i += npts
    return out


def _from_points(flat, dims):
    nx, ny, _ = dims
    shape = (nx,) if ny == 1 else (nx, ny)
    return flat.reshape(shape, order="F")


def grid_from_snapshot(snap: dict) -> Grid:
    nx, ny, _ = snap["dimensions"]
    hx, hy, _ = snap["spacing"]
    if ny == 1:
        return Grid((nx,), (hx,))
    return Grid((nx, ny), (hx, hy))


class DiagnosticsWriter:
    """CSV diagnostics: one header row, then one row per record.

    Floats use 17 significant digits and absent rate entries are empty.
    """

    def __init__(self, stream):
        self._writer = csv.writer(stream, lineterminator="\n")
        self._writer.writerow(["step", *DiagnosticsRecord.columns()])

    def write(self, index: int, rec: DiagnosticsRecord) -> None:
        self._writer.writerow(_row(index, rec))


def _row(index, rec):
    return [index, *("" if x is None else _num(x) for x in rec.values())]


def emit_diagnostics_row(rec: DiagnosticsRecord, stream, index: int = 0) -> None:
    """Write one CSV row (no header) for ``rec``."""
    csv.writer(stream, lineterminator="\n").writerow(_row(index, rec))
