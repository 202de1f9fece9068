"""Readers and writers for grid-text v1 fields and boundary-trace CSV files.

grid-text v1 is plain ASCII: a header line ``nx ny hx hy ox oy`` followed by
``nx*ny`` whitespace-separated values, row-major with the bottom row first.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .field_core import BoundaryTrace, Grid2D, ScalarField


class GridFormatError(ValueError):
    """Malformed grid-text or trace input; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def format_grid_text(u: ScalarField, per_line: int | None = None) -> str:
    g = u.grid
    per_line = per_line or g.nx
    header = " ".join([str(g.nx), str(g.ny)] + [_fmt(v) for v in (g.hx, g.hy, g.ox, g.oy)])
    flat = u.flat()
    lines = [header]
    for k in range(0, flat.size, per_line):
        lines.append(" ".join(_fmt(v) for v in flat[k : k + per_line]))
    return "\n".join(lines) + "\n"


def write_grid_text(path, u: ScalarField) -> None:
    Path(path).write_text(format_grid_text(u))


def parse_grid_text(text: str, path=None) -> ScalarField:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise GridFormatError("missing header 'nx ny hx hy ox oy'", path, 1)
    head = lines[0].split()
    if len(head) != 6:
        raise GridFormatError(f"header needs 6 fields, found {len(head)}", path, 1)
    try:
        nx, ny = int(head[0]), int(head[1])
        hx, hy, ox, oy = (float(v) for v in head[2:])
    except ValueError as exc:
        raise GridFormatError(f"bad header value ({exc})", path, 1) from None
    try:
        grid = Grid2D(nx, ny, hx, hy, ox, oy)
    except ValueError as exc:
        raise GridFormatError(str(exc), path, 1) from None
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        for tok in line.split():
            try:
                v = float(tok)
            except ValueError:
                raise GridFormatError(f"not a number: {tok!r}", path, lineno) from None
            if not np.isfinite(v):
                raise GridFormatError(f"non-finite value {tok!r}", path, lineno)
            values.append(v)
    if len(values) != nx * ny:
        raise GridFormatError(
            f"expected {nx * ny} values, found {len(values)}", path, len(lines)
        )
    return ScalarField(grid, np.array(values).reshape(ny, nx))


def read_grid_text(path) -> ScalarField:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise GridFormatError(f"cannot read ({exc.strerror})", path) from None
    return parse_grid_text(text, path)


def format_trace_csv(f: BoundaryTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for k, v in zip(f.indices, f.values):
        w.writerow([int(k), _fmt(float(v))])
    return buf.getvalue()


def write_trace_csv(path, f: BoundaryTrace) -> None:
    Path(path).write_text(format_trace_csv(f))


def read_trace_csv(path, grid: Grid2D) -> BoundaryTrace:
    idx, vals = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip() == "index"):
                continue
            if len(row) != 2:
                raise GridFormatError("expected 'index,value'", path, lineno)
            try:
                idx.append(int(row[0]))
                vals.append(float(row[1]))
            except ValueError:
                raise GridFormatError(f"bad row {row!r}", path, lineno) from None
    try:
        return BoundaryTrace(grid, np.array(idx), np.array(vals))
    except ValueError as exc:
        raise GridFormatError(str(exc), path) from None
