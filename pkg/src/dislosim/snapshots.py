"""Binary and CSV snapshot formats for grid fields.

Binary layout (little-endian):
    magic   4 bytes  b"DLS1"
    dim     int64
    n       int64
    origin  dim * float64
    extent  float64
    time    float64
    values  n**dim * float64, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, ScalarField

MAGIC = b"DLS1"


def write_snapshot(field: ScalarField, path: str | Path) -> None:
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qq", g.dim, g.n))
        fh.write(struct.pack(f"<{g.dim}d", *g.origin))
        fh.write(struct.pack("<dd", g.extent, field.time))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot(path: str | Path) -> ScalarField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ConfigurationError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        dim, n = struct.unpack("<qq", fh.read(16))
        origin = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        extent, time = struct.unpack("<dd", fh.read(16))
        grid = Grid(dim=int(dim), origin=tuple(origin), extent=extent, n=int(n))
        raw = fh.read(8 * grid.num_nodes)
        if len(raw) != 8 * grid.num_nodes:
            raise ConfigurationError(f"{path}: truncated value block")
        values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).copy()
    return ScalarField(grid, values, time)


def write_csv(field: ScalarField, path: str | Path) -> None:
    """One row per node: x[,y],value."""
    g = field.grid
    with open(path, "w") as fh:
        if g.dim == 1:
            fh.write("x,value\n")
            for x, v in zip(g.axis(0), field.values):
                fh.write(f"{x!r},{v!r}\n")
        else:
            fh.write("x,y,value\n")
            xs, ys = g.axis(0), g.axis(1)
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    fh.write(f"{x!r},{y!r},{field.values[i, j]!r}\n")
