"""``field2 v1`` persistence of cell fields.

Layout (little endian): 4-byte magic ``FLD2``, ``uint32`` version 1,
``uint64`` cell count, then per cell in mesh order three ``float64``
values: center ``x``, center ``y`` and the cell value.  A sidecar CSV
holds the same three columns as text.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FLD2"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def write_field(path, field) -> Path:
    """Write ``field`` (a :class:`~fraccap.solver.field.Field`) as ``field2 v1``."""
    path = Path(path)
    c = field.mesh.centers()
    data = np.column_stack([c, field.values.ravel()]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(data)))
        fh.write(data.tobytes(order="C"))
    return path


def read_field(path) -> np.ndarray:
    """Read a ``field2 v1`` file into an array of shape ``(count, 3)``.

    Raises
    ------
    ValueError
        On a wrong magic, an unknown version or a truncated body.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("field file shorter than its header")
    magic, version, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValueError(f"unsupported field2 version {version}")
    body = raw[_HEADER.size :]
    if len(body) != 24 * count:
        raise ValueError(f"field body holds {len(body)} bytes, expected {24 * count}")
    return np.frombuffer(body, dtype="<f8").reshape(count, 3).astype(float)


def write_field_csv(path, field) -> Path:
    """Sidecar CSV with columns ``x,y,value`` (shortest round-trip floats)."""
    path = Path(path)
    c = field.mesh.centers()
    v = field.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for (x, y), val in zip(c.tolist(), v.tolist()):
            w.writerow([repr(x), repr(y), repr(val)])
    return path
