"""Plain-text ``domain2 v1`` files.

Layout::

    domain2 v1
    <vertex count>
    x y
    ...

Vertices are listed counterclockwise; coordinates are written with
``repr`` so that a round trip is exact.
"""
from __future__ import annotations

import os

import numpy as np

from .domain import Domain2

HEADER = "domain2 v1"


def write_domain(path: str | os.PathLike, d: Domain2) -> None:
    lines = [HEADER, str(len(d))]
    lines += [f"{x!r} {y!r}" for x, y in d.boundary.tolist()]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_domain(path: str | os.PathLike, name: str | None = None) -> Domain2:
    """Read a ``domain2 v1`` file.

    Raises
    ------
    ValueError
        On a wrong header, a count mismatch or malformed coordinates.
    """
    with open(path, "r", encoding="ascii") as fh:
        rows = [ln.strip() for ln in fh if ln.strip()]
    if not rows or rows[0] != HEADER:
        raise ValueError(f"{path}: expected header {HEADER!r}")
    try:
        count = int(rows[1])
        pts = np.array([[float(v) for v in r.split()] for r in rows[2:]], dtype=float)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed domain file ({exc})") from None
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) != count:
        raise ValueError(f"{path}: expected {count} vertices with two coordinates each")
    return Domain2(pts, name=name or os.path.splitext(os.path.basename(str(path)))[0])
