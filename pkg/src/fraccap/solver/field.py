"""Cell fields and solve reports."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .mesh import Mesh


@dataclass(frozen=True, eq=False)
class Field:
    """One scalar per cell of a mesh.

    Attributes
    ----------
    mesh : Mesh
    values : ndarray, shape ``mesh.shape``
        Cell values: the PDE-part value on unknown cells and the fixed
        value elsewhere.  Used for point interpolation.
    averages : ndarray, shape ``mesh.shape``
        Cell averages ``theta u + (1 - theta) g``; these enter the energy
        and the principal-value evaluator.
    """

    mesh: Mesh
    values: np.ndarray
    averages: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(self.mesh.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.averages is None:
            m = self.mesh
            avg = np.where(m.unknown, m.theta * v + (1 - m.theta) * m.g, v)
        else:
            avg = np.asarray(self.averages, dtype=float).reshape(self.mesh.shape).copy()
        avg.setflags(write=False)
        object.__setattr__(self, "averages", avg)

    @classmethod
    def from_function(cls, mesh: Mesh, fn: Callable[[np.ndarray], np.ndarray], subsamples: int = 8) -> "Field":
        """Sample ``fn`` at cell centers and average it over each cell.

        ``fn`` maps points of shape ``(..., 2)`` to values of shape ``(...)``.
        Averages use a ``subsamples x subsamples`` midpoint rule.
        """
        c = mesh.centers()
        vals = np.asarray(fn(c), dtype=float)
        off = mesh.h * ((np.arange(subsamples) + 0.5) / subsamples - 0.5)
        ox, oy = np.meshgrid(off, off, indexing="ij")
        offs = np.column_stack([ox.ravel(), oy.ravel()])
        acc = np.zeros(len(c))
        for o in offs:
            acc += fn(c + o)
        return cls(mesh, vals.reshape(mesh.shape), (acc / len(offs)).reshape(mesh.shape))

    def with_arrays(self, values: np.ndarray, averages: np.ndarray) -> "Field":
        return Field(self.mesh, values, averages)

    def scaled(self, a: float) -> "Field":
        return Field(self.mesh, a * self.values, a * self.averages)

    def one_minus(self) -> "Field":
        """The field ``1 - u``."""
        return Field(self.mesh, 1.0 - self.values, 1.0 - self.averages)

    def interpolate(self, x) -> np.ndarray:
        """Bilinear interpolation of cell values; zero outside the box."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        m = self.mesh
        fi = (pts[:, 0] - m.origin[0]) / m.h - 0.5
        fj = (pts[:, 1] - m.origin[1]) / m.h - 0.5
        return ndimage.map_coordinates(self.values, [fi, fj], order=1, mode="constant", cval=0.0)

    def __call__(self, x) -> np.ndarray:
        return self.interpolate(x)


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of one Dirichlet solve."""

    energy: float
    pv_residual_max: float
    iterations: int
    h: float
    truncation_radius: float
    residual: float = 0.0
    unknowns: int = 0
    pv_probes: int = 0
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.energy < -1e-12 * max(1.0, abs(self.energy)):
            raise ValueError("discrete energy must be nonnegative")
        if not math.isnan(self.pv_residual_max) and self.pv_probes and self.pv_probes < 20:
            raise ValueError("the PV residual needs at least 20 probes")
