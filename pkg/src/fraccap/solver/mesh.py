"""Uniform cell meshes with volume-fraction tags.

Each square cell of side ``h`` carries ``theta``, the fraction of its area
lying in the PDE region, and ``g``, the Dirichlet value (0 or 1) of the
fixed region covering the rest of the cell.  Cells with ``theta > 0`` are
unknowns; cells with ``theta = 0`` are fixed to ``g``.  Everything outside
the mesh box is fixed to 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..constants import BallSpec, FracParams, r0_half_level
from ..geometry.domain import AnnularDomain, DiskRegion, Domain2

FIXED_ZERO = 0
FIXED_ONE = 1
UNKNOWN = 2
TAG_NAMES = {FIXED_ZERO: "FixedZero", FIXED_ONE: "FixedOne", UNKNOWN: "Unknown"}

#: sub-samples per axis used to measure volume fractions of cut cells
FRACTION_SUBSAMPLES = 16


@dataclass(frozen=True)
class Constraint:
    """One side condition of the PDE region.

    The PDE region is the intersection over constraints of
    ``{x : region.contains(x) == pde_inside}``; points that violate a
    constraint take its ``fixed_value``.
    """

    region: object
    pde_inside: bool
    fixed_value: float


@dataclass(frozen=True, eq=False)
class Mesh:
    """Axis-aligned uniform cell mesh.

    Attributes
    ----------
    origin : (float, float)
        Lower-left corner of the box.
    h : float
        Cell side.
    shape : (int, int)
        Number of cells along x and y.
    theta : ndarray, shape ``shape``
        PDE-region volume fraction per cell.
    g : ndarray, shape ``shape``
        Fixed value of the non-PDE part of each cell.
    problem : str
        ``"exterior"``, ``"annular"``, ``"torsion"`` or ``"custom"``.
    truncation_radius : float
        Radius beyond which the exterior problem is truncated (``inf``
        otherwise).
    """

    origin: tuple
    h: float
    shape: tuple
    theta: np.ndarray
    g: np.ndarray
    problem: str = "custom"
    truncation_radius: float = math.inf
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.theta, self.g):
            if arr.shape != tuple(self.shape):
                raise ValueError("theta and g must match the mesh shape")
            arr.setflags(write=False)

    @property
    def nx(self) -> int:
        return int(self.shape[0])

    @property
    def ny(self) -> int:
        return int(self.shape[1])

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def box(self) -> tuple:
        """``(xmin, ymin, xmax, ymax)``."""
        x0, y0 = self.origin
        return (x0, y0, x0 + self.nx * self.h, y0 + self.ny * self.h)

    @cached_property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * (np.arange(self.nx) + 0.5)

    @cached_property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * (np.arange(self.ny) + 0.5)

    def centers(self) -> np.ndarray:
        """Cell centers in mesh (C) order, shape ``(nx * ny, 2)``."""
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def unknown(self) -> np.ndarray:
        return self.theta > 0

    @cached_property
    def interface(self) -> np.ndarray:
        """Cells cut by a constraint boundary (``0 < theta < 1``)."""
        return (self.theta > 0) & (self.theta < 1)

    @cached_property
    def tags(self) -> np.ndarray:
        t = np.where(self.g > 0.5, FIXED_ONE, FIXED_ZERO).astype(np.int8)
        t[self.unknown] = UNKNOWN
        t.setflags(write=False)
        return t

    @property
    def n_unknown(self) -> int:
        return int(np.count_nonzero(self.unknown))

    @cached_property
    def _interface_tree(self):
        """KD-tree over centers of cells next to a tag change."""
        t = self.tags
        edge = self.interface.copy()
        # a change of tag between horizontal or vertical neighbours
        dx = t[1:, :] != t[:-1, :]
        dy = t[:, 1:] != t[:, :-1]
        edge[1:, :] |= dx
        edge[:-1, :] |= dx
        edge[:, 1:] |= dy
        edge[:, :-1] |= dy
        idx = np.argwhere(edge)
        if len(idx) == 0:
            return None
        pts = np.column_stack([self.xs[idx[:, 0]], self.ys[idx[:, 1]]])
        return cKDTree(pts)

    def distance_to_interface(self, x) -> np.ndarray:
        """Distance from points to the nearest interface cell center."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        tree = self._interface_tree
        if tree is None:
            return np.full(len(pts), math.inf)
        d, _ = tree.query(pts)
        return d

    def cell_index(self, x) -> tuple:
        """Integer cell indices ``(i, j)`` containing the points."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        i = np.floor((pts[:, 0] - self.origin[0]) / self.h).astype(int)
        j = np.floor((pts[:, 1] - self.origin[1]) / self.h).astype(int)
        return i, j

    def __repr__(self):
        return (
            f"Mesh(problem={self.problem!r}, h={self.h:g}, shape={self.shape}, "
            f"unknowns={self.n_unknown})"
        )


def _grid_box(center, half_width: float, h: float):
    # box aligned so that ``center`` sits on a cell corner
    k = int(math.ceil(half_width / h - 1e-9))
    origin = (float(center[0]) - k * h, float(center[1]) - k * h)
    return origin, (2 * k, 2 * k)


def build_mesh(
    origin: Sequence[float],
    h: float,
    shape: Sequence[int],
    constraints: Sequence[Constraint],
    problem: str = "custom",
    truncation_radius: float = math.inf,
    subsamples: int = FRACTION_SUBSAMPLES,
) -> Mesh:
    """Measure volume fractions and fixed values for a set of constraints.

    Cells farther than half a diagonal from every constraint boundary are
    classified from their center; the others are sub-sampled on a
    ``subsamples x subsamples`` lattice.
    """
    if not h > 0:
        raise ValueError(f"mesh pitch must be positive, got {h!r}")
    nx, ny = int(shape[0]), int(shape[1])
    x0, y0 = float(origin[0]), float(origin[1])
    xs = x0 + h * (np.arange(nx) + 0.5)
    ys = y0 + h * (np.arange(ny) + 0.5)
    half = h * math.sqrt(0.5) * (1 + 1e-9)
    pde = np.ones((nx, ny), dtype=bool)
    cut = np.zeros((nx, ny), dtype=bool)
    g = np.zeros((nx, ny))
    decided = np.zeros((nx, ny), dtype=bool)
    for c in constraints:
        side = np.ones((nx, ny), dtype=np.int8)  # +1 pde side, -1 fixed side, 0 cut
        bb = getattr(c.region, "bbox", None)
        if isinstance(c.region, Domain2):
            # only cells near the bounding box can be inside or cut
            i0 = max(0, int(np.searchsorted(xs, bb[0] - h)))
            i1 = min(nx, int(np.searchsorted(xs, bb[2] + h)) + 1)
            j0 = max(0, int(np.searchsorted(ys, bb[1] - h)))
            j1 = min(ny, int(np.searchsorted(ys, bb[3] + h)) + 1)
            outside_val = 1 if not c.pde_inside else -1
            side[:] = outside_val
            if i1 > i0 and j1 > j0:
                X, Y = np.meshgrid(xs[i0:i1], ys[j0:j1], indexing="ij")
                sd = c.region.sdf(np.stack([X, Y], axis=-1))
                loc = np.where(sd < -half, 1, np.where(sd > half, -1, 0))
                if not c.pde_inside:
                    loc = np.where(loc == 0, 0, -loc)
                side[i0:i1, j0:j1] = loc
        else:
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            sd = c.region.sdf(np.stack([X, Y], axis=-1))
            loc = np.where(sd < -half, 1, np.where(sd > half, -1, 0))
            if not c.pde_inside:
                loc = np.where(loc == 0, 0, -loc)
            side[:] = loc
        fixed_here = (side == -1) & ~decided
        g[fixed_here] = c.fixed_value
        decided |= side == -1
        pde &= side == 1
        cut |= side == 0
    cut &= ~decided
    theta = pde.astype(float)
    idx = np.argwhere(cut)
    if len(idx):
        off = h * ((np.arange(subsamples) + 0.5) / subsamples - 0.5)
        ox, oy = np.meshgrid(off, off, indexing="ij")
        ox, oy = ox.ravel(), oy.ravel()
        P = np.stack(
            [xs[idx[:, 0]][:, None] + ox[None, :], ys[idx[:, 1]][:, None] + oy[None, :]], axis=-1
        )
        inside_all = np.ones(P.shape[:2], dtype=bool)
        votes = np.zeros((len(idx), len(constraints)))
        for k, c in enumerate(constraints):
            ok = c.region.contains(P) == c.pde_inside
            votes[:, k] = np.count_nonzero(~ok & inside_all, axis=1)
            inside_all &= ok
        theta[idx[:, 0], idx[:, 1]] = inside_all.mean(axis=1)
        vals = np.array([c.fixed_value for c in constraints])
        has = votes.sum(1) > 0
        g_cut = np.where(has, vals[np.argmax(votes, axis=1)], 0.0)
        g[idx[:, 0], idx[:, 1]] = g_cut
    return Mesh(
        origin=(x0, y0), h=float(h), shape=(nx, ny), theta=theta, g=g,
        problem=problem, truncation_radius=float(truncation_radius),
    )


def truncation_radius(omega: Domain2, p: FracParams, box_scale: float = 1.0) -> float:
    """``R_inf = box_scale * max(8 diam, 4 r0 diam)`` for the exterior problem."""
    diam = omega.diameter
    return float(box_scale * max(8 * diam, 4 * r0_half_level(p) * diam))


def _bbox_center(bb) -> np.ndarray:
    return np.array([(bb[0] + bb[2]) / 2, (bb[1] + bb[3]) / 2])


def mesh_exterior(
    omega: Domain2, p: FracParams, h: float, box_scale: float = 1.0, R_inf: float | None = None
) -> Mesh:
    """Mesh for the exterior capacitary problem of ``omega``.

    FixedOne on ``omega``, FixedZero outside the truncation disk of radius
    ``R_inf`` about the bounding-box center, unknown in between.
    """
    c = _bbox_center(omega.bbox)
    R = truncation_radius(omega, p, box_scale) if R_inf is None else float(R_inf)
    origin, shape = _grid_box(c, R, h)
    cons = [Constraint(omega, False, 1.0), Constraint(DiskRegion(c, R), True, 0.0)]
    return build_mesh(origin, h, shape, cons, problem="exterior", truncation_radius=R)


def mesh_annular(a: AnnularDomain, h: float, margin: float | None = None) -> Mesh:
    """Mesh for the annular problem: FixedOne on ``D``, FixedZero off ``Omega``."""
    bb = a.outer.bbox
    c = _bbox_center(bb)
    half = max(bb[2] - bb[0], bb[3] - bb[1]) / 2 + (2 * h if margin is None else margin)
    origin, shape = _grid_box(c, half, h)
    cons = [Constraint(a.inner, False, 1.0), Constraint(a.outer, True, 0.0)]
    return build_mesh(origin, h, shape, cons, problem="annular")


def mesh_torsion(b: BallSpec, h: float, margin: float | None = None) -> Mesh:
    """Mesh for the torsion problem in a ball, box margin ``2 r`` by default."""
    if b.dim != 2:
        raise ValueError("the cell solver is two-dimensional")
    r = b.radius
    half = r + (2 * r if margin is None else margin)
    origin, shape = _grid_box(b.center, half, h)
    cons = [Constraint(DiskRegion(b.center, r), True, 0.0)]
    return build_mesh(origin, h, shape, cons, problem="torsion")
