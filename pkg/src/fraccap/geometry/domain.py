"""Planar domains represented by a dense boundary polyline.

A :class:`Domain2` stores a closed, simple, counterclockwise polyline and
answers metric queries (signed distance, containment, area, diameter)
through ``shapely``.  Derived objects are immutable.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

#: minimum number of boundary vertices accepted by :class:`Domain2`
MIN_VERTICES = 64
#: default resolution used by the shape constructors
DEFAULT_VERTICES = 512


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 2:
        raise ValueError("points must have a trailing axis of length 2")
    return pts


def resample_closed(points: np.ndarray, n: int) -> np.ndarray:
    """Resample a closed polyline at ``n`` points equispaced in arclength."""
    closed = np.vstack([points, points[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    t = np.concatenate([[0.0], np.cumsum(seg)])
    tt = np.linspace(0.0, t[-1], n, endpoint=False)
    return np.column_stack([np.interp(tt, t, closed[:, 0]), np.interp(tt, t, closed[:, 1])])


class Domain2:
    """A bounded simply connected planar region.

    Parameters
    ----------
    boundary : array_like, shape (m, 2)
        Vertices of the boundary polyline.  A repeated closing vertex is
        dropped and clockwise input is reversed.
    name : str, optional
        Label used in reports.

    Raises
    ------
    ValueError
        If fewer than ``MIN_VERTICES`` vertices are given, the polyline
        is not simple, or the enclosed area vanishes.
    """

    def __init__(self, boundary, name: str = "domain"):
        pts = _as_points(boundary).copy()
        if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < MIN_VERTICES:
            raise ValueError(
                f"boundary needs at least {MIN_VERTICES} vertices, got {len(pts)}"
            )
        ring = LinearRing(pts)
        if not ring.is_simple:
            raise ValueError(f"boundary of {name!r} self-intersects")
        if not ring.is_ccw:
            pts = pts[::-1].copy()
        pts.setflags(write=False)
        self._pts = pts
        self.name = name
        self._poly = Polygon(pts)
        if not self._poly.area > 0:
            raise ValueError(f"domain {name!r} has zero area")
        shapely.prepare(self._poly)
        self._ring = self._poly.exterior
        shapely.prepare(self._ring)

    # -- basic data -----------------------------------------------------
    @property
    def boundary(self) -> np.ndarray:
        """Counterclockwise boundary vertices, shape (m, 2)."""
        return self._pts

    @property
    def polygon(self) -> Polygon:
        return self._poly

    @property
    def bbox(self) -> tuple:
        """``(xmin, ymin, xmax, ymax)``."""
        return tuple(float(v) for v in self._poly.bounds)

    def __len__(self):
        return len(self._pts)

    def __repr__(self):
        return f"Domain2(name={self.name!r}, vertices={len(self)}, area={self.area:.6g})"

    # -- metric queries -------------------------------------------------
    def sdf(self, x) -> np.ndarray:
        """Signed distance to the boundary polyline, negative inside."""
        pts = _as_points(x)
        flat = pts.reshape(-1, 2)
        d = shapely.distance(self._ring, shapely.points(flat))
        inside = shapely.contains_xy(self._poly, flat[:, 0], flat[:, 1])
        d = np.where(inside, -d, d)
        return d.reshape(pts.shape[:-1])

    def contains(self, x) -> np.ndarray:
        """Boolean mask of points strictly inside the domain."""
        pts = _as_points(x)
        flat = pts.reshape(-1, 2)
        return shapely.contains_xy(self._poly, flat[:, 0], flat[:, 1]).reshape(pts.shape[:-1])

    @cached_property
    def area(self) -> float:
        """Enclosed area by the shoelace formula."""
        x, y = self._pts[:, 0], self._pts[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def area_monte_carlo(self, n: int = 200_000, seed: int = 0) -> tuple:
        """Monte Carlo area with a fixed seed.

        Returns
        -------
        (area, standard_error)
        """
        rng = np.random.default_rng(seed)
        x0, y0, x1, y1 = self.bbox
        box = (x1 - x0) * (y1 - y0)
        pts = rng.uniform((x0, y0), (x1, y1), size=(n, 2))
        frac = self.contains(pts).mean()
        return box * frac, box * math.sqrt(frac * (1 - frac) / n)

    @cached_property
    def perimeter(self) -> float:
        return float(self._ring.length)

    @cached_property
    def centroid(self) -> np.ndarray:
        c = self._poly.centroid
        return np.array([c.x, c.y])

    @cached_property
    def diameter(self) -> float:
        """Largest distance between two boundary vertices (convex hull search)."""
        hull = np.asarray(self._poly.convex_hull.exterior.coords)[:-1]
        diff = hull[:, None, :] - hull[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    @cached_property
    def vertex_spacing(self) -> float:
        """Largest gap between consecutive vertices."""
        d = np.diff(np.vstack([self._pts, self._pts[:1]]), axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).max())

    @cached_property
    def turning_angles(self) -> np.ndarray:
        """Exterior turning angle at each vertex (radians, signed)."""
        p = self._pts
        a = p - np.roll(p, 1, axis=0)
        b = np.roll(p, -1, axis=0) - p
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = (a * b).sum(1)
        return np.arctan2(cross, dot)

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals at the vertices (average of adjacent edges)."""
        p = self._pts
        t = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)
        t /= np.hypot(t[:, 0], t[:, 1])[:, None]
        return np.column_stack([t[:, 1], -t[:, 0]])

    @cached_property
    def max_sagitta(self) -> float:
        """Bound on the distance between the polyline and a smooth curve
        through its vertices, ``max(edge * |turn| / 8)``."""
        d = np.diff(np.vstack([self._pts, self._pts[:1]]), axis=0)
        edge = np.hypot(d[:, 0], d[:, 1])
        turn = np.abs(self.turning_angles)
        return float(np.max(np.maximum(edge, np.roll(edge, 1)) * turn) / 8)

    def densified(self, count: int) -> np.ndarray:
        """Boundary points at ``count`` equal arclength steps."""
        return resample_closed(self._pts, int(count))

    # -- rigid motions --------------------------------------------------
    def translated(self, v) -> "Domain2":
        return Domain2(self._pts + np.asarray(v, dtype=float), name=self.name)

    def rotated(self, angle: float, origin=(0.0, 0.0)) -> "Domain2":
        c, s = math.cos(angle), math.sin(angle)
        o = np.asarray(origin, dtype=float)
        rot = np.array([[c, -s], [s, c]])
        return Domain2((self._pts - o) @ rot.T + o, name=self.name)

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_polar(
        cls,
        radius: Callable[[np.ndarray], np.ndarray],
        center=(0.0, 0.0),
        n: int = DEFAULT_VERTICES,
        name: str = "polar",
    ) -> "Domain2":
        """Star-shaped domain ``{c + r(t)(cos t, sin t)}``."""
        t = 2 * np.pi * np.arange(n) / n
        r = np.asarray(radius(t), dtype=float) * np.ones_like(t)
        if np.any(r <= 0):
            raise ValueError("polar radius must stay positive")
        c = np.asarray(center, dtype=float)
        return cls(c + np.column_stack([r * np.cos(t), r * np.sin(t)]), name=name)

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius: float = 1.0, n: int = DEFAULT_VERTICES) -> "Domain2":
        return cls.from_polar(lambda t: np.full_like(t, radius), center, n, name="disk")

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0), n: int = DEFAULT_VERTICES) -> "Domain2":
        """Axis-aligned ellipse with semiaxes ``a`` (x) and ``b`` (y)."""
        # equal arclength steps, each point placed exactly on the ellipse
        tt = np.linspace(0.0, 2 * np.pi, 64 * n + 1)
        ds = np.hypot(a * np.sin(tt), b * np.cos(tt))
        arc = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(tt))])
        t = np.interp(np.linspace(0.0, arc[-1], n, endpoint=False), arc, tt)
        c = np.asarray(center, dtype=float)
        return cls(c + np.column_stack([a * np.cos(t), b * np.sin(t)]), name="ellipse")

    @classmethod
    def rectangle(cls, width: float, height: float, center=(0.0, 0.0), n: int = DEFAULT_VERTICES) -> "Domain2":
        """Axis-aligned rectangle sampled uniformly along its perimeter."""
        w, h = width / 2, height / 2
        c = np.asarray(center, dtype=float)
        corners = np.array([[-w, -h], [w, -h], [w, h], [-w, h]]) + c
        # exact corners are kept by placing vertices on a perimeter grid
        per = 2 * (width + height)
        pts = []
        for i in range(4):
            a, b = corners[i], corners[(i + 1) % 4]
            L = np.hypot(*(b - a))
            k = max(1, int(round(n * L / per)))
            tt = np.arange(k) / k
            pts.append(a + tt[:, None] * (b - a))
        return cls(np.vstack(pts), name="rectangle")

    @classmethod
    def from_shapely(cls, poly: Polygon, n: int = DEFAULT_VERTICES, name: str = "domain") -> "Domain2":
        """Domain from a shapely polygon without holes, resampled to ``n`` points."""
        if poly.geom_type != "Polygon":
            raise ValueError(f"expected a single polygon, got {poly.geom_type}")
        if len(poly.interiors) > 0:
            raise ValueError("polygon has holes")
        pts = np.asarray(poly.exterior.coords)[:-1]
        return cls(resample_closed(pts, n), name=name)


class DiskRegion:
    """Exact disk used for truncation and ball constraints.

    Offers the same ``sdf`` and ``contains`` interface as :class:`Domain2`.
    """

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def sdf(self, x) -> np.ndarray:
        pts = _as_points(x)
        return np.hypot(pts[..., 0] - self.center[0], pts[..., 1] - self.center[1]) - self.radius

    def contains(self, x) -> np.ndarray:
        return self.sdf(x) < 0

    @property
    def bbox(self) -> tuple:
        c, r = self.center, self.radius
        return (c[0] - r, c[1] - r, c[0] + r, c[1] + r)


@dataclass(frozen=True)
class AnnularDomain:
    """Annulus ``A = Omega \\ closure(D)``.

    Parameters
    ----------
    inner : Domain2
        The hole ``D``.
    outer : Domain2
        The outer set ``Omega``.

    The gap ``dbar = dist(D, R^2 \\ Omega)`` is computed on construction.
    """

    inner: Domain2
    outer: Domain2
    dbar: float = field(init=False)

    def __post_init__(self):
        probe = self.inner.densified(max(4 * len(self.inner), 2048))
        if not np.all(self.outer.sdf(probe) < 0):
            raise ValueError("inner domain is not compactly contained in the outer domain")
        if np.any(self.inner.contains(self.outer.boundary)):
            raise ValueError("outer boundary enters the inner domain")
        dbar = float(shapely.distance(self.inner.polygon, self.outer.polygon.exterior))
        if not dbar > 0:
            raise ValueError("inner and outer boundaries touch")
        object.__setattr__(self, "dbar", dbar)

    @property
    def area(self) -> float:
        return self.outer.area - self.inner.area


@dataclass(frozen=True)
class HalfspaceFrame:
    """Moving-planes frame: direction ``e``, plane offset ``lam``, and
    ``Lambda_e = sup_E x . e``.

    The plane is ``T = {x . e = lam}``; ``H = {x . e > lam}`` is the
    positive half space.
    """

    e: tuple
    lam: float
    Lambda_e: float

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        norm = float(np.hypot(*e))
        if not norm > 0:
            raise ValueError("direction must be nonzero")
        if abs(norm - 1.0) > 1e-9:
            e = e / norm
        object.__setattr__(self, "e", (float(e[0]), float(e[1])))
        if self.lam > self.Lambda_e + 1e-12 * max(1.0, abs(self.Lambda_e)):
            raise ValueError("lambda must not exceed Lambda_e")

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.e)

    def height(self, x) -> np.ndarray:
        """Signed distance ``x . e - lam`` to the plane."""
        pts = _as_points(x)
        return pts @ self.normal - self.lam

    def reflect(self, x) -> np.ndarray:
        """Reflection ``x - 2 (x . e - lam) e`` across the plane."""
        pts = _as_points(x)
        return pts - 2.0 * self.height(pts)[..., None] * self.normal


@dataclass(frozen=True)
class SurfaceSamples:
    """Ordered samples of a closed curve, possibly with several components.

    Attributes
    ----------
    points : ndarray, shape (m, 2)
    component_id : ndarray of int, shape (m,)
    spacing : float
        Largest gap between consecutive samples of one component.
    """

    points: np.ndarray
    component_id: np.ndarray
    spacing: float

    @property
    def components(self) -> list:
        return [int(c) for c in np.unique(self.component_id)]

    def component(self, cid: int) -> np.ndarray:
        return self.points[self.component_id == cid]

    @classmethod
    def from_curves(cls, curves, ids: Optional[list] = None) -> "SurfaceSamples":
        ids = list(range(len(curves))) if ids is None else ids
        pts, cid, gaps = [], [], []
        for c, k in zip(curves, ids):
            c = np.asarray(c, dtype=float)
            pts.append(c)
            cid.append(np.full(len(c), k, dtype=int))
            d = np.diff(np.vstack([c, c[:1]]), axis=0)
            gaps.append(np.hypot(d[:, 0], d[:, 1]).max())
        return cls(np.vstack(pts), np.concatenate(cid), float(max(gaps)))


def warn_degenerate(msg: str):
    warnings.warn(msg, RuntimeWarning, stacklevel=3)
