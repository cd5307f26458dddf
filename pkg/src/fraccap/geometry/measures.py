"""Metric quantities of planar domains: offsets, parallel surfaces, ball
deviation and touching-ball radii."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
import shapely
from scipy import optimize

from .domain import AnnularDomain, Domain2, SurfaceSamples, resample_closed, warn_degenerate

#: circle segments per quarter turn used for shapely buffers
BUFFER_QUAD_SEGS = 64


def _project_to_offset(points: np.ndarray, base: Domain2, R: float) -> np.ndarray:
    # move each point along its nearest-point segment so that its distance
    # to the base boundary is exactly R; this keeps discrete curvature
    # faithful where chord resampling would not
    lines = shapely.shortest_line(base.polygon.exterior, shapely.points(points))
    coords = shapely.get_coordinates(lines).reshape(-1, 2, 2)
    q, p = coords[:, 0, :], coords[:, 1, :]
    d = np.hypot(*(p - q).T)
    ok = d > 1e-12 * max(1.0, R)
    out = points.copy()
    out[ok] = q[ok] + R * (p[ok] - q[ok]) / d[ok, None]
    return out


def _offset_samples(geom, base: Domain2, R: float, count: int) -> np.ndarray:
    pts = np.asarray(geom.exterior.coords)[:-1]
    return _project_to_offset(resample_closed(pts, count), base, R)


def _single_polygon(geom, what: str):
    if geom.is_empty:
        raise ValueError(f"{what}: offset is empty")
    if geom.geom_type != "Polygon":
        raise ValueError(f"{what}: offset splits into {len(geom.geoms)} components")
    if len(geom.interiors) > 0:
        raise ValueError(f"{what}: offset encloses {len(geom.interiors)} cavities")
    return geom


def minkowski_sum_disk(d: Domain2, R: float, n: int | None = None) -> Domain2:
    """Minkowski sum ``d + B_R``.

    Parameters
    ----------
    d : Domain2
    R : float
        Offset radius, positive.
    n : int, optional
        Vertex count of the result.  Defaults to the input count scaled by
        the perimeter ratio, so the vertex spacing is preserved.

    Raises
    ------
    ValueError
        If ``R <= 0`` or the offset boundary closes a cavity (the sum of a
        simply connected set with a disk can acquire holes).
    """
    if not R > 0:
        raise ValueError(f"offset radius must be positive, got {R!r}")
    geom = _single_polygon(d.polygon.buffer(R, quad_segs=BUFFER_QUAD_SEGS), "minkowski_sum_disk")
    if n is None:
        n = int(math.ceil(len(d) * geom.exterior.length / d.perimeter))
    return Domain2(_offset_samples(geom, d, R, n), name=f"{d.name}+B({R:g})")


def inner_parallel_domain(d: Domain2, R: float, n: int | None = None) -> Domain2:
    """The set ``{x in d : dist(x, boundary) > R}`` as a Domain2."""
    if not R > 0:
        raise ValueError(f"offset radius must be positive, got {R!r}")
    geom = _single_polygon(d.polygon.buffer(-R, quad_segs=BUFFER_QUAD_SEGS), "inner offset")
    if n is None:
        n = max(64, int(math.ceil(len(d) * geom.exterior.length / d.perimeter)))
    return Domain2(_offset_samples(geom, d, R, n), name=f"{d.name}-B({R:g})")


def _curve_samples(poly, base: Domain2, R: float, spacing: float) -> np.ndarray:
    count = max(64, int(math.ceil(poly.exterior.length / spacing)))
    return _offset_samples(poly, base, R, count)


def parallel_surface_annular(a: AnnularDomain, R: float, spacing: float | None = None):
    """Parallel surfaces ``Gamma_R^D`` and ``Gamma_R^Omega`` of an annulus.

    Parameters
    ----------
    a : AnnularDomain
    R : float
        Distance to the boundary, ``0 < R < a.dbar / 2``.
    spacing : float, optional
        Target gap between consecutive samples.  Defaults to the smaller
        vertex spacing of the two boundaries.

    Returns
    -------
    (SurfaceSamples, SurfaceSamples)
        Samples of ``{dist(x, D) = R}`` (component 0) and
        ``{dist(x, R^2 \\ Omega) = R}`` (component 1).
    """
    if not (0 < R < a.dbar / 2):
        raise ValueError(f"parallel surface needs 0 < R < dbar/2 = {a.dbar / 2:.6g}, got {R!r}")
    if spacing is None:
        spacing = min(a.inner.vertex_spacing, a.outer.vertex_spacing)
    gd = _single_polygon(a.inner.polygon.buffer(R, quad_segs=BUFFER_QUAD_SEGS), "Gamma_R^D")
    go = _single_polygon(a.outer.polygon.buffer(-R, quad_segs=BUFFER_QUAD_SEGS), "Gamma_R^Omega")
    sd = SurfaceSamples.from_curves([_curve_samples(gd, a.inner, R, spacing)], ids=[0])
    so = SurfaceSamples.from_curves([_curve_samples(go, a.outer, R, spacing)], ids=[1])
    return sd, so


def exterior_parallel_surface(d: Domain2, R: float, spacing: float | None = None) -> SurfaceSamples:
    """Samples of ``boundary(d + B_R)``."""
    if spacing is None:
        spacing = d.vertex_spacing
    g = _single_polygon(d.polygon.buffer(R, quad_segs=BUFFER_QUAD_SEGS), "boundary(G)")
    return SurfaceSamples.from_curves([_curve_samples(g, d, R, spacing)], ids=[0])


class RhoResult(NamedTuple):
    rho: float
    center: np.ndarray
    r_in: float
    r_out: float


def _radii(d: Domain2, centers: np.ndarray):
    b = d.boundary
    c = np.atleast_2d(centers)
    r_out = np.sqrt(((c[:, None, :] - b[None, :, :]) ** 2).sum(-1)).max(1)
    r_in = -d.sdf(c)
    return r_out, r_in


def rho_deviation(d: Domain2, grid: int = 100, restarts: int = 4) -> RhoResult:
    """Ball deviation ``rho = min_p (r_out(p) - r_in(p))``.

    ``r_out(p)`` is the largest distance from ``p`` to a boundary vertex
    and ``r_in(p) = -sdf(p)``.  The bounding box is scanned with step
    ``bbox / grid``; the best ``restarts`` grid centers are refined with
    Nelder-Mead.  Ties are broken by the smaller ``r_out``.

    Returns
    -------
    RhoResult
        ``(rho, center, r_in, r_out)`` with ``B_{r_in}(center)`` inside and
        ``B_{r_out}(center)`` containing the domain.
    """
    x0, y0, x1, y1 = d.bbox
    xs = np.linspace(x0, x1, grid + 1)
    ys = np.linspace(y0, y1, grid + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    cand = np.column_stack([X.ravel(), Y.ravel()])
    cand = cand[d.contains(cand)]
    if len(cand) == 0:
        cand = d.centroid[None, :]
    r_out, r_in = _radii(d, cand)
    val = r_out - r_in
    order = np.lexsort((r_out, val))[:restarts]
    scale = max(x1 - x0, y1 - y0)

    def objective(p):
        ro, ri = _radii(d, p[None, :])
        if ri[0] <= 0:
            return float(ro[0] - ri[0] + 10 * scale)
        return float(ro[0] - ri[0])

    best = None
    for idx in order:
        res = optimize.minimize(
            objective, cand[idx], method="Nelder-Mead",
            options={"xatol": 1e-10 * scale, "fatol": 1e-12 * scale, "maxiter": 4000},
        )
        ro, ri = _radii(d, res.x[None, :])
        key = (round(float(ro[0] - ri[0]), 12), float(ro[0]))
        if best is None or key < best[0]:
            best = (key, res.x.copy(), float(ri[0]), float(ro[0]))
    _, center, ri, ro = best
    return RhoResult(max(ro - ri, 0.0), center, ri, ro)


def _probe_tolerance(d: Domain2) -> float:
    return 2.0 * d.max_sagitta + 1e-9 * d.diameter


def _tangent_radius(d: Domain2, sign: float, r_cap: float, iters: int = 60) -> np.ndarray:
    # per-vertex largest r with the ball B_r(v + sign r n) on the required side
    v, nrm = d.boundary, d.normals
    tol = _probe_tolerance(d)

    def fits(r):
        c = v + sign * r[:, None] * nrm
        return sign * d.sdf(c) >= r - tol

    hi = np.full(len(v), r_cap)
    lo = np.where(fits(hi), r_cap, 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = fits(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def touching_ball_radii(d: Domain2) -> tuple:
    """Uniform interior and exterior touching-ball radii.

    Each vertex is probed along its normal: the largest ``r`` such that
    the tangent ball of radius ``r`` stays inside (resp. outside) the
    domain up to the polyline tolerance is found by bisection, and the
    minimum over vertices is returned.  The exterior radius is capped at
    the bounding-box diagonal.  A radius below ``10`` probe tolerances is
    treated as a corner or cusp: a ``RuntimeWarning`` is issued and 0
    returned for that side.

    Returns
    -------
    (r_int, r_ext)
    """
    x0, y0, x1, y1 = d.bbox
    cap = math.hypot(x1 - x0, y1 - y0)
    tol = _probe_tolerance(d)
    out = []
    for sign, label in ((-1.0, "interior"), (1.0, "exterior")):
        r = float(_tangent_radius(d, sign, cap).min())
        if r < 10 * tol:
            warn_degenerate(f"{label} touching-ball radius of {d.name!r} is degenerate (corner or cusp)")
            r = 0.0
        out.append(r)
    return tuple(out)
