"""Moving-planes apparatus: critical values, reflections, case detection,
reflection defects and slab measures."""
from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np
from shapely import affinity
from shapely.geometry import Polygon

from .domain import AnnularDomain, Domain2, HalfspaceFrame

#: boundary samples used by the containment test of reflected caps
CONTAINMENT_SAMPLES = 10_000
#: scan step and bisection tolerance, as fractions of the diameter
SCAN_FRACTION = 1.0 / 200
BISECTION_FRACTION = 1e-6
#: minimum angular tolerance of the orthogonality test (radians)
ANGULAR_TOL = 1e-3


class CriticalCase(enum.Enum):
    """Which of the two stopping configurations is observed."""

    InternalTangency = "InternalTangency"
    Orthogonality = "Orthogonality"

    def __str__(self):
        return self.value


class CriticalResult(NamedTuple):
    frame: HalfspaceFrame
    case: CriticalCase


class CaseFlags(NamedTuple):
    """Both critical conditions as detected at a given plane."""

    tangency: bool
    orthogonality: bool
    tangency_gap: float
    min_normal_cosine: float


def _unit(e) -> np.ndarray:
    v = np.asarray(e, dtype=float)
    n = float(np.hypot(*v))
    if not n > 0:
        raise ValueError("direction must be nonzero")
    return v / n


def reflect(frame: HalfspaceFrame, x) -> np.ndarray:
    """Reflect points across ``T = {x . e = lam}``."""
    return frame.reflect(x)


def containment_margin(d: Domain2) -> float:
    """Slack allowed when testing ``Q(E_lam) in E`` on the polyline."""
    return max(BISECTION_FRACTION * d.diameter, 2.0 * d.max_sagitta)


class _CapTester:
    """Vectorised test of ``Q(E_lam) subset E`` through boundary samples."""

    def __init__(self, d: Domain2, e: np.ndarray, samples: int = CONTAINMENT_SAMPLES):
        self.d = d
        self.e = e
        self.pts = d.densified(max(samples, len(d)))
        self.height = self.pts @ e
        self.margin = containment_margin(d)

    def excess(self, lam: float) -> float:
        """Largest sdf of a reflected cap point (<= margin means contained)."""
        sel = self.height > lam
        if not np.any(sel):
            return -math.inf
        p = self.pts[sel]
        q = p - 2.0 * (self.height[sel] - lam)[:, None] * self.e
        return float(self.d.sdf(q).max())

    def holds(self, lam: float) -> bool:
        return self.excess(lam) <= self.margin


def critical_value(d: Domain2, e) -> CriticalResult:
    """Critical value ``lambda_e`` of the moving plane in direction ``e``.

    The plane starts at ``Lambda_e = max x . e`` and is lowered in steps of
    ``diam / 200`` until the reflected cap leaves ``E``; the crossing is
    then bisected to ``1e-6 diam``.  Containment uses densified boundary
    samples with slack :func:`containment_margin`.

    Returns
    -------
    CriticalResult
        ``(frame, case)``; ``case`` is :attr:`CriticalCase.InternalTangency`
        when tangency is detected (including ties), otherwise
        :attr:`CriticalCase.Orthogonality`.
    """
    ev = _unit(e)
    tester = _CapTester(d, ev)
    Lam = float((d.boundary @ ev).max())
    lo_all = float((d.boundary @ ev).min())
    step = SCAN_FRACTION * d.diameter
    hi = Lam
    lam = Lam - step
    lo = None
    while lam > lo_all:
        if not tester.holds(lam):
            lo = lam
            break
        hi = lam
        lam -= step
    if lo is None:
        lo = lo_all
    tol = BISECTION_FRACTION * d.diameter
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tester.holds(mid):
            hi = mid
        else:
            lo = mid
    frame = HalfspaceFrame(tuple(ev), hi, Lam)
    flags = classify_critical(d, frame)
    case = CriticalCase.InternalTangency if flags.tangency else CriticalCase.Orthogonality
    return CriticalResult(frame, case)


def classify_critical(d: Domain2, frame: HalfspaceFrame) -> CaseFlags:
    """Detect tangency and orthogonality at the plane of ``frame``.

    Tangency: some reflected cap sample at height at least ``diam / 50``
    above the plane lies within ``4 x margin`` of the boundary.
    Orthogonality: the polyline crosses the plane at a point whose normal
    satisfies ``|nu . e| < max(1e-3, local turning angle)``.
    """
    ev = frame.normal
    tester = _CapTester(d, ev)
    margin = tester.margin
    away = tester.height - frame.lam >= d.diameter / 50
    if np.any(away):
        p = tester.pts[away]
        q = p - 2.0 * (tester.height[away] - frame.lam)[:, None] * ev
        gap = float(np.abs(d.sdf(q)).min())
    else:
        gap = math.inf
    tangency = gap <= 4 * margin
    # crossings of the polyline with the plane
    b = d.boundary
    hgt = b @ ev - frame.lam
    nxt = np.roll(hgt, -1)
    cross = np.nonzero((hgt <= 0) & (nxt > 0) | (hgt > 0) & (nxt <= 0))[0]
    cosines = []
    turn = np.abs(d.turning_angles)
    for i in cross:
        j = (i + 1) % len(b)
        t = hgt[i] / (hgt[i] - hgt[j])
        nu = (1 - t) * d.normals[i] + t * d.normals[j]
        nu /= np.hypot(*nu)
        tol_i = max(ANGULAR_TOL, turn[i], turn[j])
        cosines.append((abs(float(nu @ ev)), tol_i))
    if cosines:
        min_cos = min(c for c, _ in cosines)
        ortho = any(c < tol for c, tol in cosines)
    else:
        min_cos, ortho = math.inf, False
    return CaseFlags(bool(tangency), bool(ortho), gap, min_cos)


def critical_scan(d: Domain2, e, step: float, predicate=None) -> float:
    """Reference critical value from a plain downward scan with ``step``.

    Returns the last ``lam`` in the scan for which all larger scanned
    values passed ``predicate`` (by default the same containment test as
    :func:`critical_value`).
    """
    ev = _unit(e)
    if predicate is None:
        predicate = _CapTester(d, ev).holds
    Lam = float((d.boundary @ ev).max())
    lo_all = float((d.boundary @ ev).min())
    lam = Lam
    last = Lam
    while lam > lo_all:
        lam -= step
        if not predicate(lam):
            return last
        last = lam
    return last


def _halfplane(frame: HalfspaceFrame, positive: bool, size: float) -> Polygon:
    e = frame.normal
    t = np.array([-e[1], e[0]])
    o = frame.lam * e
    sgn = 1.0 if positive else -1.0
    corners = [o - size * t, o + size * t, o + size * t + sgn * size * e, o - size * t + sgn * size * e]
    return Polygon(corners)


def _reflect_geom(geom, frame: HalfspaceFrame):
    e = frame.normal
    # matrix of x -> x - 2 (x.e - lam) e
    a = 1 - 2 * e[0] ** 2
    b = -2 * e[0] * e[1]
    dd = 1 - 2 * e[1] ** 2
    xoff, yoff = 2 * frame.lam * e[0], 2 * frame.lam * e[1]
    return affinity.affine_transform(geom, [a, b, b, dd, xoff, yoff])


def reflection_defect_exact(d: Domain2, frame: HalfspaceFrame) -> float:
    """Polygon-boolean area of ``(E cap H^-) minus Q(E cap H^+)``."""
    size = 4 * d.diameter + 4 * abs(frame.lam) + 4 * float(np.abs(d.boundary).max())
    minus = d.polygon.intersection(_halfplane(frame, False, size))
    plus = d.polygon.intersection(_halfplane(frame, True, size))
    return float(minus.difference(_reflect_geom(plus, frame)).area)


class DefectResult(NamedTuple):
    area: float
    error_bound: float


def reflection_defect(
    d: Domain2, frame: HalfspaceFrame, resolution: int = 200, refine: int = 8
) -> DefectResult:
    """Area of ``(E cap H^-) minus Q(E cap H^+)`` by grid integration.

    The bounding box is covered by ``resolution`` cells per side and the
    indicator is evaluated at cell centers.  Cells whose center lies
    within half a cell diagonal of one of the three interfaces (the
    boundary, the plane, the reflected boundary) are subdivided
    ``refine x refine`` times and evaluated again; subcells that remain
    ambiguous at their own scale contribute half their area to the
    estimate and half to the error bound.

    Returns
    -------
    DefectResult
        ``(area, error_bound)``.
    """
    x0, y0, x1, y1 = d.bbox
    hcell = max(x1 - x0, y1 - y0) / resolution
    nx = int(math.ceil((x1 - x0) / hcell)) + 2
    ny = int(math.ceil((y1 - y0) / hcell)) + 2
    xs = x0 - hcell + hcell * (np.arange(nx) + 0.5)
    ys = y0 - hcell + hcell * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])

    def classify(pts, half):
        s_in = d.sdf(pts)
        hgt = frame.height(pts)
        s_ref = d.sdf(frame.reflect(pts))
        hit = (s_in < 0) & (hgt < 0) & (s_ref > 0)
        amb = (np.abs(s_in) < half) | (np.abs(hgt) < half) | (np.abs(s_ref) < half)
        # ambiguous points that cannot be in the set for any nearby position
        amb &= (s_in < half) & (hgt < half) & (s_ref > -half)
        return hit, amb

    hit, amb = classify(P, hcell * math.sqrt(0.5))
    area = hcell * hcell * np.count_nonzero(hit & ~amb)
    err = 0.0
    if np.any(amb):
        hs = hcell / refine
        off = hs * (np.arange(refine) + 0.5) - hcell / 2
        ox, oy = np.meshgrid(off, off, indexing="ij")
        sub = (P[amb][:, None, :] + np.column_stack([ox.ravel(), oy.ravel()])[None, :, :]).reshape(-1, 2)
        shit, samb = classify(sub, hs * math.sqrt(0.5))
        area += hs * hs * (np.count_nonzero(shit & ~samb) + 0.5 * np.count_nonzero(samb))
        err = 0.5 * hs * hs * np.count_nonzero(samb)
    return DefectResult(float(area), float(err))


def slab_measures(d: Domain2, frame: HalfspaceFrame) -> list:
    """Measures ``m_k = |{x in E : (2k-1) lam <= x . e <= (2k+1) lam}|``.

    The plane offset ``lam`` of ``frame`` is used as ``lambda_e``.  Slabs
    are generated for ``k = 1, 2, ...`` until they leave the domain's
    extent along ``e``; an empty list is returned when ``lam = 0``.  For
    ``lam < 0`` the slabs lie on the negative side.
    """
    lam = frame.lam
    if lam == 0:
        return []
    e = frame.normal
    heights = d.boundary @ e
    size = 4 * (d.diameter + float(np.abs(d.boundary).max()) + abs(lam))
    t = np.array([-e[1], e[0]])
    out = []
    k = 1
    a = abs(lam)
    sgn = 1.0 if lam > 0 else -1.0
    extent = heights.max() if lam > 0 else -heights.min()
    while (2 * k - 1) * a <= extent:
        lo, hi = (2 * k - 1) * a, (2 * k + 1) * a
        oa, ob = sgn * lo * e, sgn * hi * e
        strip = Polygon([oa - size * t, oa + size * t, ob + size * t, ob - size * t])
        out.append(float(d.polygon.intersection(strip).area))
        k += 1
    return out


def _normal_condition_value(d: Domain2, ev: np.ndarray) -> float:
    # sup of x . e over boundary points whose outward normal has nu . e <= 0
    nu_e = d.normals @ ev
    bad = nu_e <= 0
    if not np.any(bad):
        return -math.inf
    return float((d.boundary[bad] @ ev).max())


class AnnularCritical(NamedTuple):
    frame: HalfspaceFrame
    cases: tuple
    lambda_D: float
    lambda_Omega: float


def set_critical_value(d: Domain2, e) -> tuple:
    """Critical value ``bar-lambda_E`` including the normal condition.

    Returns ``(value, case)`` where ``value`` is the larger of the
    reflected-cap critical value and the highest plane position at which
    the outward normal on ``T cap boundary`` fails ``nu . e > 0``.
    """
    ev = _unit(e)
    res = critical_value(d, ev)
    lam_n = _normal_condition_value(d, ev)
    return max(res.frame.lam, lam_n), res.case


def annular_critical_value(a: AnnularDomain, e) -> AnnularCritical:
    """Critical value ``bar-lambda = max(bar-lambda_D, bar-lambda_Omega)``.

    Returns
    -------
    AnnularCritical
        ``(frame, (case_D, case_Omega), lambda_D, lambda_Omega)``; the frame's
        ``Lambda_e`` is that of the outer set.
    """
    ev = _unit(e)
    lam_d, case_d = set_critical_value(a.inner, ev)
    lam_o, case_o = set_critical_value(a.outer, ev)
    Lam = float((a.outer.boundary @ ev).max())
    frame = HalfspaceFrame(tuple(ev), max(lam_d, lam_o), Lam)
    return AnnularCritical(frame, (case_d, case_o), lam_d, lam_o)


class ExtremalRadiiCheck(NamedTuple):
    """Ingredients of the bound ``rho <= rho_max - rho_min <= 2 |lambda_e|``."""

    origin: np.ndarray
    direction: np.ndarray
    rho: float
    rho_max: float
    rho_min: float
    lambda_e: float
    holds: bool
    slack: float


def extremal_radii_check(d: Domain2, rho: float, tol: float | None = None) -> ExtremalRadiiCheck:
    """Evaluate ``rho <= rho_max - rho_min <= 2 |lambda_e|``.

    The origin is moved to the intersection of the critical lines for
    ``e_1`` and ``e_2``; ``x`` and ``y`` are the nearest and farthest
    boundary vertices from it, and ``lambda_e`` is the critical value in
    direction ``e = (x - y)/|x - y|`` measured from the new origin.

    Parameters
    ----------
    d : Domain2
    rho : float
        Ball deviation of ``d`` (from :func:`~fraccap.geometry.rho_deviation`).
    tol : float, optional
        Geometric tolerance, default ``2 x containment_margin(d)``.
    """
    tol = 2 * containment_margin(d) if tol is None else tol
    l1 = critical_value(d, (1.0, 0.0)).frame.lam
    l2 = critical_value(d, (0.0, 1.0)).frame.lam
    o = np.array([l1, l2])
    r = np.hypot(*(d.boundary - o).T)
    x = d.boundary[np.argmin(r)]
    y = d.boundary[np.argmax(r)]
    rmin, rmax = float(r.min()), float(r.max())
    if rmax - rmin <= tol:
        return ExtremalRadiiCheck(o, np.array([1.0, 0.0]), rho, rmax, rmin, 0.0, bool(rho <= tol), tol - rho)
    ev = (x - y) / np.hypot(*(x - y))
    lam = critical_value(d, ev).frame.lam - float(o @ ev)
    bound = 2 * abs(lam)
    slack = bound - max(rho, rmax - rmin) + tol
    holds = rho <= rmax - rmin + tol and rmax - rmin <= bound + tol
    return ExtremalRadiiCheck(o, ev, rho, rmax, rmin, lam, bool(holds), float(slack))
