"""Deficits, deviations and the inequalities that connect them.

The exterior deficit is the Lipschitz seminorm ``[u]_{boundary G}`` of the
capacitary potential on the parallel surface ``G = Omega + B_R``; the
annular deficit is ``def_A(u) = max([u]_{Gamma_R^D}, [u]_{Gamma_R^Omega})``.
Both are compared with the ball deviation ``rho`` through
``rho <= C deficit^{1/(s+2)}``.

Seminorms below the discretization floor ``5 h^s`` are flagged as
censored.  On symmetric inputs (``rho`` at geometric tolerance) the
empirical constant is ``0 / 0`` and is reported as not applicable (NaN).
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .constants import BallSpec, FracParams, c_cap_constant, c_star_annular, hopf_constant_CH
from .constants import r0_half_level, torsion_profile
from .geometry.domain import AnnularDomain, Domain2, HalfspaceFrame, SurfaceSamples
from .geometry.measures import (
    exterior_parallel_surface,
    parallel_surface_annular,
    rho_deviation,
    touching_ball_radii,
)
from .geometry.planes import (
    annular_critical_value,
    containment_margin,
    critical_value,
    extremal_radii_check,
)
from .solver.field import Field
from .solver.mesh import Mesh
from .solver.solve import solve_annular, solve_exterior

#: seminorms below ``FLOOR_FACTOR * h^s`` are censored
FLOOR_FACTOR = 5.0
#: equispaced directions of the critical-value table
DIRECTIONS = 16
#: samples handled per block when forming sample pairs
_PAIR_BLOCK = 512


def deficit_floor(h: float, s: float) -> float:
    """Discretization floor ``5 h^s`` of the seminorm deficits."""
    return FLOOR_FACTOR * h**s


def record_seed(family: str, epsilon: float, s: float, h: float) -> int:
    """Seed of one sweep record.

    The first four bytes (big endian) of ``sha256`` of the text
    ``"{family}|{epsilon!r}|{s!r}|{h!r}"``.
    """
    key = f"{family}|{float(epsilon)!r}|{float(s)!r}|{float(h)!r}".encode()
    return struct.unpack(">I", hashlib.sha256(key).digest()[:4])[0]


def directions(count: int = DIRECTIONS) -> np.ndarray:
    """``count`` equispaced unit vectors starting at ``e_1``."""
    t = 2 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(t), np.sin(t)])


# -- seminorms ---------------------------------------------------------------
def _check_interface_distance(f: Field, pts: np.ndarray):
    h = f.mesh.h
    d = f.mesh.distance_to_interface(pts)
    if len(d) and d.min() < 3 * h * (1 - 1e-9):
        raise ValueError(
            f"surface samples come within {d.min() / h:.2f}h of a Dirichlet interface; "
            "need 3h (increase R or refine h)"
        )


def _pair_max(pts: np.ndarray, vals: np.ndarray) -> float:
    best = 0.0
    m = len(pts)
    for a in range(0, m, _PAIR_BLOCK):
        pa, va = pts[a : a + _PAIR_BLOCK], vals[a : a + _PAIR_BLOCK]
        dist = np.hypot(pa[:, None, 0] - pts[None, :, 0], pa[:, None, 1] - pts[None, :, 1])
        diff = np.abs(va[:, None] - vals[None, :])
        ok = dist > 0
        if np.any(ok):
            best = max(best, float((diff[ok] / dist[ok]).max()))
    return best


def lipschitz_components(f: Field, surf: SurfaceSamples) -> dict:
    """``[u]_Gamma`` of each connected component, keyed by component id.

    Values at the samples come from bilinear interpolation.

    Raises
    ------
    ValueError
        If a component has fewer than 2 samples or a sample lies within
        ``3h`` of a Dirichlet interface.
    """
    _check_interface_distance(f, surf.points)
    out = {}
    for cid in surf.components:
        pts = surf.component(cid)
        if len(pts) < 2:
            raise ValueError(f"component {cid} has {len(pts)} sample; need at least 2")
        out[cid] = _pair_max(pts, f.interpolate(pts))
    return out


def lipschitz_seminorm(f: Field, surf: SurfaceSamples) -> float:
    """Lipschitz seminorm of ``f`` on a sampled surface.

    Pairs are formed within each component only, so a field that is
    constant on every component has seminorm 0.  The result is the largest
    of the per-component values, see :func:`lipschitz_components`.
    """
    return max(lipschitz_components(f, surf).values())


def deficit_annular(f: Field, gD: SurfaceSamples, gO: SurfaceSamples) -> tuple:
    """``(def_A, alpha, beta)`` on the two parallel surfaces.

    ``alpha`` and ``beta`` are the mean values of ``u`` on ``Gamma_R^D`` and
    ``Gamma_R^Omega``, the measured levels of the two surfaces.
    """
    sd = lipschitz_seminorm(f, gD)
    so = lipschitz_seminorm(f, gO)
    alpha = float(np.mean(f.interpolate(gD.points)))
    beta = float(np.mean(f.interpolate(gO.points)))
    return max(sd, so), alpha, beta


# -- reports -----------------------------------------------------------------
@dataclass(frozen=True)
class StabilityReport:
    """Deficit, deviation and constants of one stability check.

    Attributes
    ----------
    deficit : float
        ``[u]_{boundary G}`` or ``def_A(u)``.
    deficit_components : tuple of float
        Per-component seminorms.
    alpha_beta : tuple of float
        Surface means; ``(alpha, nan)`` for the exterior problem.
    rho_values : tuple of float
        ``(rho(Omega),)`` or ``(rho(D), rho(Omega))``.
    lambda_e_table : tuple of float
        Critical values over ``DIRECTIONS`` equispaced directions.
    bound_rhs : float
        Right-hand side of the bound where the constant chain is explicit,
        NaN otherwise.
    empirical_C : float
        ``rho / deficit^{1/(s+2)}``; NaN on symmetric inputs.
    notes : str
    """

    deficit: float
    deficit_components: tuple
    alpha_beta: tuple
    rho_values: tuple
    lambda_e_table: tuple
    bound_rhs: float
    empirical_C: float
    notes: str = ""
    s: float = math.nan
    h: float = math.nan
    floor: float = math.nan
    censored: bool = False
    symmetric: bool = False
    extremal_holds: bool = True
    extremal_slack: float = math.nan
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.deficit < 0 or any(r < 0 for r in self.rho_values):
            raise ValueError("deficit and rho must be nonnegative")
        if self.empirical_C < 0:
            raise ValueError("empirical_C must be nonnegative")

    @property
    def rho(self) -> float:
        return float(sum(self.rho_values))

    def row(self) -> dict:
        """The report flattened to the ``stability v1`` CSV columns."""
        comps = list(self.deficit_components) + [math.nan] * (2 - len(self.deficit_components))
        rhos = list(self.rho_values) + [math.nan] * (2 - len(self.rho_values))
        out = {
            "deficit": self.deficit,
            "deficit_component_0": comps[0],
            "deficit_component_1": comps[1],
            "alpha": self.alpha_beta[0],
            "beta": self.alpha_beta[1],
            "rho": self.rho,
            "rho_0": rhos[0],
            "rho_1": rhos[1],
        }
        for k in range(DIRECTIONS):
            out[f"lambda_e_{k:02d}"] = self.lambda_e_table[k] if k < len(self.lambda_e_table) else math.nan
        out.update(
            bound_rhs=self.bound_rhs,
            empirical_C=self.empirical_C,
            s=self.s,
            h=self.h,
            floor=self.floor,
            censored=int(self.censored),
            symmetric=int(self.symmetric),
            extremal_holds=int(self.extremal_holds),
            extremal_slack=self.extremal_slack,
            notes=self.notes,
        )
        return out


#: column order of the ``stability v1`` CSV schema
STABILITY_COLUMNS = tuple(
    StabilityReport(0.0, (0.0,), (0.0, 0.0), (0.0,), (0.0,) * DIRECTIONS, 0.0, 0.0).row().keys()
)


class SweepRecord(NamedTuple):
    """One point of a stability sweep."""

    family_name: str
    epsilon: float
    deficit: float
    rho: float
    s: float
    h: float
    seed: int
    censored: bool = False


def _empirical_C(rho: float, deficit: float, s: float, symmetric: bool) -> float:
    if symmetric:
        return math.nan
    if deficit <= 0:
        return math.inf
    return rho / deficit ** (1.0 / (s + 2.0))


def _symmetry_tolerance(d: Domain2) -> float:
    return max(1e-4 * d.diameter, 4 * containment_margin(d))


def stability_check_exterior(
    omega: Domain2, R: float, p: FracParams, m: Mesh, solution: tuple | None = None,
    spacing: float | None = None,
) -> StabilityReport:
    """Exterior stability check on ``G = Omega + B_R``.

    Parameters
    ----------
    omega : Domain2
    R : float
        Parallel-surface distance.
    p : FracParams
    m : Mesh
        Exterior mesh of ``omega``.
    solution : (Field, SolveReport), optional
        A solve already done on ``m``; solved here otherwise.
    spacing : float, optional
        Surface sample gap, default ``h / 2``.
    """
    if not R > 0:
        raise ValueError(f"R must be positive, got {R!r}")
    field_, srep = solution if solution is not None else solve_exterior(omega, p, m)
    surf = exterior_parallel_surface(omega, R, spacing=m.h / 2 if spacing is None else spacing)
    deficit = lipschitz_seminorm(field_, surf)
    rr = rho_deviation(omega)
    tol = _symmetry_tolerance(omega)
    symmetric = rr.rho <= tol
    floor = deficit_floor(m.h, p.s)
    lam = tuple(float(critical_value(omega, e).frame.lam) for e in directions())
    ex = extremal_radii_check(omega, rr.rho)
    r_int, r_ext = touching_ball_radii(omega)
    consts = {
        "capacity": srep.energy,
        "r_int": r_int,
        "r_ext": r_ext,
        "C_cap": c_cap_constant(p, r_int, omega.diameter, r0_half_level(p)) if r_int > 0 else math.nan,
        "pv_residual_max": srep.pv_residual_max,
    }
    notes = []
    if symmetric:
        notes.append("symmetric: rho at geometric tolerance")
    if deficit < floor:
        notes.append("deficit censored at floor")
    notes.append("C_* has non-explicit factors; bound_rhs not computable")
    return StabilityReport(
        deficit=deficit, deficit_components=(deficit,),
        alpha_beta=(float(np.mean(field_.interpolate(surf.points))), math.nan),
        rho_values=(rr.rho,), lambda_e_table=lam, bound_rhs=math.nan,
        empirical_C=_empirical_C(rr.rho, deficit, p.s, symmetric), notes="; ".join(notes),
        s=p.s, h=m.h, floor=floor, censored=deficit < floor, symmetric=symmetric,
        extremal_holds=ex.holds, extremal_slack=ex.slack, constants=consts,
    )


def stability_check_annular(
    a: AnnularDomain, R: float, p: FracParams, m: Mesh, solution: tuple | None = None,
    spacing: float | None = None,
) -> StabilityReport:
    """Annular stability check with ``rho = rho(D) + rho(Omega)``.

    The table holds ``bar-lambda`` per direction.  Requires ``R < dbar/2``.
    """
    if not (0 < R < a.dbar / 2):
        raise ValueError(f"R must lie in (0, dbar/2) = (0, {a.dbar / 2:.6g}), got {R!r}")
    field_, srep = solution if solution is not None else solve_annular(a, p, m)
    gD, gO = parallel_surface_annular(a, R, spacing=m.h / 2 if spacing is None else spacing)
    sd = lipschitz_seminorm(field_, gD)
    so = lipschitz_seminorm(field_, gO)
    deficit = max(sd, so)
    alpha = float(np.mean(field_.interpolate(gD.points)))
    beta = float(np.mean(field_.interpolate(gO.points)))
    rd = rho_deviation(a.inner)
    ro = rho_deviation(a.outer)
    symmetric = rd.rho <= _symmetry_tolerance(a.inner) and ro.rho <= _symmetry_tolerance(a.outer)
    concentric = bool(np.hypot(*(rd.center - ro.center)) <= _symmetry_tolerance(a.outer))
    rho = rd.rho + ro.rho
    floor = deficit_floor(m.h, p.s)
    lam = tuple(float(annular_critical_value(a, e).frame.lam) for e in directions())
    exd = extremal_radii_check(a.inner, rd.rho)
    exo = extremal_radii_check(a.outer, ro.rho)
    r_int_d, r_ext_d = touching_ball_radii(a.inner)
    r_int_o, _ = touching_ball_radii(a.outer)
    consts = {
        "capacity": srep.energy,
        "r_ext_D": r_ext_d,
        "r_int_Omega": r_int_o,
        "C_star": c_star_annular(p, a.inner.area, r_int_d, r_ext_d, a.dbar, a.outer.diameter)
        if min(r_int_d, r_ext_d) > 0 else math.nan,
        "pv_residual_max": srep.pv_residual_max,
        "concentric": concentric,
    }
    notes = []
    if symmetric:
        notes.append("symmetric: rho at geometric tolerance")
        if not concentric:
            notes.append("balls are not concentric")
    if deficit < floor:
        notes.append("deficit censored at floor")
    notes.append("C_* has non-explicit factors; bound_rhs not computable")
    return StabilityReport(
        deficit=deficit, deficit_components=(sd, so), alpha_beta=(alpha, beta),
        rho_values=(rd.rho, ro.rho), lambda_e_table=lam, bound_rhs=math.nan,
        empirical_C=_empirical_C(rho, deficit, p.s, symmetric), notes="; ".join(notes),
        s=p.s, h=m.h, floor=floor, censored=deficit < floor, symmetric=symmetric,
        extremal_holds=exd.holds and exo.holds, extremal_slack=min(exd.slack, exo.slack),
        constants=consts,
    )


# -- Hopf and Harnack --------------------------------------------------------
class HopfCheck(NamedTuple):
    """Outcome of :func:`hopf_lower_bound_check`."""

    passed: bool
    min_slack: float
    C_H: float
    essinf_K: float
    cells: int


def hopf_lower_bound_check(f: Field, b: BallSpec, K_region: Domain2, p: FracParams,
                           scale: float = 1.0) -> HopfCheck:
    """Check ``f >= C_H psi_B`` on every cell whose center lies in ``B``.

    ``C_H`` comes from :func:`~fraccap.constants.hopf_constant_CH` with the
    essential infimum of ``f`` over the cells centred in ``K``.  ``scale``
    multiplies ``C_H`` (used for sharpness probes).

    Raises
    ------
    ValueError
        If ``K`` has no cells, ``dist(K, B) = 0``, ``essinf_K f <= 0``, or
        ``B`` meets a constrained cell (``f`` is superharmonic only on the
        unknown cells).
    """
    m = f.mesh
    c = m.centers()
    ctr = np.asarray(b.center, dtype=float)
    in_b = np.hypot(c[:, 0] - ctr[0], c[:, 1] - ctr[1]) < b.radius
    if not np.any(in_b):
        raise ValueError("ball B contains no cell centers")
    if not np.all(m.theta.ravel()[in_b] == 1.0):
        raise ValueError("ball B meets constrained cells; f is superharmonic only on unknown cells")
    in_k = K_region.contains(c)
    if not np.any(in_k):
        raise ValueError("|K| = 0 on this mesh: K contains no cell centers")
    # dist(K, B) = dist(center, K) - r, and dist(center, K) = max(sdf_K, 0)
    dist_kb = max(float(K_region.sdf(ctr[None, :])[0]), 0.0) - b.radius
    if not dist_kb > 0:
        raise ValueError(f"dist(K, B) must be positive, got {dist_kb:.6g}")
    ess = float(f.averages.ravel()[in_k].min())
    if not ess > 0:
        raise ValueError(f"essinf_K f must be positive, got {ess:.6g}")
    C_H = scale * hopf_constant_CH(p, b.radius, dist_kb, K_region.diameter, K_region.area, ess)
    psi = torsion_profile(b, p, c[in_b])
    slack = f.values.ravel()[in_b] - C_H * psi
    mn = float(slack.min())
    return HopfCheck(bool(mn >= 0), mn, C_H, ess, int(in_b.sum()))


class HarnackResult(NamedTuple):
    """Outcome of :func:`harnack_ratio_check`; ``K_emp`` is NaN when censored."""

    K_emp: float
    censored: bool
    pairs: int
    center: np.ndarray


def _harnack_center(f: Field, frame: HalfspaceFrame, radius: float) -> np.ndarray:
    # walk along the plane until the ball clears every Dirichlet interface
    # and its reflection by 3h
    m = f.mesh
    e = frame.normal
    t = np.array([-e[1], e[0]])
    base = frame.lam * e
    need = radius + 3 * m.h
    span = max(m.box[2] - m.box[0], m.box[3] - m.box[1])
    for k in np.arange(0.0, span, m.h):
        for sgn in (1.0, -1.0):
            c = base + sgn * k * t
            th = np.linspace(0, 2 * np.pi, 64)
            ring = c + radius * np.column_stack([np.cos(th), np.sin(th)])
            inside = np.all((ring > np.array(m.box[:2]) + need) & (ring < np.array(m.box[2:]) - need))
            if not inside:
                continue
            i, j = m.cell_index(c[None, :])
            # no interface within the ball and an unknown center: the whole
            # ball lies in the region where w is s-harmonic
            if m.theta[i[0], j[0]] == 1.0 and m.distance_to_interface(c[None, :])[0] >= need:
                return c
    raise ValueError("no ball of the requested radius on the plane clears the interfaces")


def harnack_ratio_check(
    f: Field, frame: HalfspaceFrame, ball_radius: float, probes: int = 32,
    center=None, seed: int = 0, noise_floor: float = 1e-5,
) -> HarnackResult:
    """Empirical boundary-Harnack constant of ``w = u o Q - u``.

    ``z`` is drawn in ``B_{R/2}^+`` and ``x`` in ``B_{R/4}(z) cap B_R^+``,
    where the ball ``B_R`` is centred on the plane (found automatically
    when ``center`` is omitted) and ``^+`` is the side ``x . e > lam``.
    Heights below ``h`` are avoided.  ``K_emp`` is the largest of the
    ratios ``(w(x)/x_1) / (w(z)/z_1)`` and their reciprocals.  If ``|w|``
    falls below ``noise_floor`` at a probe, or the sign of ``w`` changes,
    the result is censored.
    """
    m = f.mesh
    R = float(ball_radius)
    c = _harnack_center(f, frame, R) if center is None else np.asarray(center, dtype=float)
    e = frame.normal
    rng = np.random.default_rng(seed)
    h = m.h

    def sample(ctr, rad, count):
        pts = []
        while len(pts) < count:
            q = ctr + rad * (2 * rng.random(2) - 1)
            if np.hypot(*(q - ctr)) < rad and (q - c) @ e > h and np.hypot(*(q - c)) < R:
                pts.append(q)
        return np.array(pts)

    def ratio(pts):
        w = f.interpolate(frame.reflect(pts)) - f.interpolate(pts)
        return w, w / frame.height(pts)

    zs = sample(c, R / 2, probes)
    wz, rz = ratio(zs)
    if np.any(np.abs(wz) < noise_floor) or len(np.unique(np.sign(wz))) > 1:
        return HarnackResult(math.nan, True, 0, c)
    K = 1.0
    pairs = 0
    for z, r0 in zip(zs, rz):
        xs = sample(z, R / 4, 8)
        wx, rx = ratio(xs)
        if np.any(np.abs(wx) < noise_floor) or np.any(np.sign(wx) != np.sign(r0)):
            return HarnackResult(math.nan, True, pairs, c)
        q = rx / r0
        K = max(K, float(q.max()), float((1 / q).max()))
        pairs += len(xs)
    return HarnackResult(K, False, pairs, c)


# -- fits ----------------------------------------------------------------------
def exponent_fit(records: Sequence[SweepRecord], floor: float | None = None) -> tuple:
    """Least-squares fit ``log rho = slope log deficit + intercept``.

    Parameters
    ----------
    records : sequence of SweepRecord
    floor : float, optional
        Records with deficit below ``floor`` are excluded; by default each
        record's own ``5 h^s``.

    Returns
    -------
    (slope, intercept, r2)

    Raises
    ------
    ValueError
        With fewer than 4 usable records.
    """
    use = []
    for r in records:
        fl = deficit_floor(r.h, r.s) if floor is None else floor
        if r.deficit > fl and r.deficit > 0 and r.rho > 0:
            use.append(r)
    if len(use) < 4:
        raise ValueError(f"exponent fit needs at least 4 records above the floor, got {len(use)}")
    x = np.log([r.deficit for r in use])
    y = np.log([r.rho for r in use])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ np.array([slope, icpt])
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((res**2).sum()) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), float(r2)


def one_sided_constant(records: Sequence[SweepRecord], s: float | None = None) -> float:
    """Smallest ``C`` with ``rho_i <= C deficit_i^{1/(s+2)}`` for all records.

    Infinite if a record has ``rho > 0`` and zero deficit.
    """
    best = 0.0
    for r in records:
        ss = r.s if s is None else s
        if r.rho <= 0:
            continue
        if r.deficit <= 0:
            return math.inf
        best = max(best, r.rho / r.deficit ** (1.0 / (ss + 2.0)))
    return best
