"""Dirichlet solves for the exterior, annular and torsion problems."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from ..constants import BallSpec, FracParams
from ..geometry.domain import AnnularDomain, Domain2
from .field import Field, SolveReport
from .form import GagliardoForm
from .mesh import Mesh

#: relative residual of the conjugate-gradient solve
CG_RTOL = 1e-10
#: principal-value probes per solve
PV_PROBES = 24
#: exterior solves above this order decay slowly; see ``solve_exterior``
SLOW_DECAY_S = 0.75


class SolverError(RuntimeError):
    """The linear solve did not converge.

    Attributes
    ----------
    condition_estimate : float
        Ratio of the extreme eigenvalues of the Jacobi-scaled operator,
        from a few Lanczos steps.
    """

    def __init__(self, msg: str, condition_estimate: float):
        super().__init__(f"{msg} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


def assemble_gagliardo_form(m: Mesh, p: FracParams) -> GagliardoForm:
    """The Gagliardo form on ``m``; call ``to_dense()`` for the matrix."""
    return GagliardoForm(m, p)


def _condition_estimate(op, diag, n: int, steps: int = 30, seed: int = 0) -> float:
    from scipy.sparse.linalg import eigsh

    dinv = 1.0 / np.sqrt(diag)
    sym = LinearOperator((n, n), matvec=lambda v: dinv * op.matvec(dinv * v), dtype=float)
    if n < 3:
        return 1.0
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    k = min(steps, n - 1)
    hi = eigsh(sym, k=1, which="LA", v0=v0, maxiter=k * 10, tol=1e-3, return_eigenvectors=False)[0]
    lo = eigsh(sym, k=1, which="SA", v0=v0, maxiter=k * 10, tol=1e-3, return_eigenvectors=False)[0]
    return float(hi / max(lo, 1e-300))


def solve_field(m: Mesh, p: FracParams, f: float | np.ndarray = 0.0, rtol: float = CG_RTOL,
                maxiter: int | None = None, x0: np.ndarray | None = None):
    """Minimize the discrete energy subject to the mesh constraints.

    Parameters
    ----------
    m : Mesh
    p : FracParams
    f : float or ndarray
        Source term; the torsion problem uses 1.
    rtol : float
        Relative residual of the Jacobi-preconditioned CG solve.

    Returns
    -------
    (Field, int, float)
        The field, the CG iteration count and the final relative residual.

    Raises
    ------
    SolverError
        On non-convergence, with a condition estimate.
    """
    form = GagliardoForm(m, p)
    op, rhs, diag = form.reduced_system(f)
    n = op.shape[0]
    if n == 0:
        values = m.g.astype(float)
        return Field(m, values, values), 0, 0.0
    pc = LinearOperator((n, n), matvec=lambda v: v / diag, dtype=float)
    it = [0]

    def cb(_):
        it[0] += 1

    if maxiter is None:
        maxiter = max(1000, 20 * int(math.sqrt(n)))
    guess = x0 if x0 is not None else m.g[m.unknown].astype(float)
    u, info = cg(op, rhs, x0=guess, rtol=rtol, atol=0.0, maxiter=maxiter, M=pc, callback=cb)
    bnorm = float(np.linalg.norm(rhs)) or 1.0
    res = float(np.linalg.norm(rhs - op.matvec(u)) / bnorm)
    if info != 0 or not np.all(np.isfinite(u)):
        raise SolverError(f"CG stopped after {it[0]} iterations at residual {res:.3e}",
                          _condition_estimate(op, diag, n))
    values = m.g.astype(float).copy()
    values[m.unknown] = u
    return Field(m, values, form.cell_averages(u)), it[0], res


def probe_points(m: Mesh, count: int = PV_PROBES, region=None, seed: int = 0) -> np.ndarray:
    """Cell centers usable as principal-value probes.

    Candidates are fully unknown cells at least ``3h`` from every
    interface, optionally restricted to ``region = (center, radius)``.
    ``count`` of them are drawn with a fixed seed.
    """
    c = m.centers()
    ok = (m.theta.ravel() == 1.0)
    if region is not None:
        ctr, rad = region
        ok &= np.hypot(c[:, 0] - ctr[0], c[:, 1] - ctr[1]) <= rad
    cand = c[ok]
    if len(cand):
        cand = cand[m.distance_to_interface(cand) >= 3 * m.h * (1 + 1e-9)]
    if len(cand) <= count:
        return cand
    rng = np.random.default_rng(seed)
    return cand[np.sort(rng.choice(len(cand), size=count, replace=False))]


def _finish(field: Field, p: FracParams, m: Mesh, iters: int, res: float, target: float,
            region, notes: str = "") -> SolveReport:
    from .pv import frac_laplacian_pv_many

    energy = GagliardoForm(m, p).energy(field.averages)
    pts = probe_points(m, region=region)
    pv_max = math.nan
    if len(pts):
        pv_max = float(np.max(np.abs(frac_laplacian_pv_many(field, p, pts) - target)))
    return SolveReport(
        energy=max(energy, 0.0), pv_residual_max=pv_max, iterations=iters, h=m.h,
        truncation_radius=m.truncation_radius, residual=res, unknowns=m.n_unknown,
        pv_probes=len(pts), notes=notes,
    )


def _check_problem(m: Mesh, problem: str):
    if m.problem != problem:
        raise ValueError(f"mesh was built for the {m.problem!r} problem, not {problem!r}")


def solve_exterior(omega: Domain2, p: FracParams, m: Mesh):
    """Capacitary potential of ``omega``: 1 on ``omega``, 0 far away.

    The mesh comes from :func:`fraccap.solver.mesh.mesh_exterior`.  For
    ``s > 0.75`` the decay ``|x|^{2s-2}`` is slow and the truncation error
    large, so a ``RuntimeWarning`` is issued.
    """
    _check_problem(m, "exterior")
    notes = ""
    if p.s > SLOW_DECAY_S:
        notes = "s above 0.75: truncation error may dominate"
        warnings.warn(notes, RuntimeWarning, stacklevel=2)
    field, it, res = solve_field(m, p)
    bb = omega.bbox
    ctr = ((bb[0] + bb[2]) / 2, (bb[1] + bb[3]) / 2)
    return field, _finish(field, p, m, it, res, 0.0, (ctr, 1.5 * omega.diameter), notes)


def solve_annular(a: AnnularDomain, p: FracParams, m: Mesh):
    """Capacitary potential of ``D`` relative to ``Omega``."""
    _check_problem(m, "annular")
    field, it, res = solve_field(m, p)
    return field, _finish(field, p, m, it, res, 0.0, None)


def solve_torsion_ball(b: BallSpec, p: FracParams, m: Mesh):
    """Torsion function of a ball: source 1 inside, 0 outside."""
    _check_problem(m, "torsion")
    field, it, res = solve_field(m, p, f=1.0)
    return field, _finish(field, p, m, it, res, 1.0, (b.center, b.radius))


def capacity_estimate(f: Field, p: FracParams) -> tuple:
    """``([u]_s^2, E(u, u))`` with ``E(u, u) = c_{n,s}/2 [u]_s^2``.

    Both come from the assembled form applied to the cell averages.
    """
    form = GagliardoForm(f.mesh, p)
    half = form.energy(f.averages)
    raw = 2.0 * half / form.c
    return raw, half
