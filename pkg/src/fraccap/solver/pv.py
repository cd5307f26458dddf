"""Pointwise evaluation of ``(-Delta)^s`` on a cell field.

The principal value at ``x`` is split into three pieces:

* near: a square ``Q`` of half-width ``2h`` centred at ``x``.  A local
  quadratic least-squares fit ``q`` of the cell averages replaces ``u``
  there; odd terms cancel by symmetry and the quadratic term integrates in
  closed form to ``-(Delta q / 4) (4h)^{2-2s} I_0(s)``.
* far: every cell ``j`` contributes ``(q(x) - U_j)`` times the kernel mass
  of ``cell_j \\ Q``, integrated by tensor Gauss quadrature near ``x`` and
  by the corrected midpoint rule beyond.
* tail: outside the box ``u`` is a constant ``u_out`` (0 by default),
  which contributes ``q(x) - u_out`` times the kernel mass of the
  complement of the box, done in polar form with the exit radius along
  each ray.
"""
from __future__ import annotations

import math

import numpy as np

from ..constants import FracParams, c_ns
from . import kernel
from .field import Field

#: half-width of the analytic square in cells
NEAR_HALF_WIDTH = 2.0
#: half-width of the quadratic fit block, in cells (the 3 x 3 block
#: around the cell containing the point, well posed wherever the point is)
FIT_HALF_WIDTH = 1
#: cells within this Chebyshev distance (beyond the square) use Gauss quadrature
GAUSS_RING = 8
#: minimum distance from a tag interface, in cells
MIN_INTERFACE_DISTANCE = 3.0

_GX, _GW = np.polynomial.legendre.leggauss(12)
_TX, _TW = np.polynomial.legendre.leggauss(48)


def _quadratic_fit(f: Field, x: np.ndarray):
    m = f.mesh
    h = m.h
    i, j = m.cell_index(x)
    r = FIT_HALF_WIDTH
    ii = np.arange(i[0] - r, i[0] + r + 1)
    jj = np.arange(j[0] - r, j[0] + r + 1)
    I, J = np.meshgrid(ii, jj, indexing="ij")
    I, J = I.ravel(), J.ravel()
    dx = (m.xs[I] - x[0]) / h
    dy = (m.ys[J] - x[1]) / h
    U = f.averages[I, J]
    # cell averages of the monomials: x^2 gains 1/12 over the cell
    A = np.column_stack([np.ones_like(dx), dx, dy, dx**2 + 1 / 12, dx * dy, dy**2 + 1 / 12])
    coef, *_ = np.linalg.lstsq(A, U, rcond=None)
    q0 = coef[0]
    lap = 2.0 * (coef[3] + coef[5]) / h**2
    return float(q0), float(lap)


def _rect_mass(x, y, x0, x1, y0, y1, p):
    # tensor Gauss integral of |z|^{-p} over rectangles (arrays of bounds)
    gx = 0.5 * (x0[:, None] + x1[:, None]) + 0.5 * (x1 - x0)[:, None] * _GX[None, :]
    gy = 0.5 * (y0[:, None] + y1[:, None]) + 0.5 * (y1 - y0)[:, None] * _GX[None, :]
    r2 = (gx[:, :, None] - x) ** 2 + (gy[:, None, :] - y) ** 2
    vals = r2 ** (-p / 2)
    w = np.einsum("kij,i,j->k", vals, _GW, _GW)
    return w * 0.25 * (x1 - x0) * (y1 - y0)


def _cells_minus_square(f: Field, x: np.ndarray, a: float, p: float):
    """Kernel mass of ``cell \\ Q`` for cells in the Gauss ring."""
    m = f.mesh
    h = m.h
    i, j = m.cell_index(x)
    r = int(math.ceil(a / h)) + GAUSS_RING
    ii = np.arange(max(0, i[0] - r), min(m.nx, i[0] + r + 1))
    jj = np.arange(max(0, j[0] - r), min(m.ny, j[0] + r + 1))
    I, J = np.meshgrid(ii, jj, indexing="ij")
    I, J = I.ravel(), J.ravel()
    cx0 = m.origin[0] + h * I
    cy0 = m.origin[1] + h * J
    cx1, cy1 = cx0 + h, cy0 + h
    qx0, qx1, qy0, qy1 = x[0] - a, x[0] + a, x[1] - a, x[1] + a
    pieces = []  # (cell index, x0, x1, y0, y1)
    k = np.arange(len(I))
    # left and right strips span the full cell height
    lx1 = np.minimum(cx1, qx0)
    s = cx0 < lx1
    pieces.append((k[s], cx0[s], lx1[s], cy0[s], cy1[s]))
    rx0 = np.maximum(cx0, qx1)
    s = rx0 < cx1
    pieces.append((k[s], rx0[s], cx1[s], cy0[s], cy1[s]))
    mx0 = np.maximum(cx0, qx0)
    mx1 = np.minimum(cx1, qx1)
    has_mid = mx0 < mx1
    by1 = np.minimum(cy1, qy0)
    s = has_mid & (cy0 < by1)
    pieces.append((k[s], mx0[s], mx1[s], cy0[s], by1[s]))
    ty0 = np.maximum(cy0, qy1)
    s = has_mid & (ty0 < cy1)
    pieces.append((k[s], mx0[s], mx1[s], ty0[s], cy1[s]))
    mass = np.zeros(len(I))
    for kk, x0, x1, y0, y1 in pieces:
        if len(kk):
            np.add.at(mass, kk, _rect_mass(x[0], x[1], x0, x1, y0, y1, p))
    return I, J, mass


def _tail_mass(x: np.ndarray, box, s: float) -> float:
    """Kernel mass of the complement of the box seen from ``x``."""
    d = (x[0] - box[0], x[1] - box[1], box[2] - x[0], box[3] - x[1])  # left, bottom, right, top
    corners = [(box[0], box[1]), (box[2], box[1]), (box[2], box[3]), (box[0], box[3])]
    ang = [math.atan2(cy - x[1], cx - x[0]) for cx, cy in corners]
    # sides in counter-clockwise order: bottom (c0->c1), right, top, left; outward normal angles
    sides = [(ang[0], ang[1], d[1], -math.pi / 2), (ang[1], ang[2], d[2], 0.0),
             (ang[2], ang[3], d[3], math.pi / 2), (ang[3], ang[0], d[0], math.pi)]
    total = 0.0
    for t0, t1, dist, nrm in sides:
        a0 = (t0 - nrm + math.pi) % (2 * math.pi) - math.pi
        a1 = (t1 - nrm + math.pi) % (2 * math.pi) - math.pi
        phi = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * _TX
        vals = (np.cos(phi) / dist) ** (2 * s) / (2 * s)
        total += 0.5 * (a1 - a0) * float(_TW @ vals)
    return total


def frac_laplacian_pv(f: Field, p: FracParams, x, exterior_value: float = 0.0) -> float:
    """``(-Delta)^s u(x)`` for the field ``f`` extended off the box.

    Parameters
    ----------
    f : Field
    p : FracParams
        Must have ``n = 2``.
    x : point
        At distance at least ``3h`` from every tag interface and inside the
        box by more than the near square.
    exterior_value : float
        Value of the field beyond the box; 0 for every Dirichlet problem
        here.

    Raises
    ------
    ValueError
        If ``x`` is too close to an interface or to the box edge.
    """
    if p.n != 2:
        raise ValueError("the cell evaluator supports n = 2 only")
    m = f.mesh
    h = m.h
    x = np.asarray(x, dtype=float).reshape(2)
    a = NEAR_HALF_WIDTH * h
    dist = float(m.distance_to_interface(x)[0])
    if dist < MIN_INTERFACE_DISTANCE * h * (1 - 1e-9):
        raise ValueError(f"point {tuple(x)} is {dist / h:.2f}h from an interface; need 3h")
    b = m.box
    if min(x[0] - b[0], x[1] - b[1], b[2] - x[0], b[3] - x[1]) < a + (FIT_HALF_WIDTH + 1) * h:
        raise ValueError(f"point {tuple(x)} is too close to the box edge")
    s = p.s
    pe = 2.0 + 2.0 * s
    q0, lap = _quadratic_fit(f, x)
    near = -(lap / 4.0) * (2 * a) ** (2 - 2 * s) * kernel.inner_second_moment(s)
    # far field: corrected midpoint everywhere, replaced by Gauss in the ring
    X = m.xs[:, None] - x[0]
    Y = m.ys[None, :] - x[1]
    r2 = X**2 + Y**2
    with np.errstate(divide="ignore"):
        mass = h * h * (r2 ** (-pe / 2) + pe * pe * h * h / 24.0 * r2 ** (-pe / 2 - 1))
    I, J, gm = _cells_minus_square(f, x, a, pe)
    mass[I, J] = gm
    far = math.fsum(((q0 - f.averages) * mass).ravel())
    tail = (q0 - exterior_value) * _tail_mass(x, b, s)
    return c_ns(p) * (near + far + tail)


def frac_laplacian_pv_many(f: Field, p: FracParams, xs, exterior_value: float = 0.0) -> np.ndarray:
    """:func:`frac_laplacian_pv` at each row of ``xs``."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    return np.array([frac_laplacian_pv(f, p, x, exterior_value) for x in pts])
