"""Quadrature weights for the kernel ``|z|^{-2-2s}`` on a uniform grid.

The discrete operator acting on cell values ``u`` with pitch ``h`` is

    (L u)_i = c_{n,s} h^{-2s} [ S u_i - sum_{j != i} w_{i-j} u_j ],

where ``w_k`` is the integral of ``|z|^{-2-2s}`` over the unit cell
centred at the integer offset ``k``, plus a local weight ``w_loc`` added
to the four nearest neighbours, and ``S`` is the total mass of the
kernel outside the central cell plus ``4 w_loc``.  ``w_loc`` may be
negative, but it is clipped so that ``w_(1,0) + w_loc >= w_(1,0) / 2``;
every off-diagonal coefficient is therefore positive and ``L`` has the
M-matrix sign pattern.

The local weight replaces the (divergent for ``s >= 1/2``) central-cell
integral by the value that makes ``L`` exact on quadratic polynomials on
the infinite lattice.  It is obtained from a lattice-sum identity that is
evaluated once per ``s`` and cached.
"""
from __future__ import annotations

import functools
import math

import numpy as np
from scipy import integrate

#: offsets with ``max(|k1|, |k2|)`` below this use tensor Gauss quadrature
NEAR_OFFSETS = 8
#: subcells per axis and Gauss points per subcell axis for near offsets
_SUBCELLS = 4
_GAUSS_POINTS = 16
#: lattice radius used in the quadratic-exactness sum
_LATTICE_M = 60
#: lower bound of the nearest-neighbour weight, as a fraction of ``w_(1,0)``
_MIN_NN_FRACTION = 0.5


def _gauss_unit():
    x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    return x / 2, w / 2


def quadrant_weights(n: int, s: float) -> np.ndarray:
    """Cell integrals of ``|z|^{-2-2s}`` for offsets ``0 <= k1, k2 < n``.

    Far offsets use the midpoint value with the Laplacian (second-moment)
    correction ``r^{-p} + p^2/24 r^{-p-2}``, whose relative error is about
    ``1e-5`` at ``NEAR_OFFSETS`` cells and decays like ``|k|^{-4}``.  The
    entry at ``(0, 0)`` is zero.

    Parameters
    ----------
    n : int
        Number of offsets per axis.
    s : float
        Fractional order.

    Returns
    -------
    ndarray, shape (n, n)
    """
    p = 2.0 + 2.0 * s
    k = np.arange(n, dtype=float)
    r2 = k[:, None] ** 2 + k[None, :] ** 2
    r2[0, 0] = 1.0
    w = r2 ** (-p / 2) + p * p / 24.0 * r2 ** (-p / 2 - 1)
    x, gw = _gauss_unit()
    sub = (np.arange(_SUBCELLS) + 0.5) / _SUBCELLS - 0.5
    # local coordinates of all Gauss nodes inside one unit cell
    nodes = (sub[:, None] + x[None, :] / _SUBCELLS).ravel()
    wts = np.tile(gw / _SUBCELLS, _SUBCELLS)
    m = min(NEAR_OFFSETS, n)
    for i in range(m):
        X = i + nodes
        for j in range(m):
            if i == 0 and j == 0:
                continue
            Y = j + nodes
            f = (X[:, None] ** 2 + Y[None, :] ** 2) ** (-p / 2)
            w[i, j] = wts @ f @ wts
    w[0, 0] = 0.0
    return w


def _polar_cell_integral(s: float, exponent: float, scale: float) -> float:
    # 8 * int_0^{pi/4} (2 cos t)^{-a} / a dt, i.e. the integral of the kernel
    # outside (a > 0) or of r^{a}-type moments inside (a < 0) the unit cell
    a = exponent
    val, _ = integrate.quad(lambda t: (2 * math.cos(t)) ** a, 0.0, math.pi / 4, epsabs=1e-14, epsrel=1e-13)
    return 8.0 * val / scale


@functools.lru_cache(maxsize=64)
def outer_mass(s: float) -> float:
    """Integral of ``|z|^{-2-2s}`` over the complement of the unit cell."""
    return _polar_cell_integral(s, 2 * s, 2 * s)


@functools.lru_cache(maxsize=64)
def inner_second_moment(s: float) -> float:
    """Integral of ``|z|^{2} |z|^{-2-2s}`` over the unit cell centred at 0."""
    return _polar_cell_integral(s, -(2 - 2 * s), 2 - 2 * s)


@functools.lru_cache(maxsize=64)
def quadratic_defect(s: float, M: int = _LATTICE_M) -> float:
    """Second moment of the continuous kernel missed by the lattice weights.

    Returns ``Q = int_{cell} |z|^{-2s} dz + sum_k (int_{cell k} |z|^{-2s}
    - |k|^2 w_k)``, evaluated by truncating at ``max|k| <= M`` and adding
    the leading far-field correction.  Four nearest-neighbour weights of
    size ``Q/4`` make the lattice operator exact on quadratics.
    """
    w = quadrant_weights(M + 1, s)
    k = np.arange(M + 1, dtype=float)
    r2 = k[:, None] ** 2 + k[None, :] ** 2
    q = r2 * w
    lattice = 4.0 * q[1:, 0].sum() + 4.0 * q[1:, 1:].sum()
    i0 = inner_second_moment(s)
    side = 2 * M + 1
    tail = (1 + 2 * s) / 6.0 * side ** (-2 * s) * outer_mass(s)
    return side ** (2 - 2 * s) * i0 - lattice - tail


@functools.lru_cache(maxsize=64)
def local_weight(s: float) -> float:
    """Nearest-neighbour correction ``w_loc`` (see module docstring).

    For small ``s`` the quadratic-exact value is negative enough to break
    positivity of the nearest-neighbour weight; it is then clipped so that
    ``w_(1,0) + w_loc >= w_(1,0) / 2``.
    """
    wl = quadratic_defect(s) / 4.0
    w10 = quadrant_weights(2, s)[1, 0]
    return max(wl, -(1.0 - _MIN_NN_FRACTION) * w10)


def total_mass(s: float) -> float:
    """Diagonal mass ``S = outer_mass + 4 w_loc``."""
    return outer_mass(s) + 4.0 * local_weight(s)


@functools.lru_cache(maxsize=8)
def _full_kernel_cached(nx: int, ny: int, s: float) -> np.ndarray:
    n = max(nx, ny)
    q = quadrant_weights(n, s)[:nx, :ny]
    full = np.empty((2 * nx - 1, 2 * ny - 1))
    full[nx - 1 :, ny - 1 :] = q
    full[: nx, ny - 1 :] = q[::-1, :]
    full[nx - 1 :, : ny] = q[:, ::-1]
    full[: nx, : ny] = q[::-1, ::-1]
    wl = local_weight(s)
    if nx > 1:
        full[nx - 2, ny - 1] += wl
        full[nx, ny - 1] += wl
    if ny > 1:
        full[nx - 1, ny - 2] += wl
        full[nx - 1, ny] += wl
    full.setflags(write=False)
    return full


def full_kernel(nx: int, ny: int, s: float) -> np.ndarray:
    """Weights ``w_k`` for all offsets of an ``nx`` by ``ny`` grid.

    Returns an array of shape ``(2 nx - 1, 2 ny - 1)`` whose entry
    ``[nx - 1 + k1, ny - 1 + k2]`` is the weight of offset ``(k1, k2)``,
    local correction included.  The array is read-only and cached.
    """
    return _full_kernel_cached(int(nx), int(ny), float(s))
