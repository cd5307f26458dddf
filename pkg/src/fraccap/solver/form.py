"""The discrete Gagliardo form on a cell mesh.

For cell averages ``U`` the energy is ``E(U, U) = h^2 U . (L U)`` with

    (L U)_i = c_{n,s} h^{-2s} (S U_i - sum_j w_{i-j} U_j),

``w`` and ``S`` from :mod:`fraccap.solver.kernel`.  Cells beyond the mesh
box hold zero, which is accounted for by ``S`` being the infinite-lattice
mass.  ``L`` is applied by FFT convolution.

Unknown cells are solved for their PDE-part value ``u_i``; the cell
average is ``U_i = theta_i u_i + (1 - theta_i) g_i``.  The reduced system

    theta_i c h^{-2s} (S u_i - sum_j w_ij theta_j u_j)
        = theta_i f_i + theta_i c h^{-2s} sum_j w_ij (1 - theta_j) g_j

is the stationarity condition of ``E(U, U)/2 + c h^{-2s} S/2 *
sum_i theta_i (1 - theta_i) (u_i - g_i)^2 - sum_i theta_i f_i u_i``.  It
is symmetric positive definite, and its off-diagonal entries are
nonpositive, which gives a discrete maximum and comparison principle.
"""
from __future__ import annotations

import math
import os
from functools import cached_property

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator

from ..constants import FracParams, c_ns
from . import kernel
from .mesh import Mesh

#: largest cell count for which :meth:`GagliardoForm.to_dense` is allowed
DENSE_LIMIT = 5000


class MeshTooLargeError(MemoryError):
    """Raised when a dense assembly would not fit; use a coarser ``h``."""


def fft_workers() -> int:
    """Thread count for FFTs taken from ``FRACCAP_THREADS`` (default: all cores)."""
    raw = os.environ.get("FRACCAP_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"FRACCAP_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


class GagliardoForm:
    """Discrete bilinear form ``E(phi_i, phi_j)`` on a mesh.

    Parameters
    ----------
    mesh : Mesh
    p : FracParams
        Must have ``n = 2``.
    """

    def __init__(self, mesh: Mesh, p: FracParams):
        if p.n != 2:
            raise ValueError("the cell solver supports n = 2 only; use radial formulas otherwise")
        self.mesh = mesh
        self.p = p
        self.h = mesh.h
        self.c = c_ns(p)
        self.scale = self.c * self.h ** (-2 * p.s)
        self.S = kernel.total_mass(p.s)
        self.weights = kernel.full_kernel(mesh.nx, mesh.ny, p.s)
        self._fshape = (fft.next_fast_len(2 * mesh.nx - 1, real=True), fft.next_fast_len(2 * mesh.ny - 1, real=True))

    @cached_property
    def _khat(self) -> np.ndarray:
        return fft.rfft2(self.weights, self._fshape, workers=fft_workers())

    def convolve(self, u: np.ndarray) -> np.ndarray:
        """``(W * u)_i = sum_j w_{i-j} u_j`` over the box."""
        nx, ny = self.mesh.nx, self.mesh.ny
        w = fft_workers()
        uhat = fft.rfft2(u, self._fshape, workers=w)
        uhat *= self._khat
        full = fft.irfft2(uhat, self._fshape, workers=w)
        return full[nx - 1 : 2 * nx - 1, ny - 1 : 2 * ny - 1]

    def apply(self, U: np.ndarray) -> np.ndarray:
        """``L U`` for cell averages ``U`` on the whole box."""
        U = np.asarray(U, dtype=float).reshape(self.mesh.shape)
        return self.scale * (self.S * U - self.convolve(U))

    def energy(self, U: np.ndarray) -> float:
        """``E(U, U) = h^2 sum_i U_i (L U)_i`` with compensated summation."""
        U = np.asarray(U, dtype=float).reshape(self.mesh.shape)
        prod = (U * self.apply(U)).ravel()
        return self.h**2 * math.fsum(prod)

    def bilinear(self, U: np.ndarray, V: np.ndarray) -> float:
        U = np.asarray(U, dtype=float).reshape(self.mesh.shape)
        V = np.asarray(V, dtype=float).reshape(self.mesh.shape)
        return self.h**2 * math.fsum((V * self.apply(U)).ravel())

    def entry(self, i: int, j: int) -> float:
        """``E(phi_i, phi_j)`` for flat cell indices (mesh order)."""
        nx, ny = self.mesh.nx, self.mesh.ny
        a, b = divmod(int(i), ny)
        c, d = divmod(int(j), ny)
        if (a, b) == (c, d):
            return self.h**2 * self.scale * self.S
        return -self.h**2 * self.scale * self.weights[nx - 1 + c - a, ny - 1 + d - b]

    def to_dense(self) -> np.ndarray:
        """Dense matrix of ``E(phi_i, phi_j)`` over all cells.

        Raises
        ------
        MeshTooLargeError
            If the mesh has more than ``DENSE_LIMIT`` cells.
        """
        n = self.mesh.size
        if n > DENSE_LIMIT:
            raise MeshTooLargeError(
                f"dense assembly of {n} cells exceeds the limit of {DENSE_LIMIT}; use a coarser h"
            )
        nx, ny = self.mesh.nx, self.mesh.ny
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        I, J = I.ravel(), J.ravel()
        A = -self.weights[nx - 1 + I[None, :] - I[:, None], ny - 1 + J[None, :] - J[:, None]]
        A[np.arange(n), np.arange(n)] = self.S
        return self.h**2 * self.scale * A

    # -- reduced Dirichlet system -------------------------------------------
    def reduced_system(self, f: np.ndarray | float = 0.0):
        """Operator, right-hand side and Jacobi diagonal of the unknowns.

        Parameters
        ----------
        f : array_like or float
            Source term per cell (broadcast to the mesh).

        Returns
        -------
        (LinearOperator, ndarray, ndarray)
        """
        m = self.mesh
        mask = m.unknown
        th = m.theta[mask]
        fixed = (1.0 - m.theta) * m.g
        f_full = np.broadcast_to(np.asarray(f, dtype=float), m.shape)
        rhs = th * (f_full[mask] + self.scale * self.convolve(fixed)[mask])
        diag = th * self.scale * self.S
        buf = np.zeros(m.shape)

        def matvec(v):
            v = np.asarray(v, dtype=float).ravel()
            buf[mask] = th * v
            out = th * (self.scale * self.S * v - self.scale * self.convolve(buf)[mask])
            buf[mask] = 0.0
            return out

        n = int(mask.sum())
        op = LinearOperator((n, n), matvec=matvec, rmatvec=matvec, dtype=float)
        return op, rhs, diag

    def cell_averages(self, u_unknown: np.ndarray) -> np.ndarray:
        """Cell averages ``U`` from the unknown values."""
        m = self.mesh
        U = (1.0 - m.theta) * m.g
        U = U.copy()
        U[m.unknown] += m.theta[m.unknown] * np.asarray(u_unknown, dtype=float)
        return U
