"""Explicit constants and closed-form profiles for the fractional Laplacian.

Every function here is a pure function of value inputs.  The kernel
normalization is carried by :class:`FracParams`:

``"printed"`` (default)
    ``c_{n,s} = s (1-s) 4s pi^{-n/2} Gamma(n/2+s) / Gamma(2-s)``, the
    expression with a linear factor ``4s``.
``"standard"``
    The usual constant, with ``4^s`` in place of ``4s``.

The two agree at ``s = 1/2``.  The torsion constant ``gamma_{n,s}`` is
rescaled so that ``(-Delta)^s psi_B = 1`` holds under the chosen
normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import special

ArrayLike = Union[float, Sequence[float], np.ndarray]

NORMALIZATIONS = ("printed", "standard")


@dataclass(frozen=True)
class FracParams:
    """Fractional order and ambient dimension.

    Parameters
    ----------
    n : int
        Ambient dimension, ``n >= 1``.
    s : float
        Fractional order in the open interval ``(0, 1)``.
    normalization : {"printed", "standard"}
        Choice of the kernel constant, see the module docstring.

    Raises
    ------
    ValueError
        If ``s`` is outside ``(0, 1)``, ``n < 1``, or ``n <= 2s`` (the
        capacity vanishes for ``n = 1`` and ``s >= 1/2``).
    """

    n: int
    s: float
    normalization: str = "printed"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be a positive integer, got {self.n!r}")
        if not (0.0 < float(self.s) < 1.0):
            raise ValueError(f"fractional order s must lie in (0, 1), got {self.s!r}")
        if self.n <= 2 * self.s:
            raise ValueError(
                f"capacity requires n > 2s; (n={self.n}, s={self.s}) is not admissible"
            )
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}"
            )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))


@dataclass(frozen=True)
class BallSpec:
    """A ball ``B_r(x0)`` in R^n.

    Parameters
    ----------
    center : sequence of float
        Center ``x0``.
    radius : float
        Radius ``r > 0``.
    """

    center: tuple
    radius: float

    def __post_init__(self):
        if not (float(self.radius) > 0.0) or not math.isfinite(self.radius):
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not (value > 0) or not math.isfinite(value):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure ``omega_n`` of the unit ball in R^n."""
    return math.pi ** (n / 2) / special.gamma(n / 2 + 1)


def c_ns_standard(n: int, s: float) -> float:
    """Standard normalization constant ``s 4^s Gamma(n/2+s) / (pi^{n/2} Gamma(1-s))``."""
    return s * 4.0**s * special.gamma(n / 2 + s) / (math.pi ** (n / 2) * special.gamma(1 - s))


def c_ns(p: FracParams) -> float:
    """Kernel constant ``c_{n,s}`` of the fractional Laplacian.

    Parameters
    ----------
    p : FracParams
        Order, dimension and normalization.

    Returns
    -------
    float
        Under ``"printed"``, ``s (1-s) 4s pi^{-n/2} Gamma(n/2+s) / Gamma(2-s)``;
        under ``"standard"``, :func:`c_ns_standard`.

    Examples
    --------
    >>> round(c_ns(FracParams(2, 0.5)) * 2 * math.pi, 12)
    1.0
    """
    n, s = p.n, p.s
    if p.normalization == "standard":
        return c_ns_standard(n, s)
    return (
        s * (1 - s) * 4 * s * math.pi ** (-n / 2)
        * special.gamma(n / 2 + s) / special.gamma(2 - s)
    )


def gamma_ns(p: FracParams) -> float:
    """Torsion constant ``gamma_{n,s}``.

    ``gamma_{n,s} (r^2 - |x|^2)_+^s`` solves ``(-Delta)^s psi = 1`` in
    ``B_r``.  With the standard kernel the closed form is
    ``Gamma(n/2) / (4^s Gamma(1+s) Gamma(n/2+s))``; a different kernel
    constant rescales it by ``c_standard / c_ns(p)``.
    """
    n, s = p.n, p.s
    g_std = special.gamma(n / 2) / (4.0**s * special.gamma(1 + s) * special.gamma(n / 2 + s))
    return g_std * c_ns_standard(n, s) / c_ns(p)


def torsion_profile(b: BallSpec, p: FracParams, x: ArrayLike) -> np.ndarray:
    """Evaluate ``psi_B(x) = gamma_{n,s} (r^2 - |x - x0|^2)_+^s``.

    Parameters
    ----------
    b : BallSpec
    p : FracParams
    x : array_like, shape (..., n)
        Evaluation points; the last axis holds coordinates.

    Returns
    -------
    ndarray, shape (...)
    """
    pts = np.asarray(x, dtype=float)
    c = np.asarray(b.center, dtype=float)
    if pts.shape[-1] != c.shape[0]:
        raise ValueError("point dimension does not match the ball center")
    d2 = np.sum((pts - c) ** 2, axis=-1)
    return gamma_ns(p) * np.maximum(b.radius**2 - d2, 0.0) ** p.s


def hopf_constant_CH(
    p: FracParams, r: float, distKB: float, diamK: float, volK: float, essinfKu: float
) -> float:
    """Quantitative Hopf constant ``C_H``.

    ``C_H = c_{n,s} |K| essinf_K u / (2r + dist(K, B_r) + diam K)^{n+2s}``.

    ``essinfKu`` may be zero (giving ``C_H = 0``); the geometric arguments
    must be positive.
    """
    _require_positive(r=r, distKB=distKB, diamK=diamK, volK=volK)
    if not (essinfKu >= 0) or not math.isfinite(essinfKu):
        raise ValueError(f"essinfKu must be nonnegative, got {essinfKu!r}")
    return c_ns(p) * volK * essinfKu / (2 * r + distKB + diamK) ** (p.n + 2 * p.s)


def antisym_hopf_constant(
    p: FracParams,
    ballB: BallSpec,
    distBH: float,
    diamK: float,
    distQK_B: float,
    Cns_aux: float = 1.0,
) -> float:
    """Constant of the antisymmetric Hopf lemma.

    ``C = 2 (n+2s) C(n,s) d^{n+2s+1} / ((d^{n+2s} + gamma |B| R^{2s} C(n,s))
    (diam B + diam K + dist(Q(K), B))^{n+2s+2})`` with ``d = dist(B, H^+)``.

    Parameters
    ----------
    p : FracParams
    ballB : BallSpec
        The ball ``B`` of radius ``R``.
    distBH : float
        ``dist(B, H^+)``, must be positive.
    diamK : float
        Diameter of ``K``.
    distQK_B : float
        ``dist(Q(K), B)``, nonnegative.
    Cns_aux : float, default 1
        The auxiliary constant ``C(n,s)``, which is not given explicitly
        and is therefore an input.
    """
    if not (distBH > 0):
        raise ValueError(f"dist(B, H+) must be positive, got {distBH!r}")
    _require_positive(diamK=diamK, Cns_aux=Cns_aux)
    if not (distQK_B >= 0):
        raise ValueError(f"dist(Q(K), B) must be nonnegative, got {distQK_B!r}")
    n, s = p.n, p.s
    R = ballB.radius
    vol_b = unit_ball_volume(n) * R**n
    q = n + 2 * s
    num = 2 * q * Cns_aux * distBH ** (q + 1)
    den = (distBH**q + gamma_ns(p) * Cns_aux * vol_b * R ** (2 * s)) * (
        2 * R + diamK + distQK_B
    ) ** (q + 2)
    return num / den


def r0_half_level(p: FracParams) -> float:
    """Radius at which the unit-ball capacitary potential drops to 1/2.

    The exterior potential of ``B_1`` is radial and has the closed form
    ``u(r) = I_{1/r^2}(s, n/2 - s)`` (regularized incomplete beta), so the
    half level is ``r0 = betaincinv(s, n/2 - s, 1/2)^{-1/2}``.  The result is
    normalization independent.
    """
    x = special.betaincinv(p.s, p.n / 2 - p.s, 0.5)
    return float(1.0 / math.sqrt(x))


def unit_ball_potential(p: FracParams, r: ArrayLike) -> np.ndarray:
    """Exterior capacitary potential of ``B_1`` at radius ``r`` (1 inside)."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    m = r > 1
    out[m] = special.betainc(p.s, p.n / 2 - p.s, 1.0 / r[m] ** 2)
    return out


def c_cap_constant(p: FracParams, r: float, diamOmega: float, r0: float) -> float:
    """Boundary decay constant ``C_cap``.

    ``C_cap = (c_{n,s} gamma_{n,s} omega_n / 4) r^{n+s} / (2r + r0 diam)^{n+2s}``
    where ``omega_n`` is the volume of the unit ball.
    """
    _require_positive(r=r, diamOmega=diamOmega, r0=r0)
    n, s = p.n, p.s
    lead = c_ns(p) * gamma_ns(p) * unit_ball_volume(n) / 4
    return lead * r ** (n + s) / (2 * r + r0 * diamOmega) ** (n + 2 * s)


def c_star_annular(
    p: FracParams, volD: float, rInt: float, rExtD: float, dbar: float, diamOmega: float
) -> float:
    """Annular boundary decay constant ``C^*``.

    ``C^* = c_{n,s} gamma_{n,s} / 4^{n+2s+1} * |D| min(rInt, rExtD, dbar/2)^s
    / diam(Omega)^{n+2s}``.
    """
    _require_positive(volD=volD, rInt=rInt, rExtD=rExtD, dbar=dbar, diamOmega=diamOmega)
    n, s = p.n, p.s
    m = min(rInt, rExtD, dbar / 2)
    return c_ns(p) * gamma_ns(p) / 4 ** (n + 2 * s + 1) * volD * m**s / diamOmega ** (n + 2 * s)
