"""
Moving planes on a perturbed disk
=================================

For ``r = 1 + eps cos(3 t)`` the plane ``{x . e = lam}`` slides in from
``lam = Lambda_e`` until the reflected cap no longer fits.  The critical
value is recorded with the stopping case, and the ball deviation ``rho``
is compared with ``2 |lambda_e|`` through the extremal-radii chain.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fraccap.geometry import (
    Domain2,
    critical_value,
    extremal_radii_check,
    reflection_defect,
    rho_deviation,
)

eps = 0.1
d = Domain2.from_polar(lambda t: 1 + eps * np.cos(3 * t), name="cos3")
rr = rho_deviation(d)
print(f"rho = {rr.rho:.5f} (about 2 eps = {2 * eps}), centre {np.round(rr.center, 6)}")

# %%
# Critical values over eight directions.  At the critical plane most of
# the minus side is not covered by the reflected cap, so the reflection
# defect there is of order one.
fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(*np.vstack([d.boundary, d.boundary[:1]]).T, "k-")
for k in range(8):
    th = 2 * math.pi * k / 8 + 0.1
    e = np.array([math.cos(th), math.sin(th)])
    res = critical_value(d, e)
    print(f"theta = {th:.3f}: lambda_e = {res.frame.lam:+.5f} ({res.case}), "
          f"uncovered minus side = {reflection_defect(d, res.frame).area:.3f}")
    t = np.array([-e[1], e[0]])
    seg = np.array([res.frame.lam * e - 1.3 * t, res.frame.lam * e + 1.3 * t])
    ax.plot(*seg.T, lw=0.6)
ax.set_aspect("equal")
fig.savefig("critical_lines.svg")

# %%
# The chain rho <= rho_max - rho_min <= 2 |lambda_e|.
chk = extremal_radii_check(d, rr.rho)
print(f"rho = {chk.rho:.5f} <= {chk.rho_max - chk.rho_min:.5f} <= {2 * abs(chk.lambda_e):.5f}: {chk.holds}")
