"""
Explicit constants and the torsion function of a disk
======================================================

The kernel constant ``c_{n,s}``, the torsion constant ``gamma_{n,s}`` and
the half-level radius ``r0`` are closed-form.  The torsion function
``psi = gamma (r^2 - |x|^2)_+^s`` solves ``(-Delta)^s psi = 1`` in the
ball, which makes it the reference solution for the cell solver.

Run with ``python3 notebooks/01_constants_and_torsion.py``; the figure is
written next to the working directory.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fraccap.cli import torsion_errors
from fraccap.constants import BallSpec, FracParams, c_ns, gamma_ns, r0_half_level, torsion_profile
from fraccap.solver.mesh import mesh_torsion
from fraccap.solver.solve import solve_torsion_ball

# %%
# Both normalisations of the kernel constant agree at s = 1/2 and
# separate elsewhere.
for s in (0.25, 0.5, 0.75):
    printed = c_ns(FracParams(2, s))
    standard = c_ns(FracParams(2, s, normalization="standard"))
    print(f"s = {s:4}: c_ns printed {printed:.6f}, standard {standard:.6f}, "
          f"r0 = {r0_half_level(FracParams(2, s)):.6f}")

# %%
# Solve the torsion problem on the unit disk and compare with the closed
# form on cells at least 3h inside.
ball = BallSpec((0.0, 0.0), 1.0)
fig, ax = plt.subplots(figsize=(6, 4))
xs = np.linspace(-1.2, 1.2, 241)
line = np.column_stack([xs, np.zeros_like(xs)])
for s in (0.3, 0.5, 0.7):
    p = FracParams(2, s)
    for h in (1 / 16, 1 / 32):
        field, report = solve_torsion_ball(ball, p, mesh_torsion(ball, h))
        err = torsion_errors(field, ball, p, 3 / 32)
        print(f"s = {s}, h = 1/{round(1 / h)}: relative error {err:.4f}, "
              f"{report.iterations} CG iterations, gamma = {gamma_ns(p):.4f}")
    ax.plot(xs, field.interpolate(line), label=f"cells, s = {s}")
    ax.plot(xs, torsion_profile(ball, p, line), "k--", lw=0.8)
ax.set_xlabel("x")
ax.set_ylabel("psi(x, 0)")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("torsion_profiles.svg")
