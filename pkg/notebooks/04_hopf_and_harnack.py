"""
Hopf lower bound and boundary Harnack ratios
============================================

``v = 1 - u`` for the exterior potential of the unit disk is
s-superharmonic away from the disk.  On a ball B outside it, v should
dominate ``C_H psi_B``, with ``C_H`` built from the distance to a region
K where v is bounded below.  The Harnack ratio of the reflected
difference ``w = u o Q - u`` is measured on a perturbed disk.
"""

import numpy as np

from fraccap.constants import BallSpec, FracParams
from fraccap.geometry import Domain2, HalfspaceFrame
from fraccap.solver.mesh import mesh_exterior
from fraccap.solver.solve import solve_exterior
from fraccap.stability import harnack_ratio_check, hopf_lower_bound_check

p = FracParams(2, 0.5)
disk = Domain2.disk()
u, _ = solve_exterior(disk, p, mesh_exterior(disk, p, 1 / 8, R_inf=6.0))
v = u.one_minus()
ball = BallSpec((2.0, 0.0), 0.5)
K = Domain2.disk((0.0, 4.5), 0.5)
for scale in (1.0, 10.0):
    res = hopf_lower_bound_check(v, ball, K, p, scale=scale)
    print(f"C_H x {scale:g}: passed {res.passed}, min slack {res.min_slack:.4f}, C_H {res.C_H:.3e}")

# %%
# The Harnack ratio is a ratio of ratios, so it ignores the scale of u
# and should settle under refinement.
d = Domain2.from_polar(lambda t: 1 + 0.05 * np.cos(3 * t), name="cos3")
frame = HalfspaceFrame((1.0, 0.0), 0.0, 1.05)
for h in (1 / 8, 1 / 16):
    w, _ = solve_exterior(d, p, mesh_exterior(d, p, h, R_inf=6.0))
    res = harnack_ratio_check(w, frame, 0.5)
    print(f"h = 1/{round(1 / h)}: K_emp = {res.K_emp:.3f} over {res.pairs} pairs, censored {res.censored}")
