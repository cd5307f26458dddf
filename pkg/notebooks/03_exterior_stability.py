"""
Exterior stability sweep at a coarse mesh
=========================================

The shipped ``configs/cos3_sweep.toml`` runs at h = 1/48.  This script
repeats it at h = 1/16 so it finishes in a few minutes, then fits
``log rho`` against ``log deficit`` and reports the smallest constant ``C``
with ``rho <= C deficit^(1/(s+2))``.
"""

from fraccap.cli import build_family_domain
from fraccap.constants import FracParams
from fraccap.solver.mesh import mesh_exterior
from fraccap.stability import SweepRecord, exponent_fit, one_sided_constant, record_seed, stability_check_exterior

p = FracParams(2, 0.5)
h = 1 / 16
records = []
for eps in (0.01, 0.02, 0.04, 0.08):
    d = build_family_domain("cos3", eps)
    rep = stability_check_exterior(d, 0.5, p, mesh_exterior(d, p, h))
    records.append(SweepRecord("cos3", eps, rep.deficit, rep.rho, p.s, h,
                               record_seed("cos3", eps, p.s, h), rep.censored))
    print(f"eps = {eps}: deficit {rep.deficit:.5f}, rho {rep.rho:.5f}, "
          f"empirical C {rep.empirical_C:.3f}, below floor {rep.censored}")

# %%
# All deficits sit below the conservative floor 5 h^s, so the fit uses
# every record and is descriptive only.
slope, intercept, r2 = exponent_fit(records, floor=0.0)
print(f"slope {slope:.3f} (reference {1 / (p.s + 2):.3f}), r^2 {r2:.4f}")
print(f"one-sided C = {one_sided_constant(records):.4f}")
