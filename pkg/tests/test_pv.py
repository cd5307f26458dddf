"""Principal-value evaluator of the fractional Laplacian."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccap.constants import BallSpec, FracParams, torsion_profile
from fraccap.geometry import Domain2
from fraccap.solver.field import Field
from fraccap.solver.mesh import build_mesh, mesh_exterior, mesh_torsion
from fraccap.solver.pv import frac_laplacian_pv, frac_laplacian_pv_many
from fraccap.solver.solve import probe_points, solve_exterior


def _torsion_field(b, p, h):
    m = mesh_torsion(b, h)
    return m, Field.from_function(m, lambda x: torsion_profile(b, p, x))


@settings(max_examples=25, deadline=None)
@given(
    c=st.floats(-5, 5),
    s=st.floats(0.1, 0.9),
    x=st.floats(-0.5, 0.5),
    y=st.floats(-0.5, 0.5),
)
def test_constant_field_has_zero_fractional_laplacian(c, s, x, y):
    m = build_mesh((-1.0, -1.0), 0.1, (20, 20), [])
    f = Field(m, np.full(m.shape, c))
    val = frac_laplacian_pv(f, FracParams(2, s), (x, y), exterior_value=c)
    assert abs(val) <= 1e-9 * max(1.0, abs(c))


def test_constant_field_with_zero_extension_is_positive():
    m = build_mesh((-1.0, -1.0), 0.1, (20, 20), [])
    f = Field(m, np.ones(m.shape))
    p = FracParams(2, 0.5)
    inner = frac_laplacian_pv(f, p, (0.0, 0.0))
    edge = frac_laplacian_pv(f, p, (0.6, 0.0))
    assert 0 < inner < edge


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_torsion_profile_gives_one(s):
    p = FracParams(2, s)
    b = BallSpec((0.0, 0.0), 1.0)
    m, f = _torsion_field(b, p, 1 / 32)
    pts = probe_points(m, 20, region=(b.center, b.radius))
    assert len(pts) == 20
    vals = frac_laplacian_pv_many(f, p, pts)
    assert np.max(np.abs(vals - 1.0)) <= 0.03


@settings(max_examples=12, deadline=None)
@given(
    cx=st.floats(-2, 2),
    cy=st.floats(-2, 2),
    r=st.floats(0.4, 1.5),
    s=st.floats(0.15, 0.85),
    seed=st.integers(0, 2**16),
)
def test_torsion_residual_on_random_balls(cx, cy, r, s, seed):
    p = FracParams(2, s)
    b = BallSpec((cx, cy), r)
    m, f = _torsion_field(b, p, r / 16)
    pts = probe_points(m, 4, region=(b.center, b.radius), seed=seed)
    vals = frac_laplacian_pv_many(f, p, pts)
    assert np.max(np.abs(vals - 1.0)) <= 0.03


def test_solved_exterior_field_is_harmonic_at_probes():
    d = Domain2.disk(radius=0.5)
    p = FracParams(2, 0.5)
    m = mesh_exterior(d, p, 1 / 16, R_inf=3.0)
    u, rep = solve_exterior(d, p, m)
    assert rep.pv_probes >= 20
    assert rep.pv_residual_max < 0.01


def test_pv_rejects_points_near_an_interface():
    p = FracParams(2, 0.5)
    b = BallSpec((0.0, 0.0), 1.0)
    m, f = _torsion_field(b, p, 1 / 16)
    with pytest.raises(ValueError):
        frac_laplacian_pv(f, p, (0.98, 0.0))


def test_pv_rejects_points_near_the_box_edge():
    m = build_mesh((0.0, 0.0), 0.1, (20, 20), [])
    f = Field(m, np.ones(m.shape))
    with pytest.raises(ValueError):
        frac_laplacian_pv(f, FracParams(2, 0.5), (0.15, 1.0))


def test_pv_requires_two_dimensions():
    m = build_mesh((0.0, 0.0), 0.1, (20, 20), [])
    f = Field(m, np.ones(m.shape))
    with pytest.raises(ValueError):
        frac_laplacian_pv(f, FracParams(3, 0.5), (1.0, 1.0))
