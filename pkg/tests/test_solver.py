"""Discrete Gagliardo form, Dirichlet solves, fields and field files."""
import math
import struct

import numpy as np
import pytest

from fraccap.constants import BallSpec, FracParams, c_ns, torsion_profile, unit_ball_potential
from fraccap.geometry import AnnularDomain, Domain2
from fraccap.solver import io as field_io
from fraccap.solver.field import Field, SolveReport
from fraccap.solver.form import GagliardoForm, MeshTooLargeError
from fraccap.solver.mesh import (
    FIXED_ONE,
    FIXED_ZERO,
    UNKNOWN,
    build_mesh,
    mesh_annular,
    mesh_exterior,
    mesh_torsion,
    truncation_radius,
)
from fraccap.solver.solve import (
    SolverError,
    assemble_gagliardo_form,
    capacity_estimate,
    solve_annular,
    solve_exterior,
    solve_field,
    solve_torsion_ball,
)

P = FracParams(2, 0.5)
H_EXT = 1 / 8
R_EXT = 6.0


@pytest.fixture(scope="module")
def small_form():
    d = Domain2.disk(radius=0.3)
    m = mesh_exterior(d, P, 0.1, R_inf=0.75)
    return assemble_gagliardo_form(m, P)


@pytest.fixture(scope="module")
def exterior_pair():
    """Exterior solves of B_1 and B_1.5 on one mesh geometry."""
    out = {}
    for r in (1.0, 1.5):
        d = Domain2.disk(radius=r)
        m = mesh_exterior(d, P, H_EXT, R_inf=R_EXT)
        out[r] = (d, m) + solve_exterior(d, P, m)
    return out


# -- meshes ----------------------------------------------------------------------------
def test_mesh_tags_and_volume_fractions():
    d = Domain2.disk(radius=1.0)
    m = mesh_exterior(d, P, 0.05, R_inf=2.0)
    assert np.all((m.theta >= 0) & (m.theta <= 1))
    c = m.centers()
    r = np.hypot(*c.T).reshape(m.shape)
    assert np.all(m.tags[r < 1 - m.h] == FIXED_ONE)
    assert np.all(m.tags[r > 2 + m.h] == FIXED_ZERO)
    assert np.all(m.tags[(r > 1 + m.h) & (r < 2 - m.h)] == UNKNOWN)
    # the unknown volume recovers the area of the truncated exterior ring
    assert m.theta.sum() * m.h**2 == pytest.approx(math.pi * (4 - 1), rel=2e-3)


def test_truncation_radius_rule():
    d = Domain2.disk(radius=1.0)
    assert truncation_radius(d, P) == pytest.approx(max(8 * 2, 4 * math.sqrt(2) * 2), rel=1e-6)
    assert truncation_radius(d, P, box_scale=2.0) == pytest.approx(2 * truncation_radius(d, P))


# -- the assembled form -----------------------------------------------------------------------
def test_form_is_symmetric(small_form):
    A = small_form.to_dense()
    assert np.max(np.abs(A - A.T)) < 1e-12 * np.max(np.abs(A))


def test_form_has_the_m_matrix_sign_pattern(small_form):
    A = small_form.to_dense()
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    assert np.all(np.diag(A) > 0)
    # rows lose mass to cells outside the box, so they are diagonally dominant
    assert np.all(A.sum(axis=1) >= -1e-14 * np.max(np.abs(A)))


def test_form_is_positive_semidefinite(small_form):
    A = small_form.to_dense()
    w = np.linalg.eigvalsh(A)
    assert w.min() >= -1e-12 * w.max()


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_distant_entries_follow_the_kernel(s):
    p = FracParams(2, s)
    h = 0.1
    form = GagliardoForm(build_mesh((0.0, 0.0), h, (40, 2), []), p)
    errs = []
    for k in (5, 10, 30):
        ref = -c_ns(p) * h**4 / (k * h) ** (2 + 2 * s)
        errs.append(abs(form.entry(0, 2 * k) - ref) / abs(ref))
    assert errs[0] < 0.03
    assert errs[0] > errs[1] > errs[2]


def test_energy_matches_the_dense_quadratic_form(small_form):
    rng = np.random.default_rng(0)
    U = rng.normal(size=small_form.mesh.shape)
    A = small_form.to_dense()
    assert small_form.energy(U) == pytest.approx(U.ravel() @ A @ U.ravel(), rel=1e-12)
    V = rng.normal(size=small_form.mesh.shape)
    assert small_form.bilinear(U, V) == pytest.approx(small_form.bilinear(V, U), rel=1e-12)


def test_dense_assembly_guard():
    m = mesh_exterior(Domain2.disk(), P, 0.1, R_inf=4.0)
    with pytest.raises(MeshTooLargeError):
        assemble_gagliardo_form(m, P).to_dense()


def test_form_requires_two_dimensions():
    m = build_mesh((0.0, 0.0), 0.1, (4, 4), [])
    with pytest.raises(ValueError):
        GagliardoForm(m, FracParams(3, 0.5))


def test_energy_does_not_depend_on_the_thread_count(monkeypatch, small_form):
    rng = np.random.default_rng(5)
    U = rng.normal(size=small_form.mesh.shape)
    vals = []
    for t in ("1", "3"):
        monkeypatch.setenv("FRACCAP_THREADS", t)
        vals.append(GagliardoForm(small_form.mesh, P).energy(U))
    assert vals[0] == vals[1]


# -- exterior problem --------------------------------------------------------------------------
def test_exterior_maximum_principle(exterior_pair):
    for d, m, u, rep in exterior_pair.values():
        assert u.values.min() >= -1e-8 and u.values.max() <= 1 + 1e-8
        assert u.averages.min() >= -1e-8 and u.averages.max() <= 1 + 1e-8
        assert np.all(u.values[m.tags == FIXED_ONE] == 1.0)
        assert np.all(u.values[m.tags == FIXED_ZERO] == 0.0)
        assert rep.energy > 0 and rep.pv_probes >= 20


def test_exterior_comparison_principle(exterior_pair):
    (_, m1, u1, _), (_, m2, u2, _) = exterior_pair[1.0], exterior_pair[1.5]
    assert m1.shape == m2.shape and m1.origin == m2.origin
    assert np.all(u1.values <= u2.values + 1e-8)


def test_capacity_is_monotone_under_inclusion(exterior_pair):
    raw1, e1 = capacity_estimate(exterior_pair[1.0][2], P)
    raw2, e2 = capacity_estimate(exterior_pair[1.5][2], P)
    assert 0 < e1 < e2 and raw1 < raw2


def test_exterior_disk_is_radial_and_bracketed_by_the_closed_form(exterior_pair):
    d, m, u, _ = exterior_pair[1.0]
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    u_far = float(unit_ball_potential(P, np.array([R_EXT]))[0])
    for r in (1.5, 2.0, 3.0):
        v = u(r * np.column_stack([np.cos(th), np.sin(th)]))
        assert v.max() - v.min() < 5 * H_EXT**P.s
        exact = float(unit_ball_potential(P, np.array([r]))[0])
        # truncation at R lowers the potential by at most u(R)
        assert exact - u_far - 0.02 <= v.mean() <= exact + 0.02


def test_exterior_energy_is_stationary_at_interior_cells(exterior_pair):
    _, m, u, _ = exterior_pair[1.0]
    form = GagliardoForm(m, P)
    base = form.energy(u.averages)
    rng = np.random.default_rng(11)
    cand = np.argwhere(m.theta == 1.0)
    pick = cand[rng.choice(len(cand), size=100, replace=False)]
    LU = form.apply(u.averages)
    diag = form.scale * form.S
    delta = m.h**2
    for i, j in pick:
        for sgn in (1.0, -1.0):
            # E(U + t e_k) - E(U) = h^2 (2 t (LU)_k + t^2 L_kk)
            change = m.h**2 * (2 * sgn * delta * LU[i, j] + delta**2 * diag)
            assert change > 0
    U = u.averages.copy()
    i, j = pick[0]
    U[i, j] += delta
    assert form.energy(U) > base


def test_rotated_domain_gives_the_rotated_field():
    d = Domain2.ellipse(1.0, 0.6)
    rot = d.rotated(math.pi / 2)
    u1, _ = solve_exterior(d, P, mesh_exterior(d, P, 0.125, R_inf=4.0))
    u2, _ = solve_exterior(rot, P, mesh_exterior(rot, P, 0.125, R_inf=4.0))
    back = np.rot90(u2.values, k=-1)
    assert np.max(np.abs(back - u1.values)) < 1e-6


def test_exterior_warns_for_slow_decay():
    d = Domain2.disk(radius=0.5)
    p = FracParams(2, 0.8)
    m = mesh_exterior(d, p, 0.25, R_inf=2.0)
    with pytest.warns(RuntimeWarning):
        solve_exterior(d, p, m)


def test_solvers_check_the_mesh_problem():
    d = Domain2.disk(radius=0.5)
    m = mesh_exterior(d, P, 0.25, R_inf=2.0)
    with pytest.raises(ValueError):
        solve_torsion_ball(BallSpec((0.0, 0.0), 0.5), P, m)


def test_solver_failure_reports_a_condition_estimate():
    d = Domain2.disk(radius=0.5)
    m = mesh_exterior(d, P, 0.1, R_inf=2.0)
    with pytest.raises(SolverError) as exc:
        solve_field(m, P, maxiter=2)
    assert exc.value.condition_estimate > 1


# -- annular problem ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def concentric():
    a = AnnularDomain(Domain2.disk(radius=1.0), Domain2.disk(radius=3.0))
    m = mesh_annular(a, 1 / 16)
    return (a, m) + solve_annular(a, P, m)


def test_annular_solution_lies_strictly_between_zero_and_one(concentric):
    a, m, u, _ = concentric
    vals = u.values[m.unknown & (m.theta == 1.0)]
    assert vals.min() > 0 and vals.max() < 1


def test_annular_concentric_solution_is_radial(concentric):
    a, m, u, _ = concentric
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    for r in (1.5, 2.0, 2.5):
        v = u(r * np.column_stack([np.cos(th), np.sin(th)]))
        assert v.max() - v.min() < 5 * m.h**P.s
        assert v.max() - v.min() < 1e-2


def test_shrinking_the_hole_lowers_the_potential():
    outer = Domain2.disk(radius=2.0)
    fields = []
    for r in (0.5, 0.7):
        a = AnnularDomain(Domain2.disk(radius=r), outer)
        m = mesh_annular(a, 1 / 16)
        fields.append(solve_annular(a, P, m)[0])
    assert fields[0].mesh.shape == fields[1].mesh.shape
    assert np.all(fields[0].values <= fields[1].values + 1e-8)
    assert np.any(fields[0].values < fields[1].values - 1e-3)


# -- torsion problem ---------------------------------------------------------------------------
def _torsion_error(h, s, min_dist=0.25):
    p = FracParams(2, s)
    b = BallSpec((0.0, 0.0), 1.0)
    m = mesh_torsion(b, h)
    u, rep = solve_torsion_ball(b, p, m)
    c = m.centers()
    keep = np.hypot(*c.T) <= 1 - min_dist
    exact = torsion_profile(b, p, c[keep])
    return u, m, float(np.max(np.abs(u.values.ravel()[keep] - exact) / exact.max()))


def test_truncation_consistency_across_two_radii():
    # w = u_inf - u_R is s-harmonic off the disk, 0 on it and at most
    # u_inf(R) outside B_R, so two truncations differ by at most u_inf(R1)
    d = Domain2.disk(radius=0.5)
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    pts = np.concatenate([r * np.column_stack([np.cos(t), np.sin(t)]) for r in (0.75, 1.0, 1.5)])
    u = {R: solve_exterior(d, P, mesh_exterior(d, P, H_EXT, R_inf=R))[0].interpolate(pts) for R in (3.0, 6.0)}
    diff = u[6.0] - u[3.0]
    assert diff.min() >= 0
    assert diff.max() <= float(unit_ball_potential(P, np.array([3.0 / 0.5]))[0])


def test_torsion_centre_value_and_support():
    p = FracParams(2, 0.5)
    b = BallSpec((0.0, 0.0), 1.0)
    m = mesh_torsion(b, 1 / 16)
    u, rep = solve_torsion_ball(b, p, m)
    centre = u(np.zeros((1, 2)))[0]
    assert centre == pytest.approx(float(torsion_profile(b, p, [0.0, 0.0])), rel=0.05)
    assert np.all(u.values[m.tags == FIXED_ZERO] == 0.0)
    assert rep.pv_residual_max < 0.03


def test_torsion_error_decreases_under_refinement():
    _, _, coarse = _torsion_error(1 / 8, 0.5)
    _, _, fine = _torsion_error(1 / 16, 0.5)
    assert fine < coarse


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_torsion_oracle_bounds_at_two_pitches(s):
    for h, bound in ((1 / 32, 0.05), (1 / 64, 0.025)):
        _, _, err = _torsion_error(h, s, min_dist=3 * h)
        assert err < bound


# -- capacity estimates ----------------------------------------------------------------------
def test_capacity_of_the_zero_field():
    m = mesh_exterior(Domain2.disk(radius=0.5), P, 0.25, R_inf=2.0)
    z = Field(m, np.zeros(m.shape), np.zeros(m.shape))
    assert capacity_estimate(z, P) == (0.0, 0.0)


def test_capacity_normalizations(exterior_pair):
    u = exterior_pair[1.0][2]
    raw, half = capacity_estimate(u, P)
    assert half == pytest.approx(c_ns(P) / 2 * raw, rel=1e-14)
    assert half == pytest.approx(exterior_pair[1.0][3].energy, rel=1e-12)


# -- fields --------------------------------------------------------------------------------------
def test_field_rejects_nonfinite_values():
    m = build_mesh((0.0, 0.0), 0.1, (4, 4), [])
    v = np.zeros((4, 4))
    v[1, 1] = np.nan
    with pytest.raises(ValueError):
        Field(m, v)


def test_field_is_read_only_and_transforms():
    m = build_mesh((0.0, 0.0), 0.1, (4, 4), [])
    f = Field.from_function(m, lambda x: x[..., 0])
    with pytest.raises(ValueError):
        f.values[0, 0] = 3.0
    # cell averages of a linear function equal its centre values
    assert np.allclose(f.averages, f.values, atol=1e-14)
    g = f.one_minus()
    assert np.allclose(g.values + f.values, 1.0)
    assert np.allclose(f.scaled(2.0).averages, 2 * f.averages)


def test_field_interpolation_is_exact_for_linear_data():
    m = build_mesh((0.0, 0.0), 0.1, (20, 20), [])
    f = Field.from_function(m, lambda x: 2 * x[..., 0] - x[..., 1])
    pts = np.array([[0.43, 0.91], [1.2, 0.33]])
    assert np.allclose(f(pts), 2 * pts[:, 0] - pts[:, 1], atol=1e-12)
    assert f(np.array([[5.0, 5.0]]))[0] == 0.0


def test_solve_report_invariants():
    with pytest.raises(ValueError):
        SolveReport(energy=-1.0, pv_residual_max=0.0, iterations=1, h=0.1, truncation_radius=1.0)
    with pytest.raises(ValueError):
        SolveReport(energy=1.0, pv_residual_max=0.1, iterations=1, h=0.1, truncation_radius=1.0, pv_probes=5)


# -- field files ---------------------------------------------------------------------------------
def _field():
    m = build_mesh((-0.5, 0.25), 0.125, (6, 5), [])
    rng = np.random.default_rng(2)
    return Field(m, rng.normal(size=m.shape))


def test_field_binary_round_trip(tmp_path):
    f = _field()
    path = field_io.write_field(tmp_path / "u.bin", f)
    data = path.read_bytes()
    assert len(data) == 16 + 24 * f.mesh.size
    magic, version, count = struct.unpack("<4sIQ", data[:16])
    assert (magic, version, count) == (b"FLD2", 1, f.mesh.size)
    rows = field_io.read_field(path)
    assert np.array_equal(rows[:, :2], f.mesh.centers())
    assert np.array_equal(rows[:, 2], f.values.ravel())


@pytest.mark.parametrize("damage", ["magic", "version", "truncate"])
def test_field_binary_errors(tmp_path, damage):
    path = field_io.write_field(tmp_path / "u.bin", _field())
    data = bytearray(path.read_bytes())
    if damage == "magic":
        data[:4] = b"XXXX"
    elif damage == "version":
        data[4:8] = struct.pack("<I", 9)
    else:
        data = data[:-8]
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError):
        field_io.read_field(path)


def test_field_csv_export(tmp_path):
    f = _field()
    path = field_io.write_field_csv(tmp_path / "u.csv", f)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,value"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.array_equal(rows[:, 2], f.values.ravel())
