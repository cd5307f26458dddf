"""Planar domains, metric quantities and the moving-planes apparatus."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccap.geometry import (
    AnnularDomain,
    CriticalCase,
    Domain2,
    HalfspaceFrame,
    annular_critical_value,
    classify_critical,
    containment_margin,
    critical_value,
    exterior_parallel_surface,
    extremal_radii_check,
    minkowski_sum_disk,
    parallel_surface_annular,
    read_domain,
    reflect,
    reflection_defect,
    reflection_defect_exact,
    rho_deviation,
    slab_measures,
    touching_ball_radii,
    write_domain,
)
from fraccap.geometry.domain import MIN_VERTICES

from oracles import critical_scan_oracle, rho_grid_oracle, segment_distance, strip_area


def pear():
    return Domain2.from_polar(lambda t: 1 + 0.2 * np.cos(t), name="pear")


def cos3(eps=0.1):
    return Domain2.from_polar(lambda t: 1 + eps * np.cos(3 * t), name="cos3")


# -- Domain2 --------------------------------------------------------------------
def test_domain_rejects_short_or_self_intersecting_boundaries():
    t = np.linspace(0, 2 * np.pi, MIN_VERTICES - 1, endpoint=False)
    with pytest.raises(ValueError):
        Domain2(np.column_stack([np.cos(t), np.sin(t)]))
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    bowtie = np.column_stack([np.sin(2 * t), np.sin(t)])
    with pytest.raises(ValueError):
        Domain2(bowtie)


def test_domain_orients_counterclockwise():
    d = Domain2.disk(n=128)
    rev = Domain2(d.boundary[::-1])
    assert rev.area > 0
    assert np.allclose(rev.boundary, d.boundary[::-1][::-1]) or rev.area == pytest.approx(d.area)


def test_sdf_matches_brute_force_polyline_distance():
    rng = np.random.default_rng(3)
    for d in (pear(), Domain2.rectangle(2.0, 1.0), cos3(0.2)):
        x0, y0, x1, y1 = d.bbox
        pts = rng.uniform((x0 - 0.5, y0 - 0.5), (x1 + 0.5, y1 + 0.5), size=(1000, 2))
        sd = d.sdf(pts)
        ref = segment_distance(pts, d.boundary)
        assert np.max(np.abs(np.abs(sd) - ref)) <= 2 * d.vertex_spacing
        assert np.array_equal(sd < 0, d.contains(pts))


@pytest.mark.parametrize("make", [pear, lambda: Domain2.ellipse(1.2, 1.0), lambda: Domain2.rectangle(1.0, 1.0)])
def test_area_by_two_methods(make):
    d = make()
    mc, _ = d.area_monte_carlo(seed=1)
    assert abs(mc - d.area) <= 0.005 * d.area


def test_disk_metrics():
    d = Domain2.disk((1.0, 2.0), 0.5, n=1024)
    assert d.area == pytest.approx(math.pi * 0.25, rel=1e-4)
    assert d.diameter == pytest.approx(1.0, rel=1e-6)
    assert np.allclose(d.centroid, [1.0, 2.0], atol=1e-12)


# -- Minkowski sums and parallel surfaces ----------------------------------------------
def test_minkowski_sum_of_a_disk_is_a_disk():
    d = Domain2.disk((0.3, -0.2), 1.0)
    g = minkowski_sum_disk(d, 0.5)
    r = np.hypot(*(g.boundary - [0.3, -0.2]).T)
    # the input is an inscribed polygon, so radii agree up to its sagitta
    assert np.max(np.abs(r - 1.5)) < 2 * d.max_sagitta


def test_minkowski_sum_of_the_square_has_the_steiner_area():
    g = minkowski_sum_disk(Domain2.rectangle(1.0, 1.0), 0.5)
    steiner = 1 + 4 * 0.5 + math.pi * 0.25
    assert g.area == pytest.approx(steiner, rel=1e-4)
    mc, se = g.area_monte_carlo(seed=4)
    assert abs(mc - steiner) < 5 * se + 1e-3


def test_minkowski_sum_is_an_outer_offset():
    d = pear()
    g = minkowski_sum_disk(d, 0.3)
    pts = g.boundary
    assert np.max(np.abs(d.sdf(pts) - 0.3)) < 1e-9
    rng = np.random.default_rng(0)
    far = rng.uniform(-3, 3, size=(2000, 2))
    far = far[d.sdf(far) > 0.35]
    assert np.max(np.abs(g.sdf(far) - (d.sdf(far) - 0.3))) < 2 * g.max_sagitta + 1e-9


def test_minkowski_sum_is_continuous_at_zero():
    d = cos3(0.2)
    for R in (1e-1, 1e-2, 1e-3):
        g = minkowski_sum_disk(d, R)
        assert np.max(np.abs(d.sdf(g.boundary))) <= R + 1e-12


def test_minkowski_sum_is_monotone():
    small = Domain2.ellipse(0.7, 0.5)
    big = pear()
    assert np.all(big.sdf(small.boundary) < 0)
    gs, gb = minkowski_sum_disk(small, 0.4), minkowski_sum_disk(big, 0.4)
    assert np.all(gb.sdf(gs.boundary) <= 1e-9)


def test_minkowski_sum_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        minkowski_sum_disk(pear(), 0.0)


def test_parallel_surfaces_of_concentric_disks():
    a = AnnularDomain(Domain2.disk(radius=1.0), Domain2.disk(radius=4.0))
    gd, go = parallel_surface_annular(a, 1.0)
    tol = 2 * max(a.inner.max_sagitta, a.outer.max_sagitta)
    assert np.max(np.abs(np.hypot(*gd.points.T) - 2.0)) < tol
    assert np.max(np.abs(np.hypot(*go.points.T) - 3.0)) < tol
    assert gd.components == [0] and go.components == [1]


def test_parallel_surface_sample_count_scales_with_length():
    a = AnnularDomain(Domain2.disk(radius=1.0), Domain2.disk(radius=4.0))
    gd, go = parallel_surface_annular(a, 1.0, spacing=0.01)
    assert len(go.points) / len(gd.points) == pytest.approx(1.5, rel=0.02)
    assert max(gd.spacing, go.spacing) <= 0.01 * 1.01


def test_parallel_surfaces_of_an_eccentric_annulus_are_separated():
    a = AnnularDomain(Domain2.disk((0.3, 0.0), 1.0), Domain2.disk(radius=3.0))
    R = 0.4
    gd, go = parallel_surface_annular(a, R)
    pair = np.sqrt(((gd.points[:, None, :] - go.points[None, :, :]) ** 2).sum(-1))
    assert pair.min() >= a.dbar - 2 * R - 1e-6
    for pts in (gd.points, go.points):
        dist = np.minimum(np.abs(a.inner.sdf(pts)), np.abs(a.outer.sdf(pts)))
        assert np.max(np.abs(dist - R)) < 1e-6
        assert np.all(a.outer.contains(pts)) and not np.any(a.inner.contains(pts))


def test_parallel_surface_precondition():
    a = AnnularDomain(Domain2.disk(radius=1.0), Domain2.disk(radius=3.0))
    with pytest.raises(ValueError):
        parallel_surface_annular(a, a.dbar / 2)


def test_exterior_parallel_surface_is_at_distance_R():
    d = pear()
    s = exterior_parallel_surface(d, 0.5)
    assert np.max(np.abs(d.sdf(s.points) - 0.5)) < 1e-9


def test_annular_domain_rejects_touching_sets():
    with pytest.raises(ValueError):
        AnnularDomain(Domain2.disk(radius=2.0), Domain2.disk(radius=1.0))


# -- ball deviation ----------------------------------------------------------------------------
def test_rho_of_a_disk_vanishes_at_its_centre():
    d = Domain2.disk((0.4, -0.3), 1.0)
    r = rho_deviation(d)
    # an inscribed polygon deviates from its circle by the sagitta
    assert r.rho <= 2 * d.max_sagitta
    assert np.allclose(r.center, [0.4, -0.3], atol=1e-5)


@pytest.mark.parametrize(
    "make,expected",
    [(lambda: Domain2.rectangle(1.0, 1.0), (math.sqrt(2) - 1) / 2), (lambda: Domain2.ellipse(1.2, 1.0), 0.2)],
)
def test_rho_of_square_and_ellipse(make, expected):
    d = make()
    r = rho_deviation(d)
    assert r.rho == pytest.approx(expected, abs=1e-4)
    assert np.allclose(r.center, d.centroid, atol=1e-3)
    assert r.rho <= 0.2 + 1e-4 or expected > 0.2


@pytest.mark.parametrize(
    "make", [lambda: Domain2.disk(), lambda: Domain2.ellipse(1.2, 1.0), lambda: Domain2.rectangle(1.0, 1.0), pear]
)
def test_rho_agrees_with_the_grid_oracle(make):
    d = make()
    ref, _ = rho_grid_oracle(d)
    assert abs(rho_deviation(d).rho - ref) <= 1e-3


def test_rho_certificate_balls():
    d = pear()
    r = rho_deviation(d)
    assert np.all(np.hypot(*(d.boundary - r.center).T) <= r.r_out + 1e-12)
    assert -d.sdf(r.center[None, :])[0] >= r.r_in - 1e-12
    assert r.rho == pytest.approx(r.r_out - r.r_in)


def test_rho_is_invariant_under_rigid_motions():
    d = cos3(0.15)
    base = rho_deviation(d).rho
    moved = d.rotated(0.7, origin=(0.2, 0.1)).translated((3.0, -1.0))
    assert rho_deviation(moved).rho == pytest.approx(base, rel=1e-6)


# -- touching balls --------------------------------------------------------------------------
def test_touching_radii_of_a_disk():
    d = Domain2.disk(radius=0.7, n=1024)
    r_int, r_ext = touching_ball_radii(d)
    assert r_int == pytest.approx(0.7, rel=1e-3)
    x0, y0, x1, y1 = d.bbox
    assert r_ext == pytest.approx(math.hypot(x1 - x0, y1 - y0), rel=1e-6)


def test_touching_radius_of_an_ellipse():
    a, b = 1.5, 1.0
    r_int, r_ext = touching_ball_radii(Domain2.ellipse(a, b, n=2048))
    assert r_int == pytest.approx(b * b / a, rel=0.01)
    assert r_ext > 2.0


def test_offset_square_has_interior_radius_at_least_R():
    g = minkowski_sum_disk(Domain2.rectangle(1.0, 1.0), 0.3)
    r_int, r_ext = touching_ball_radii(g)
    # the corners are arcs of radius R; the set is convex
    assert r_int >= 0.3 * (1 - 1e-3)
    x0, y0, x1, y1 = g.bbox
    assert r_ext == pytest.approx(math.hypot(x1 - x0, y1 - y0))


def test_square_corners_are_degenerate():
    with pytest.warns(RuntimeWarning):
        r_int, r_ext = touching_ball_radii(Domain2.rectangle(1.0, 1.0))
    assert r_int == 0.0
    assert r_ext > 1.0


# -- reflections ------------------------------------------------------------------------------
def test_reflect_examples():
    f = HalfspaceFrame((1.0, 0.0), 0.0, 5.0)
    assert np.allclose(reflect(f, [3.0, 1.0]), [-3.0, 1.0])
    g = HalfspaceFrame((0.6, 0.8), 0.5, 2.0)
    on_plane = 0.5 * np.array([0.6, 0.8]) + np.array([-0.8, 0.6]) * 2.0
    assert np.allclose(reflect(g, on_plane), on_plane)


@settings(max_examples=100, deadline=None)
@given(
    angle=st.floats(0, 2 * math.pi),
    lam=st.floats(-5, 5),
    pts=st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=8),
)
def test_reflect_is_an_isometric_involution(angle, lam, pts):
    f = HalfspaceFrame((math.cos(angle), math.sin(angle)), lam, 100.0)
    x = np.array(pts)
    y = reflect(f, x)
    assert np.allclose(reflect(f, y), x, atol=1e-12)
    dx = np.hypot(*(x[:, None] - x[None]).transpose(2, 0, 1))
    dy = np.hypot(*(y[:, None] - y[None]).transpose(2, 0, 1))
    assert np.allclose(dx, dy, atol=1e-11)


def test_frame_rejects_lambda_above_Lambda():
    with pytest.raises(ValueError):
        HalfspaceFrame((1.0, 0.0), 2.0, 1.0)


# -- critical values -------------------------------------------------------------------------
def test_critical_value_of_a_disk():
    c = np.array([0.5, -0.25])
    d = Domain2.disk(c, 1.0)
    for th in (0.0, 1.0, 2.5):
        e = np.array([math.cos(th), math.sin(th)])
        res = critical_value(d, e)
        assert res.frame.lam == pytest.approx(c @ e, abs=1e-4 * d.diameter)
        # both configurations occur at once; ties report tangency
        flags = classify_critical(d, res.frame)
        assert flags.tangency and flags.orthogonality
        assert res.case is CriticalCase.InternalTangency


def test_critical_value_of_an_ellipse_along_an_axis():
    d = Domain2.ellipse(1.2, 1.0, center=(0.7, 0.0))
    res = critical_value(d, (1.0, 0.0))
    assert res.frame.lam == pytest.approx(0.7, abs=1e-4 * d.diameter)


def test_critical_value_of_the_pear_detects_tangency():
    res = critical_value(pear(), (1.0, 0.0))
    assert res.case is CriticalCase.InternalTangency
    assert res.frame.lam > 0


def test_critical_cases_away_from_symmetry():
    # the reflected cap of the pear in direction e2 stops at orthogonality
    res = critical_value(pear(), (0.0, 1.0))
    flags = classify_critical(pear(), res.frame)
    assert flags.orthogonality


@pytest.mark.parametrize("make", [lambda: Domain2.ellipse(1.2, 1.0), pear, lambda: cos3(0.1)])
def test_critical_value_agrees_with_the_dense_scan(make):
    d = make()
    m = containment_margin(d)
    for k in range(8):
        th = 2 * math.pi * k / 8 + 0.1
        e = (math.cos(th), math.sin(th))
        lam = critical_value(d, e).frame.lam
        assert abs(lam - critical_scan_oracle(d, e, m)) <= 1e-4 * d.diameter


def test_critical_value_bracketing_certificate():
    from oracles import cap_contained

    d = cos3(0.1)
    m = containment_margin(d)
    for th in (0.3, 1.9):
        e = np.array([math.cos(th), math.sin(th)])
        lam = critical_value(d, e).frame.lam
        delta = 1e-3 * d.diameter
        assert cap_contained(d, e, lam + delta, m)
        assert not cap_contained(d, e, lam - delta, m)


@pytest.mark.parametrize(
    "make", [lambda: Domain2.disk(), lambda: Domain2.ellipse(1.2, 1.0), lambda: Domain2.rectangle(1.0, 1.0),
             pear, lambda: cos3(0.1), lambda: cos3(0.02)]
)
def test_extremal_radii_bound(make):
    d = make()
    chk = extremal_radii_check(d, rho_deviation(d).rho)
    assert chk.holds
    assert chk.rho <= 2 * abs(chk.lambda_e) + 2 * containment_margin(d) + 1e-12


# -- reflection defects ----------------------------------------------------------------------
def test_reflection_defect_of_a_symmetric_domain_vanishes():
    d = Domain2.ellipse(1.2, 1.0)
    f = HalfspaceFrame((1.0, 0.0), 0.0, 1.2)
    res = reflection_defect(d, f)
    assert res.area <= res.error_bound + 1e-3
    assert reflection_defect_exact(d, f) < 1e-9


def test_reflection_defect_brackets_the_polygon_area():
    d = pear()
    f = critical_value(d, (1.0, 0.0)).frame
    f = HalfspaceFrame(f.e, f.lam + 0.1, f.Lambda_e)
    exact = reflection_defect_exact(d, f)
    grid = reflection_defect(d, f, resolution=300)
    assert abs(grid.area - exact) <= grid.error_bound + 1e-4


def test_reflection_defect_grows_with_mass_on_the_minus_side():
    f = HalfspaceFrame((1.0, 0.0), 0.0, 2.0)
    base = Domain2.from_polar(lambda t: 1 + 0.1 * np.cos(t))
    fat = Domain2.from_polar(lambda t: 1 + 0.1 * np.cos(t) + 0.3 * np.maximum(-np.cos(t), 0) ** 2)
    assert reflection_defect_exact(fat, f) > reflection_defect_exact(base, f)


def test_reflection_defect_is_linear_in_the_perturbation():
    f = HalfspaceFrame((1.0, 0.0), 0.0, 2.0)
    vals = [reflection_defect_exact(cos3(eps), f) for eps in (0.01, 0.02, 0.04)]
    slopes = np.diff(np.log(vals)) / math.log(2)
    assert np.all(np.abs(slopes - 1.0) < 0.05)


# -- slab measures ---------------------------------------------------------------------------
def test_slab_measures_of_a_centred_disk_are_empty():
    d = Domain2.disk()
    f = HalfspaceFrame((1.0, 0.0), 0.0, 1.0)
    assert slab_measures(d, f) == []


def test_slab_measures_sum_to_the_area_above_the_plane():
    d = pear()
    f = critical_value(d, (1.0, 0.0)).frame
    m = slab_measures(d, f)
    assert len(m) >= 1 and all(v >= 0 for v in m)
    above = strip_area(d, f.normal, f.lam, 10.0)
    assert sum(m) == pytest.approx(above, rel=1e-9)
    assert sum(m) <= d.area
    # every generated slab starts below the top of the domain
    assert (2 * len(m) - 1) * f.lam <= f.Lambda_e


# -- annular critical values ---------------------------------------------------------------
def test_annular_critical_value_of_concentric_disks():
    c = np.array([0.2, 0.1])
    a = AnnularDomain(Domain2.disk(c, 1.0), Domain2.disk(c, 3.0))
    for e in ((1.0, 0.0), (0.6, 0.8)):
        res = annular_critical_value(a, e)
        assert res.frame.lam == pytest.approx(c @ np.asarray(e), abs=1e-4 * a.inner.diameter)


def test_annular_critical_value_of_an_eccentric_annulus():
    a = AnnularDomain(Domain2.disk((0.3, 0.0), 1.0), Domain2.disk(radius=3.0))
    res = annular_critical_value(a, (1.0, 0.0))
    assert res.frame.lam >= res.lambda_D and res.frame.lam >= res.lambda_Omega
    assert res.frame.lam == pytest.approx(res.lambda_D)
    ref = critical_scan_oracle(a.inner, (1.0, 0.0), containment_margin(a.inner))
    assert res.lambda_D == pytest.approx(ref, abs=1e-4 * a.inner.diameter)
    assert res.lambda_D == pytest.approx(0.3, abs=1e-4)


# -- files -----------------------------------------------------------------------------------
def test_domain_file_round_trip(tmp_path):
    d = cos3(0.05)
    path = tmp_path / "shape.dom"
    write_domain(path, d)
    back = read_domain(path)
    assert np.array_equal(back.boundary, d.boundary)
    lines = path.read_text().splitlines()
    assert lines[0] == "domain2 v1" and int(lines[1]) == len(d)


@pytest.mark.parametrize("text", ["domain2 v2\n64\n", "domain2 v1\n65\n" + "0 0\n" * 64, "domain2 v1\nx\n"])
def test_domain_file_errors(tmp_path, text):
    path = tmp_path / "bad.dom"
    path.write_text(text)
    with pytest.raises(ValueError):
        read_domain(path)
