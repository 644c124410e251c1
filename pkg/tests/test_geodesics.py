import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from restrictlab.geodesics import (GeodesicSegment, PhasePoint, distance, exp_map, flow,
                                   first_return_time, phase_point, points_along, unit_segment)
from restrictlab.surfaces import ChartError, SurfaceModel, constant_curvature_coefficient

TORUS = SurfaceModel.flat_torus()
SPHERE = SurfaceModel.sphere()


def test_torus_flow_straight_line():
    q = flow(TORUS, phase_point(TORUS, (0.2, 0.2), (1, 0)), 0.5)
    np.testing.assert_allclose(q.x, [0.7, 0.2], atol=1e-15)
    np.testing.assert_array_equal(q.xi, [1.0, 0.0])


def test_torus_flow_returns_along_3_4():
    q = flow(TORUS, phase_point(TORUS, (0.0, 0.0), (3, 4)), 5.0)
    assert distance(TORUS, q.x, (0, 0)) < 1e-14


def test_sphere_flow_period():
    p = phase_point(SPHERE, (1.0, 0.4), (0.3, 0.8))
    q = flow(SPHERE, p, 2 * math.pi)
    np.testing.assert_allclose(q.x, p.x, atol=1e-12)
    np.testing.assert_allclose(q.xi, p.xi, atol=1e-12)


def test_flow_horizon():
    with pytest.raises(ValueError):
        flow(TORUS, phase_point(TORUS, (0, 0), (1, 0)), 2e4)


def test_exp_map_examples():
    np.testing.assert_array_equal(exp_map(TORUS, (0.3, 0.1), (0, 0)), [0.3, 0.1])
    np.testing.assert_allclose(exp_map(TORUS, (0, 0), (2.25, 0)), [0.25, 0.0], atol=1e-15)
    south = exp_map(SPHERE, (0.0, 0.0), (math.pi, 0.0))
    assert south[0] == pytest.approx(math.pi, abs=1e-12)


def test_distances():
    assert distance(TORUS, (0, 0), (0.5, 0.5)) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert distance(TORUS, (0.1, 0), (0.9, 0)) == pytest.approx(0.2, abs=1e-15)
    assert distance(SPHERE, (0, 0), (math.pi, 0)) == pytest.approx(math.pi, abs=1e-15)


def test_first_return_times():
    assert first_return_time(TORUS, phase_point(TORUS, (0, 0), (1, 0)), 100) == 1.0
    assert first_return_time(TORUS, phase_point(TORUS, (0.3, 0.2), (3, 4)), 100) == 5.0
    irr = phase_point(TORUS, (0, 0), (1, math.sqrt(2)))
    assert first_return_time(TORUS, irr, 100) == math.inf


def test_first_return_brute_force():
    # lattice scan oracle: shortest (m1, m2) parallel to (p, q)
    for p, q in [(1, 2), (2, 3), (5, 7), (4, 1)]:
        hits = [math.hypot(a, b) for a in range(-20, 21) for b in range(-20, 21)
                if (a, b) != (0, 0) and a * q == b * p and a * p + b * q > 0]
        assert first_return_time(TORUS, phase_point(TORUS, (0, 0), (p, q)), 30) == min(hits)


def test_warped_return_is_none_for_hyperbolic_rays():
    m = SurfaceModel.from_polar(constant_curvature_coefficient(-1.0), 4.0)
    assert first_return_time(m, phase_point(m, (1.0, 0.0), (0.6, 0.8)), 2.0) == math.inf


def test_warped_flow_chart_exit():
    m = SurfaceModel.from_polar(constant_curvature_coefficient(-1.0), 2.0)
    with pytest.raises(ChartError):
        flow(m, phase_point(m, (1.0, 0.0), (1.0, 0.0)), 3.0)


def test_unit_segment_torus_nodes():
    seg = unit_segment(TORUS, (0, 0), (1, 0))
    assert np.all(np.abs(seg.points[:, 0]) <= 0.5) and np.all(seg.points[:, 1] == 0)
    assert seg.weights.sum() == pytest.approx(1.0, abs=1e-14)
    approx = seg.weights @ np.cos(2 * math.pi * seg.s)
    assert approx == pytest.approx(0.0, abs=1e-12)
    # analytic: integral of cos(2 pi s) over [-1/2, 1/2] is 0; shifted version is 1/pi
    assert seg.weights @ np.cos(math.pi * seg.s) == pytest.approx(2 / math.pi, abs=1e-12)


def test_unit_segment_sphere_equator():
    seg = unit_segment(SPHERE, (math.pi / 2, 0.0), (0, 1))
    np.testing.assert_allclose(seg.points[:, 0], math.pi / 2, atol=1e-12)
    np.testing.assert_allclose(seg.points[:, 1], seg.s, atol=1e-12)


def test_unit_segment_needs_unit_direction():
    with pytest.raises(ValueError):
        unit_segment(TORUS, (0, 0), (2, 0))


def test_unit_segment_chart_exit():
    m = SurfaceModel.from_polar(constant_curvature_coefficient(-1.0), 1.0)
    with pytest.raises(ChartError):
        unit_segment(m, (0.9, 0.0), (1.0, 0.0))


unit_angle = st.floats(0, 2 * math.pi)


@given(x=st.tuples(st.floats(0.1, 3.0), st.floats(-3, 3)), a=unit_angle,
       t=st.floats(-5, 5), s=st.floats(-5, 5))
def test_sphere_flow_group_and_norm(x, a, t, s):
    p = phase_point(SPHERE, x, (math.cos(a), math.sin(a)))
    try:
        one = flow(SPHERE, p, t + s)
        two = flow(SPHERE, flow(SPHERE, p, t), s)
    except ChartError:
        return
    assert abs(one.norm(SPHERE) - 1) < 1e-10
    assert distance(SPHERE, one.x, two.x) < 1e-9


@given(a=unit_angle, t=st.floats(0, 2.0))
def test_warped_flow_preserves_norm(a, t):
    m = SurfaceModel.from_polar(constant_curvature_coefficient(-1.0), 6.0)
    p = phase_point(m, (2.0, 0.3), (math.cos(a), math.sin(a)))
    try:
        q = flow(m, p, t)
    except ChartError:
        return
    assert abs(q.norm(m) - 1) < 1e-10 * max(1.0, t)


pts = st.tuples(st.floats(0, 1), st.floats(0, 1))


@given(x=pts, y=pts, z=pts)
def test_torus_distance_metric(x, y, z):
    dxy, dyz, dxz = distance(TORUS, x, y), distance(TORUS, y, z), distance(TORUS, x, z)
    assert dxy == pytest.approx(distance(TORUS, y, x), abs=1e-15)
    assert dxz <= dxy + dyz + 1e-14
    assert dxy <= math.sqrt(0.5) + 1e-15


sph = st.tuples(st.floats(0, math.pi), st.floats(-math.pi, math.pi))


@given(x=sph, y=sph, z=sph)
def test_sphere_distance_metric(x, y, z):
    dxy, dyz, dxz = distance(SPHERE, x, y), distance(SPHERE, y, z), distance(SPHERE, x, z)
    assert dxy == pytest.approx(distance(SPHERE, y, x), abs=1e-14)
    assert dxz <= dxy + dyz + 1e-12


@given(p=st.integers(-12, 12), q=st.integers(-12, 12))
def test_torus_primitive_return(p, q):
    if (p, q) == (0, 0) or math.gcd(p, q) != 1:
        return
    t = first_return_time(TORUS, phase_point(TORUS, (0.4, 0.1), (p, q)), 50)
    assert t == math.sqrt(p * p + q * q)


def test_segment_node_doubling_is_stable():
    seg = unit_segment(SPHERE, (math.pi / 2, 0.0), (0, 1))
    f = lambda pts: np.sin(pts[:, 0]) ** 40 * np.cos(7 * pts[:, 1]) ** 2
    a = seg.weights @ f(seg.points)
    b = seg.with_nodes(128).weights @ f(seg.with_nodes(128).points)
    assert abs(a - b) < 1e-10
