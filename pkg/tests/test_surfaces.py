import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from restrictlab.surfaces import (ChartError, ConjugatePointError, SurfaceModel,
                                  constant_curvature_coefficient, curvature_at,
                                  gunther_check, random_nonpositive_profile, solve_jacobi,
                                  w0_coefficient)


def const(k):
    return lambda t, th: np.full(np.broadcast(np.asarray(t), np.asarray(th)).shape, float(k))


def hyperbolic(k=-1.0, t_max=10.0):
    return SurfaceModel.warped_polar(const(k), t_max, nonpositive=True)


def test_curvature_of_closed_models():
    assert curvature_at(SurfaceModel.sphere(), 0.7, 1.1) == 1.0
    assert curvature_at(SurfaceModel.flat_torus(), 0.3, 2.0) == 0.0


def test_curvature_from_analytic_sinh():
    m = SurfaceModel.from_polar(constant_curvature_coefficient(-1.0), 5.0)
    for t in (0.3, 1.0, 4.0):
        assert curvature_at(m, t, 0.0) == pytest.approx(-1.0, abs=1e-12)


def test_curvature_outside_chart():
    with pytest.raises(ChartError):
        curvature_at(hyperbolic(t_max=2.0), 3.0, 0.0)
    with pytest.raises(ChartError):
        curvature_at(hyperbolic(), -0.1, 0.0)


def test_flat_jacobi_is_t():
    sol = solve_jacobi(SurfaceModel.warped_polar(const(0.0), 7.0), 0.0, 7.0, tol=1e-12)
    assert np.max(np.abs(sol.A - sol.t)) < 1e-12
    assert sol.A[0] == 0.0 and sol.dA[0] == 1.0


def test_jacobi_sinh_values():
    # mpmath oracle for sinh(kappa t)/kappa
    sol = solve_jacobi(hyperbolic(), 0.0, 1.0, tol=1e-12, t_eval=[1.0])
    assert sol.A_at(1.0) == pytest.approx(float(mpmath.sinh(1)), abs=1e-10)
    assert float(mpmath.sinh(1)) == pytest.approx(1.175201, abs=1e-6)
    sol4 = solve_jacobi(hyperbolic(-4.0), 0.0, 1.0, tol=1e-12)
    assert sol4.A_at(1.0) == pytest.approx(float(mpmath.sinh(2) / 2), abs=1e-10)
    assert float(mpmath.sinh(2) / 2) == pytest.approx(1.813430, abs=1e-6)


def test_jacobi_step_refinement():
    m = hyperbolic(t_max=5.0)
    a = solve_jacobi(m, 0.0, 5.0, tol=1e-10).A[-1]
    b = solve_jacobi(m, 0.0, 5.0, tol=1e-12).A[-1]
    assert abs(a - b) < 1e-10 * max(1.0, abs(b))


def test_conjugate_point_reported():
    with pytest.raises(ConjugatePointError) as exc:
        solve_jacobi(SurfaceModel.warped_polar(const(1.0), 5.0), 0.0, 5.0)
    assert exc.value.t == pytest.approx(math.pi, abs=1e-6)


def test_gunther_reports():
    sol = solve_jacobi(hyperbolic(), 0.0, 10.0, tol=1e-13)
    assert gunther_check(sol, 0.0).holds
    eq = gunther_check(sol, 1.0)
    assert eq.holds
    assert np.max(np.abs(eq.margin)) < 1e-8 * np.max(np.sinh(sol.t))
    sphere = solve_jacobi(SurfaceModel.sphere(), 0.0, 3.0, tol=1e-12)
    rep = gunther_check(sphere, 0.0)
    assert not rep.holds
    assert np.all(rep.margin[1:] < 0)


def test_gunther_rejects_negative_kappa():
    sol = solve_jacobi(hyperbolic(t_max=1.0), 0.0, 1.0)
    with pytest.raises(ValueError):
        gunther_check(sol, -1.0)


def test_w0_values():
    flat = solve_jacobi(SurfaceModel.warped_polar(const(0.0), 8.0), 0.0, 8.0, tol=1e-12)
    assert w0_coefficient(flat, 7.0) == pytest.approx(1.0, abs=1e-12)
    assert w0_coefficient(flat, 0.0) == 1.0
    sol = solve_jacobi(hyperbolic(), 0.0, 10.0, tol=1e-12)
    assert w0_coefficient(sol, 1.0) == pytest.approx(float(1 / mpmath.sqrt(mpmath.sinh(1))),
                                                    abs=1e-9)
    assert w0_coefficient(sol, 1.0) == pytest.approx(0.922452, abs=1e-6)
    assert w0_coefficient(sol, 5.0) <= math.sqrt(5 / math.sinh(5)) + 1e-9
    with pytest.raises(ChartError):
        w0_coefficient(sol, -1.0)


@given(seed=st.integers(0, 10_000), theta=st.floats(0, 2 * math.pi),
       rotational=st.booleans())
def test_nonpositive_profiles_dominate_flat(seed, theta, rotational):
    prof = random_nonpositive_profile(np.random.default_rng(seed),
                                      theta_dependent=not rotational)
    m = SurfaceModel.warped_polar(prof, 6.0, nonpositive=True,
                                  rotationally_symmetric=rotational)
    sol = solve_jacobi(m, theta, 6.0, tol=1e-10, num=200)
    assert gunther_check(sol, 0.0).holds
    w0 = w0_coefficient(sol, sol.t)
    assert np.all((w0 > 0) & (w0 <= 1 + 1e-9))


@given(kappa=st.floats(0.2, 2.0))
def test_constant_curvature_bounds(kappa):
    sol = solve_jacobi(hyperbolic(-kappa * kappa, 6.0), 0.0, 6.0, tol=1e-12, num=300)
    assert gunther_check(sol, kappa).holds
    t = sol.t[1:]
    w0 = w0_coefficient(sol, t)
    assert np.all(w0 <= np.sqrt(kappa * t / np.sinh(kappa * t)) + 1e-8)
    assert np.all(np.diff(w0) <= 1e-12)
