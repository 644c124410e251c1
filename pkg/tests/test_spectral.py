import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sph_harm_y

from restrictlab.spectral import (SphereHarmonic, TorusEigenfunction, apply_projector,
                                  apply_spectral_multiplier, eigenfunction_from_dict,
                                  lattice_circle, normalized_legendre, projector_kernel,
                                  sphere_harmonic, torus_eigenfunction)

# values of chi from an independent 30-digit mpmath quadrature of the cosine transform
CHI_FROZEN = {0.0: 1.0, 1.0: 0.99506756439361447, 10.0: 0.58472950183235649,
              50.0: 0.0020179434246413893, 200.0: -0.00015003600599077674,
              1000.0: 9.8537273447891193e-9}


def mp_chi(s):
    mpmath.mp.dps = 30
    f = lambda t: mpmath.exp(-1 / (1 - 16 * t * t))
    mass = mpmath.quad(f, mpmath.linspace(0, 0.25, 9))
    pts = mpmath.linspace(0, 0.25, max(9, int(s / 4) + 2))
    return float(mpmath.quad(lambda t: f(t) * mpmath.cos(s * t), pts) / mass)


def test_chi_frozen_against_mpmath(chi):
    for s in (10.0, 200.0):
        assert mp_chi(s) == pytest.approx(CHI_FROZEN[s], abs=1e-15)
    for s, v in CHI_FROZEN.items():
        assert chi(s) == pytest.approx(v, abs=2e-15)
        assert chi.chi_direct(s) == pytest.approx(v, abs=2e-15)


def test_chi_200_value(chi):
    # a decaying window, but |chi(200)| is 1.5e-4, not below 1e-6
    assert chi(200.0) == pytest.approx(-1.50036006e-4, rel=1e-8)


def test_chi_basics(chi):
    assert chi(0.0) == pytest.approx(1.0, abs=1e-14)
    assert chi.chi_hat(0.3) == 0.0
    assert chi.chi_hat(0.25) == 0.0 and chi.chi_hat(-0.25) == 0.0
    assert chi.chi_hat(0.24) > 0
    s = np.linspace(-300, 300, 1201)
    np.testing.assert_allclose(chi(s), chi(-s), atol=0)
    assert np.isrealobj(chi(s))


def test_chi_hat_normalization(chi):
    from scipy.integrate import quad
    mass, _ = quad(chi.chi_hat, -0.25, 0.25, epsabs=1e-14)
    assert mass == pytest.approx(2 * math.pi, rel=1e-12)


def test_chi_spline_accuracy(chi):
    s = np.random.default_rng(0).uniform(0, 1e4, 400)
    assert np.max(np.abs(chi(s) - chi.chi_direct(s))) < 1e-12


def test_chi_polynomial_decay(chi):
    s = np.linspace(0, 1000, 20001)
    c4 = np.max(np.abs(chi(s)) * (1 + s) ** 4)
    assert c4 < 1e6
    # the bound keeps holding far out
    assert np.all(np.abs(chi(s[s > 500])) * (1 + s[s > 500]) ** 4 < c4)


def test_rho_hat_support_and_convention(chi):
    assert chi.rho_hat(0.5) == 0.0 and chi.rho_hat(0.6) == 0.0
    assert chi.rho_hat(0.49) > 0
    from scipy.integrate import quad
    for s in (0.0, 3.0, 17.0):
        val, _ = quad(lambda t: chi.rho_hat(t) * math.cos(s * t), -0.5, 0.5, epsabs=1e-14,
                      limit=200)
        assert val / (2 * math.pi) == pytest.approx(float(chi(s)) ** 2, abs=1e-12)


def test_cutoff_and_envelope(chi):
    S = chi.cutoff(1e-15)
    assert 3500 < S < 4500
    assert chi.cutoff(1e-12) == pytest.approx(2391.0, abs=1.0)
    g = np.arange(2000.0, 2600.0, 0.25)
    assert np.all(np.abs(chi.chi_direct(g)) <= chi.envelope(g))
    assert chi.envelope(S) == pytest.approx(1e-15, rel=1e-9)


def test_multiplier(chi):
    m = chi.multiplier(3.0, 20.0, symmetric=True)
    assert m(20.0) == pytest.approx(1.0 + float(chi(120.0)), abs=1e-14)


# --- harmonics ----------------------------------------------------------------

def test_sphere_harmonic_examples():
    y0 = sphere_harmonic(0, "zonal")
    pts = np.random.default_rng(1).uniform([0, -3], [3, 3], (20, 2))
    np.testing.assert_allclose(y0(pts), 1 / math.sqrt(4 * math.pi), atol=1e-15)
    for l in (1, 5, 40, 300):
        z = sphere_harmonic(l, "zonal")
        assert z([0.0, 0.0]).real == pytest.approx(math.sqrt((2 * l + 1) / (4 * math.pi)),
                                                   rel=1e-12)
    h = sphere_harmonic(60, "highest")
    vals = np.abs(h(np.stack([np.full(50, math.pi / 2), np.linspace(-3, 3, 50)], 1)))
    assert np.ptp(vals) < 1e-14 * vals[0]


def test_invalid_harmonics():
    with pytest.raises(ValueError):
        sphere_harmonic(3, 4)
    with pytest.raises(ValueError):
        sphere_harmonic(-1)
    with pytest.raises(ValueError):
        sphere_harmonic(3, "tesseral")


@pytest.mark.parametrize("l,m", [(0, 0), (3, 1), (10, -4), (25, 25), (40, 7)])
def test_harmonics_match_scipy_up_to_phase(l, m):
    th = np.linspace(0.01, 3.1, 37)
    ph = np.linspace(-3, 3, 37)
    ours = SphereHarmonic(l, m)(np.stack([th, ph], 1))
    ref = sph_harm_y(l, m, th, ph)
    np.testing.assert_allclose(np.abs(ours), np.abs(ref), rtol=1e-11, atol=1e-14)


def test_legendre_large_degree_is_finite():
    v = normalized_legendre(2000, 2000, np.array([0.0, 0.5]))
    assert np.all(np.isfinite(v))


def sphere_quadrature_norm(e, nt=200, nphi=None):
    nphi = nphi or 2 * e.l + 8
    x, w = np.polynomial.legendre.leggauss(nt)
    phi = 2 * math.pi * np.arange(nphi) / nphi
    th = np.arccos(x)
    T, P = np.meshgrid(th, phi, indexing="ij")
    v = np.abs(e(np.stack([T, P], -1))) ** 2
    return math.sqrt(float(w @ v.mean(axis=1)) * 2 * math.pi)


@pytest.mark.parametrize("l,m", [(0, 0), (7, 3), (64, 64), (50, 0)])
def test_sphere_l2_norm_closed_form(l, m):
    assert sphere_quadrature_norm(SphereHarmonic(l, m)) == pytest.approx(1.0, abs=1e-8)


def sphere_laplacian(f, th, ph, h=1e-4):
    d_th = (f(th + h, ph) - f(th - h, ph)) / (2 * h)
    d2_th = (f(th + h, ph) - 2 * f(th, ph) + f(th - h, ph)) / h ** 2
    d2_ph = (f(th, ph + h) - 2 * f(th, ph) + f(th, ph - h)) / h ** 2
    return d2_th + math.cos(th) / math.sin(th) * d_th + d2_ph / math.sin(th) ** 2


def test_sphere_eigen_equation_by_finite_differences():
    rng = np.random.default_rng(3)
    for l, m in [(2, 1), (6, 6), (9, 0), (12, -5)]:
        e = SphereHarmonic(l, m)
        f = lambda a, b: e([a, b])
        for th, ph in rng.uniform([0.4, -3], [2.7, 3], (5, 2)):
            lap = sphere_laplacian(f, th, ph)
            val = f(th, ph)
            if abs(val) < 1e-3:
                continue
            assert abs(-lap - e.eigenvalue ** 2 * val) <= 1e-4 * e.eigenvalue ** 2 * abs(val)


def test_torus_eigen_equation_by_finite_differences():
    e = torus_eigenfunction(25)
    h = 1e-4
    for x in np.random.default_rng(4).uniform(0, 1, (6, 2)):
        val = e(x)
        if abs(val) < 1e-2:
            continue
        lap = sum((e(x + h * d) - 2 * val + e(x - h * d)) / h ** 2 for d in np.eye(2))
        assert abs(-lap - e.eigenvalue ** 2 * val) <= 1e-4 * e.eigenvalue ** 2 * abs(val)


# --- lattice circles and torus sums -------------------------------------------

def test_lattice_circle_examples():
    c = lattice_circle(25)
    assert len(c) == 12
    assert set(c.as_tuples()) == {(5, 0), (-5, 0), (0, 5), (0, -5), (3, 4), (3, -4), (-3, 4),
                                  (-3, -4), (4, 3), (4, -3), (-4, 3), (-4, -3)}
    assert len(lattice_circle(1)) == 4
    assert len(lattice_circle(3)) == 0
    assert lattice_circle(0).as_tuples() == [(0, 0)]


def brute_r2(n):
    r = int(math.isqrt(n)) + 1
    return sum(1 for a in range(-r, r + 1) for b in range(-r, r + 1) if a * a + b * b == n)


@given(n=st.integers(0, 5000))
def test_lattice_circle_symmetry_and_count(n):
    pts = set(lattice_circle(n).as_tuples())
    assert len(pts) == brute_r2(n)
    for a, b in pts:
        assert {(-a, b), (a, -b), (b, a)} <= pts


def test_torus_eigenfunction_examples():
    e = torus_eigenfunction(1, {(1, 0): 1.0})
    x = np.random.default_rng(5).uniform(0, 1, (10, 2))
    np.testing.assert_allclose(e(x), np.exp(2j * np.pi * x[:, 0]), atol=1e-14)
    assert e.l2_norm() == 1.0
    e25 = torus_eigenfunction(25)
    np.testing.assert_allclose(e25.coeffs, 1 / math.sqrt(12))
    assert e25.l2_norm() == pytest.approx(1.0, abs=1e-15)
    assert e25.eigenvalue == pytest.approx(2 * math.pi * 5)


def test_torus_eigenfunction_errors():
    with pytest.raises(ValueError):
        torus_eigenfunction(3)
    with pytest.raises(ValueError):
        torus_eigenfunction(25, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        torus_eigenfunction(25, {(5, 0): 0.0})


def test_l4_of_n25_matches_collision_count():
    pts = lattice_circle(25).as_tuples()
    count = sum(1 for a, b, c, d in itertools.product(pts, repeat=4)
                if a[0] + b[0] == c[0] + d[0] and a[1] + b[1] == c[1] + d[1])
    e = torus_eigenfunction(25, normalize=False)
    g = np.arange(64) / 64
    X, Y = np.meshgrid(g, g, indexing="ij")
    l4 = np.mean(np.abs(e(np.stack([X, Y], -1))) ** 4)
    assert l4 / 144 == pytest.approx(count / 144, abs=1e-10)
    assert count / 144 == 2.75


@given(seed=st.integers(0, 1000), n=st.sampled_from([5, 25, 65, 325]))
def test_parseval(seed, n):
    rng = np.random.default_rng(seed)
    pts = lattice_circle(n).as_tuples()
    coeffs = {k: complex(*rng.normal(size=2)) for k in pts}
    e = torus_eigenfunction(n, coeffs, normalize=False)
    M = 2 * int(math.isqrt(n)) + 3
    g = np.arange(M) / M
    X, Y = np.meshgrid(g, g, indexing="ij")
    quad = np.mean(np.abs(e(np.stack([X, Y], -1))) ** 2)
    assert quad == pytest.approx(sum(abs(c) ** 2 for c in coeffs.values()), rel=1e-8)


def test_serialization_roundtrip():
    e = torus_eigenfunction(65)
    back = eigenfunction_from_dict(e.to_dict())
    np.testing.assert_array_equal(back.modes, e.modes)
    np.testing.assert_allclose(back.coeffs, e.coeffs)
    s = eigenfunction_from_dict(SphereHarmonic(4, -2).to_dict())
    assert (s.l, s.m) == (4, -2)
    with pytest.raises(ValueError):
        eigenfunction_from_dict({"kind": "maass"})


def test_addition_merges_modes():
    a = torus_eigenfunction(1, {(1, 0): 1.0}, normalize=False)
    b = torus_eigenfunction(2, {(1, 1): 2.0}, normalize=False)
    s = a + b + a
    assert not s.is_eigenfunction
    nonzero = {k: c for k, c in zip(map(tuple, s.modes.tolist()), s.coeffs) if c != 0}
    assert nonzero == {(1, 0): 2, (1, 1): 2}


# --- projectors ---------------------------------------------------------------

def test_projector_on_single_modes(chi):
    e = torus_eigenfunction(25, {(3, 4): 1.0})
    for lam in (20.0, 31.4, 40.0):
        out = apply_projector(e, chi, 3.0, lam)
        assert out.coeffs[list(map(tuple, out.modes.tolist())).index((3, 4))] == pytest.approx(
            float(chi(3.0 * (e.eigenvalue - lam))), abs=1e-15)
    exact = apply_projector(e, chi, 3.0, e.eigenvalue)
    assert np.max(np.abs(exact.coeffs)) == pytest.approx(1.0, abs=1e-14)
    y = SphereHarmonic(10, 3)
    assert apply_projector(y, chi, 2.0, y.eigenvalue).amplitude == pytest.approx(1, abs=1e-14)


def test_projector_twice_is_rho_window(chi):
    e = (torus_eigenfunction(25, normalize=False) + torus_eigenfunction(26, normalize=False)
         + torus_eigenfunction(50, normalize=False))
    T, lam = 2.0, 33.0
    twice = apply_projector(apply_projector(e, chi, T, lam), chi, T, lam)
    once = apply_spectral_multiplier(e, lambda s: chi.rho(T * (s - lam)))
    np.testing.assert_allclose(twice.coeffs, once.coeffs, rtol=0, atol=1e-15)


def brute_torus_kernel(chi, T, lam, x, y):
    R = int((lam + chi.cutoff(1e-15) / T) / (2 * math.pi)) + 1
    a, b = np.meshgrid(np.arange(-R, R + 1), np.arange(-R, R + 1), indexing="ij")
    s = 2 * math.pi * np.hypot(a, b)
    w = chi(T * (s - lam)) + chi(T * (s + lam))
    phase = np.exp(2j * math.pi * (a * (x[0] - y[0]) + b * (x[1] - y[1])))
    return complex(np.sum(w * phase))


def test_torus_projector_vs_mode_loop(chi):
    x, y = np.array([0.13, 0.71]), np.array([0.52, 0.08])
    kv = projector_kernel("flat-torus", chi, 3.0, 20.0, x, y, symmetric=True)
    assert kv.value == pytest.approx(brute_torus_kernel(chi, 3.0, 20.0, x, y), abs=1e-11)
    assert kv.tail_bound < 1e-8


def test_sphere_projector_vs_explicit_sum(chi):
    # addition theorem against the explicit sum over orders, same truncation
    x, y = np.array([0.7, 0.3]), np.array([1.9, -2.2])
    T, lam, tol = 10.0, 12.0, 1e-8
    kv = projector_kernel("sphere", chi, T, lam, x, y, tol=tol, max_tail=1.0)
    total = 0j
    l = 0
    while math.sqrt(l * (l + 1)) <= lam + chi.cutoff(tol) / T:
        w = float(chi(T * (math.sqrt(l * (l + 1)) - lam)))
        for m in range(-l, l + 1):
            Y = SphereHarmonic(l, m)
            total += w * Y(x) * np.conj(Y(y))
        l += 1
    assert kv.value == pytest.approx(total, abs=1e-12)


def test_projector_errors(chi):
    with pytest.raises(ValueError):
        projector_kernel("hyperbolic", chi, 1.0, 10.0, [0, 0], [0, 0])
    with pytest.raises(ValueError):
        projector_kernel("flat-torus", chi, 0.0, 10.0, [0, 0], [0, 0])
    with pytest.raises(ValueError):
        projector_kernel("flat-torus", chi, 3.0, 10.0, [0, 0], [0, 0], tol=1e-3, max_tail=1e-20)


@given(x=st.tuples(st.floats(0, 1), st.floats(0, 1)), y=st.tuples(st.floats(0, 1),
                                                                 st.floats(0, 1)))
def test_projector_hermitian(chi, x, y):
    a = projector_kernel("flat-torus", chi, 3.0, 20.0, x, y).value
    b = projector_kernel("flat-torus", chi, 3.0, 20.0, y, x).value
    assert abs(a - np.conj(b)) <= 1e-12 * max(1.0, abs(a))


def test_highest_weight_tube_mass():
    x, w = np.polynomial.legendre.leggauss(400)
    for l in (16, 64, 128):
        d = l ** -0.5
        th = math.pi / 2 + d * x
        dens = np.abs(normalized_legendre(l, l, np.cos(th))) ** 2 * np.sin(th)
        assert 2 * math.pi * d * (w @ dens) >= 0.5
