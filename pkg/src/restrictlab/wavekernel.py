"""Smoothed wave kernels on flat covers, windowed kernels, and Hadamard terms.

All kernels are radial on R^2.  The basic identity is

    (1/(pi T)) int chat(t/T) e^{-it lam} cos(t P) dt = chi(T(P - lam)) + chi(T(P + lam)),

with ``P = sqrt(-Delta)``; the left side has finite propagation speed, so its
kernel vanishes beyond distance ``T/4``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .bessel import j0
from .covers import DeckGroup, enumerate_deck, translation_of
from .quadrature import composite_gauss, gauss_legendre, oscillatory_rule
from .spectral import ChiWindow
from .surfaces import JacobiSolution, w0_coefficient

TWO_PI = 2.0 * math.pi


# --- circle Fourier transform -------------------------------------------------

def circle_fourier(w) -> np.ndarray | float:
    """int_0^{2pi} exp(i w cos theta) d theta = 2 pi J0(w)."""
    out = TWO_PI * j0(np.asarray(w, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def circle_fourier_quadrature(w, nodes: Optional[int] = None) -> complex:
    """Trapezoid rule on the periodic integrand (spectrally accurate)."""
    w = float(w)
    n = nodes or int(2 * abs(w) + 64)
    theta = TWO_PI * np.arange(n) / n
    return complex(TWO_PI * np.mean(np.exp(1j * w * np.cos(theta))))


def circle_fourier_leading(w) -> np.ndarray | float:
    """Stationary-phase leading term (2 pi / w)^{1/2} sum_pm exp(pm i (w - pi/4)).

    The two critical points theta = 0, pi each contribute sqrt(2 pi / w) with the
    phases -+ pi/4; the sum is real.
    """
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.sqrt(TWO_PI / np.abs(w)) * 2.0 * np.cos(np.abs(w) - math.pi / 4)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StationaryPhaseReport:
    w: np.ndarray
    exact: np.ndarray
    leading: np.ndarray
    scaled_error: np.ndarray

    @property
    def constant(self) -> float:
        return float(np.max(self.scaled_error))


def stationary_phase_error(w_min: float = 2.0, w_max: float = 200.0,
                           n: int = 20001) -> StationaryPhaseReport:
    """w^{3/2} |2 pi J0(w) - leading(w)| on a dense grid."""
    w = np.linspace(w_min, w_max, n)
    exact = circle_fourier(w)
    lead = circle_fourier_leading(w)
    return StationaryPhaseReport(w, exact, lead, w ** 1.5 * np.abs(exact - lead))


# --- Euclidean smoothed kernel ---------------------------------------------------

def _frequency_range(chi: ChiWindow, T: float, lam: float, tol: float) -> tuple[float, float]:
    half = chi.cutoff(tol) / T
    return max(0.0, lam - half), lam + half


def euclidean_smoothed_kernel(chi: ChiWindow, T: float, lam: float, r, *,
                              symmetric: bool = True, tol: float = 1e-15,
                              window: Optional[Callable] = None) -> np.ndarray | float:
    """Radial kernel of the smoothed projector on R^2 at distance(s) ``r``.

    Computes ``(2 pi)^{-1} int_0^inf J0(r s) F(s) s ds`` with
    ``F(s) = chi(T(s - lam)) [+ chi(T(s + lam))]`` by Gauss-Legendre panels
    spanning the window's essential support.  ``window`` swaps chi for another
    profile of no slower decay (e.g. ``chi.rho``).
    """
    if T <= 0 or lam <= 0:
        raise ValueError("T and lam must be positive")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    f = window if window is not None else chi.chi
    lo, hi = _frequency_range(chi, T, lam, tol)
    s, w = _euclid_rule(lo, hi, float(r_arr.max()) + T / 4.0)
    F = f(T * (s - lam))
    if symmetric:
        F = F + f(T * (s + lam))
    weights = w * F * s / TWO_PI
    out = np.empty_like(r_arr)
    step = max(1, 4_000_000 // s.size)
    for i in range(0, r_arr.size, step):
        out[i:i + step] = j0(np.outer(r_arr[i:i + step], s)) @ weights
    out = out.reshape(np.shape(r)) if np.ndim(r) else out[0]
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=64)
def _euclid_rule(lo: float, hi: float, omega: float):
    return oscillatory_rule(lo, hi, omega, order=20, phase_per_panel=10.0)


# --- method of images ------------------------------------------------------------

@dataclass(frozen=True)
class ImagesResult:
    value: float
    n_terms: int
    radius: float


def images_kernel(group: DeckGroup, chi: ChiWindow, T: float, lam: float, x, y, *,
                  tol: float = 1e-15, budget: int = 2_000_000,
                  kernel: Optional[Callable] = None) -> ImagesResult:
    """Quotient kernel as a sum of cover kernels over deck images of ``y``.

    The symmetric smoothed kernel vanishes beyond ``T/4``, so only images with
    ``|x - alpha(y)| <= T/4`` contribute; the enumeration radius is
    ``T/4 + |x - y|``.  ``kernel(r)`` overrides the Euclidean radial kernel.
    """
    if group.kind == "fuchsian":
        raise ValueError("images kernel needs a flat quotient")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    radius = T / 4.0 + float(np.linalg.norm(x - y))
    enum = enumerate_deck(group, radius, budget)
    trans = enum.translations
    r = np.hypot(*(x[None, :] - (y[None, :] + trans)).T)
    if kernel is None:
        vals = euclidean_smoothed_kernel(chi, T, lam, r, symmetric=True, tol=tol)
    else:
        vals = kernel(r)
    vals = np.atleast_1d(vals)
    order = np.argsort(enum.displacements, kind="stable")
    return ImagesResult(float(np.sum(vals[order])), len(enum), radius)


# --- cutoff profile beta ----------------------------------------------------------

def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def _smooth_step_prime(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    ui = u[inside]
    a = np.exp(-1.0 / ui)
    b = np.exp(-1.0 / (1.0 - ui))
    da = a / ui ** 2
    db = -b / (1.0 - ui) ** 2
    out[inside] = (da * b - a * db) / (a + b) ** 2
    return out


def beta(x) -> np.ndarray:
    """Cutoff equal to 1 on [-3/4, 3/4] and 0 outside (-1, 1); C-infinity."""
    x = np.abs(np.asarray(x, dtype=float))
    return 1.0 - _smooth_step(4.0 * (x - 0.75))


def beta_prime(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return -4.0 * np.sign(x) * _smooth_step_prime(4.0 * (np.abs(x) - 0.75))


# --- windowed kernels --------------------------------------------------------------

@dataclass(frozen=True)
class WindowedKernel:
    """Window ``psi(s) = beta((s - j ell)/scale) rho_hat(s/T)`` paired with e^{-is lam}.

    ``j = 0`` with ``T/2 <= 3/4 scale`` makes beta identically one on the
    support, which reduces the kernel to ``rho(T(P - lam)) + rho(T(P + lam))``.
    """

    chi: ChiWindow
    T: float
    lam: float
    j: int = 0
    ell: float = 0.0
    scale: float = 5.0

    def __post_init__(self):
        if self.T <= 0 or self.lam <= 0:
            raise ValueError("T and lam must be positive")
        a, b = self.support
        if b <= a:
            raise ValueError("window support is empty")

    @property
    def centre(self) -> float:
        return self.j * self.ell

    @property
    def support(self) -> tuple[float, float]:
        c = self.centre
        return max(c - self.scale, -0.5 * self.T), min(c + self.scale, 0.5 * self.T)

    @property
    def beta_is_trivial(self) -> bool:
        a, b = self.support
        c = self.centre
        return max(abs(a - c), abs(b - c)) <= 0.75 * self.scale

    def psi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return beta((s - self.centre) / self.scale) * self.chi.rho_hat(s / self.T)

    def psi_prime(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        b = beta((s - self.centre) / self.scale)
        db = beta_prime((s - self.centre) / self.scale) / self.scale
        return (db * self.chi.rho_hat(s / self.T)
                + b * self.chi.rho_hat_prime(s / self.T) / self.T)

    def psi_tilde_prime(self, s) -> np.ndarray:
        """d/ds [psi(s) e^{-is lam}]."""
        s = np.asarray(s, dtype=float)
        return (self.psi_prime(s) - 1j * self.lam * self.psi(s)) * np.exp(-1j * self.lam * s)


def windowed_kernel_K(spec: WindowedKernel, x, y, method: str = "time") -> complex:
    """``(1/(pi T)) int psi(s) e^{-is lam} cos(s P)(x, y) ds`` on R^2.

    ``method="time"`` integrates the window against the explicit 2-D wave
    kernel; ``method="frequency"`` integrates the window's cosine transform
    against the radial spectral measure.
    """
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return windowed_kernel_radial(spec, r, method)


def windowed_kernel_radial(spec: WindowedKernel, r: float, method: str = "time") -> complex:
    if method == "time":
        return _windowed_time(spec, r)
    if method == "frequency":
        return _windowed_frequency(spec, r)
    raise ValueError(f"unknown method {method!r}")


def _u_rule(r: float, s_max: float, lam: float, order: int = 20):
    """Nodes in u for s = r cosh u on [r, s_max], panels keeping phase and u-steps small."""
    if r <= 0:
        raise ValueError("r must be positive")
    u_max = math.acosh(max(s_max / r, 1.0))
    if u_max == 0.0:
        return np.zeros(0), np.zeros(0)
    s_breaks = np.arange(r, s_max, 8.0 / max(lam, 1.0))
    u_breaks = np.arccosh(np.clip(s_breaks / r, 1.0, None))
    u_breaks = np.union1d(u_breaks, np.arange(0.0, u_max, 0.25))
    u_breaks = np.union1d(u_breaks, [u_max])
    x, w = gauss_legendre(0.0, 1.0, order)
    width = np.diff(u_breaks)
    keep = width > 0
    lo, width = u_breaks[:-1][keep], width[keep]
    nodes = (lo[:, None] + width[:, None] * x[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def _windowed_time(spec: WindowedKernel, r: float) -> complex:
    a, b = spec.support
    s_max = max(abs(a), abs(b))
    if r >= s_max:
        return 0.0 + 0.0j
    if r == 0.0:
        r = 1e-12 * s_max
    u, w = _u_rule(r, s_max, spec.lam)
    s = r * np.cosh(u)
    d = spec.psi_tilde_prime(s) - spec.psi_tilde_prime(-s)
    integral = complex(w @ d)
    return -integral / (TWO_PI * math.pi * spec.T)


def window_cosine_transform(spec: WindowedKernel, sigma: np.ndarray) -> np.ndarray:
    """C(sigma) = int psi(s) e^{-is lam} cos(s sigma) ds by Gauss-Legendre panels."""
    a, b = spec.support
    sigma = np.asarray(sigma, dtype=float)
    omega = spec.lam + float(np.max(np.abs(sigma))) + 1.0
    s, w = oscillatory_rule(a, b, omega, order=20, phase_per_panel=8.0)
    ws = w * spec.psi(s) * np.exp(-1j * spec.lam * s)
    out = np.empty(sigma.shape, dtype=complex)
    flat_sig, flat_out = sigma.ravel(), out.ravel()
    step = max(1, 4_000_000 // s.size)
    for i in range(0, flat_sig.size, step):
        flat_out[i:i + step] = np.cos(np.outer(flat_sig[i:i + step], s)) @ ws
    return flat_out.reshape(sigma.shape)


def _cosine_transform_reach(spec: WindowedKernel, start: float, tol: float) -> float:
    """Offset h from lam beyond which |C| stays below ~tol relative to its peak."""
    peak = abs(window_cosine_transform(spec, np.array([spec.lam]))[0])
    h = start
    while h < 1e5:
        probe = spec.lam + h * np.array([-1.0, -0.75, 0.75, 1.0])
        probe = probe[probe >= 0]
        if np.max(np.abs(window_cosine_transform(spec, probe))) < 10 * tol * peak:
            return h
        h *= 1.5
    return h


def _windowed_frequency(spec: WindowedKernel, r: float, tol: float = 1e-15) -> complex:
    chi = spec.chi
    # rho = chi^2 decays where chi reaches sqrt(tol)
    half = chi.cutoff(math.sqrt(tol)) / spec.T
    if not spec.beta_is_trivial:
        half = _cosine_transform_reach(spec, half, tol)
    lo, hi = max(0.0, spec.lam - half), spec.lam + half
    a, b = spec.support
    s_extent = max(abs(a), abs(b))
    sig, w = oscillatory_rule(lo, hi, r + s_extent + 1e-3, order=20, phase_per_panel=8.0)
    if spec.beta_is_trivial:
        C = math.pi * spec.T * (chi.rho(spec.T * (sig - spec.lam))
                                + chi.rho(spec.T * (sig + spec.lam)))
    else:
        C = window_cosine_transform(spec, sig)
    val = (w * j0(r * sig) * sig) @ C
    return complex(val) / (2.0 * math.pi ** 2 * spec.T)


def torus_windowed_kernel(spec: WindowedKernel, x, y, method: str = "time",
                          group: Optional[DeckGroup] = None) -> complex:
    """Quotient windowed kernel: sum over lattice images within the window support."""
    group = group or DeckGroup.lattice()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b = spec.support
    reach = max(abs(a), abs(b))
    enum = enumerate_deck(group, reach + float(np.linalg.norm(x - y)))
    total = 0.0 + 0.0j
    for t in enum.translations:
        r = float(np.linalg.norm(x - (y + t)))
        if r < reach:
            total += windowed_kernel_radial(spec, r, method)
    return total


# --- Hadamard leading coefficient ---------------------------------------------------

@dataclass(frozen=True)
class HadamardLeadingReport:
    kappa: float
    d: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray

    @property
    def constant(self) -> float:
        return float(np.max(self.ratio))

    @property
    def nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.ratio) <= 1e-12 * np.max(self.ratio)))


def hadamard_leading_check(sol: JacobiSolution, lam: float, T: float, j: int, ell: float,
                           kappa: float = 0.0, n: int = 41) -> HadamardLeadingReport:
    """Compare w0(d) d^{-1/2} with max(d, e^{kappa d})^{-1/2} on d in [j ell - 1, j ell + 1].

    ``lam`` and ``T`` only bound the admissible displacements (``j ell <= T/2``).
    """
    centre = j * ell
    if centre > 0.5 * T + 1e-12:
        raise ValueError("image displacement beyond the time window")
    d = np.linspace(max(centre - 1.0, 1e-3), centre + 1.0, n)
    if d[-1] > sol.t_max:
        raise ValueError("Jacobi solution does not reach the requested distances")
    lhs = np.asarray(w0_coefficient(sol, d)) / np.sqrt(d)
    rhs = 1.0 / np.sqrt(np.maximum(d, np.exp(kappa * d)))
    return HadamardLeadingReport(float(kappa), d, lhs, rhs, lhs / rhs)


# --- Hadamard terms E_nu --------------------------------------------------------------

# An expression sum_i coef_i x^p_i trig_i(x), trig in {"sin", "cos", "one"}.
_Expr = dict


def _add(acc: _Expr, key, coef: Fraction) -> None:
    acc[key] = acc.get(key, Fraction(0)) + coef
    if acc[key] == 0:
        del acc[key]


def _integrate_term(p: int, trig: str) -> _Expr:
    """int_0^x y^p trig(y) dy as an expression."""
    out: _Expr = {}
    if p < 0:
        raise ValueError("negative power in Hadamard recursion")
    if trig == "one":
        _add(out, (p + 1, "one"), Fraction(1, p + 1))
    elif trig == "cos":
        # x^p sin x - p int y^{p-1} sin y
        _add(out, (p, "sin"), Fraction(1))
        if p:
            for k, c in _integrate_term(p - 1, "sin").items():
                _add(out, k, -p * c)
    else:
        # -x^p cos x + p int y^{p-1} cos y, with int_0^x sin = 1 - cos x
        if p == 0:
            _add(out, (0, "one"), Fraction(1))
            _add(out, (0, "cos"), Fraction(-1))
        else:
            _add(out, (p, "cos"), Fraction(-1))
            for k, c in _integrate_term(p - 1, "cos").items():
                _add(out, k, p * c)
    return out


@lru_cache(maxsize=None)
def hadamard_profile(nu: int) -> tuple:
    """f_nu(x) = x^{-(2 nu - 1)} / 2 * int_0^x y^{2 nu - 2} f_{nu-1}(y) dy as (shift, terms).

    ``f_0 = cos``; the returned terms give ``f_nu(x) = x^{-shift} sum c x^p trig(x)``.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu == 0:
        return 0, (((0, "cos"), Fraction(1)),)
    shift_prev, terms_prev = hadamard_profile(nu - 1)
    acc: _Expr = {}
    for (p, trig), c in terms_prev:
        for k, cc in _integrate_term(2 * nu - 2 + p - shift_prev, trig).items():
            _add(acc, k, c * cc / 2)
    return 2 * nu - 1, tuple(sorted(acc.items()))


@lru_cache(maxsize=None)
def hadamard_series(nu: int, terms: int = 40) -> np.ndarray:
    """Taylor coefficients of f_nu in x^2: c_{nu,k} = c_{nu-1,k} / (2(2k + 2nu - 1))."""
    c = np.array([(-1) ** k / math.factorial(2 * k) for k in range(terms)], dtype=float)
    for v in range(1, nu + 1):
        c = c / (2.0 * (2 * np.arange(terms) + 2 * v - 1))
    return c


def hadamard_f(nu: int, x) -> np.ndarray:
    """f_nu(x), closed form for |x| >= 2 and the even Taylor series below."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < 2.0
    if np.any(small):
        c = hadamard_series(nu)
        out[small] = np.polynomial.polynomial.polyval(ax[small] ** 2, c)
    big = ~small
    if np.any(big):
        shift, terms = hadamard_profile(nu)
        xb = ax[big]
        acc = np.zeros_like(xb)
        for (p, trig), c in terms:
            base = xb ** p
            if trig == "sin":
                base = base * np.sin(xb)
            elif trig == "cos":
                base = base * np.cos(xb)
            acc += float(c) * base
        out[big] = acc / xb ** shift
    return out


@dataclass(frozen=True)
class HadamardTerm:
    """E_nu through its Fourier multiplier ``m_nu(t, sigma) = t^{2 nu} f_nu(t sigma)``.

    ``E_0 = cos(t P)``, ``2 E_nu(t) = t int_0^t E_{nu-1}(s) ds``.  For ``nu >= 1``
    the kernel is ``c_nu |t| (t^2 - r^2)_+^{nu - 3/2}`` with ``c_1 = 1/(4 pi)``.
    Only the leading coefficient w_0 is computed anywhere; w_nu for nu >= 1 is
    not modelled.
    """

    nu: int

    def multiplier(self, t, sigma) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        return t ** (2 * self.nu) * hadamard_f(self.nu, t * sigma)

    def recursed_multiplier(self, t: float, sigma: float, nodes: int = 64) -> float:
        """(t/2) int_0^t m_{nu-1}(s, sigma) ds by Gauss-Legendre."""
        if self.nu == 0:
            return float(np.cos(t * sigma))
        if t == 0:
            return 0.0
        s, w = gauss_legendre(0.0, t, nodes)
        prev = HadamardTerm(self.nu - 1)
        return 0.5 * t * float(w @ prev.multiplier(s, sigma))

    @property
    def kernel_constant(self) -> float:
        if self.nu < 1:
            raise ValueError("E_0 is a distribution")
        c = 1.0 / (4.0 * math.pi)
        for v in range(1, self.nu):
            c /= 2.0 * (2 * v - 1)
        return c

    def time_kernel(self, t, r) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        q = t * t - np.asarray(r, dtype=float) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.kernel_constant * np.abs(t) * np.where(q > 0, q, np.nan) ** (self.nu - 1.5)
        return np.where(q > 0, val, 0.0)

    # pairings <psi(s) e^{-is lam}, E_nu(s, r)>
    def pairing_frequency(self, psi: "GaussianWindow", lam: float, r: float,
                          sigma_halfwidth: float = 80.0) -> complex:
        s_lo, s_hi = psi.support
        s, ws = oscillatory_rule(s_lo, s_hi, lam + sigma_halfwidth + lam, order=20,
                                 phase_per_panel=6.0)
        ws = ws * psi(s) * np.exp(-1j * lam * s)
        lo = max(0.0, lam - sigma_halfwidth)
        sig, wsig = oscillatory_rule(lo, lam + sigma_halfwidth, r + s_hi, order=20,
                                     phase_per_panel=6.0)
        C = np.empty(sig.size, dtype=complex)
        step = max(1, 2_000_000 // s.size)
        for i in range(0, sig.size, step):
            C[i:i + step] = self.multiplier(s[None, :], sig[i:i + step, None]) @ ws
        return complex((wsig * j0(r * sig) * sig) @ C) / TWO_PI

    def pairing_time(self, psi: "GaussianWindow", lam: float, r: float) -> complex:
        s_lo, s_hi = psi.support
        if s_hi <= r:
            return 0.0j
        u, w = _u_rule(r, s_hi, lam)
        s = r * np.cosh(u)
        # ds (s^2 - r^2)^{nu - 3/2} = (r sinh u)^{2 nu - 2} du
        jac = (r * np.sinh(u)) ** (2 * self.nu - 2)
        vals = psi(s) * np.exp(-1j * lam * s) * self.kernel_constant * s * jac
        return complex(w @ vals)


@dataclass(frozen=True)
class GaussianWindow:
    """psi(s) = exp(-(s - centre)^2 / (2 width^2)), truncated at ``cut`` widths."""

    centre: float = 1.0
    width: float = 0.25
    cut: float = 8.5

    @property
    def support(self) -> tuple[float, float]:
        return self.centre - self.cut * self.width, self.centre + self.cut * self.width

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.exp(-0.5 * ((s - self.centre) / self.width) ** 2)


@dataclass(frozen=True)
class TailOrderFit:
    nu: int
    lams: np.ndarray
    magnitudes: np.ndarray
    time_side: np.ndarray
    order: float
    expected: float

    @property
    def deviation(self) -> float:
        return abs(self.order - self.expected)


def hadamard_tail_order(nu: int, lams: Sequence[float] = (50, 75, 100, 150, 200, 300, 400),
                        r: float = 1.0, psi: Optional[GaussianWindow] = None) -> TailOrderFit:
    """Fit the lam-decay of |<psi e^{-is lam}, E_nu(s, r)>| (Fourier side).

    The time-side value from the closed-form kernel is returned alongside as a
    cross-check.  The window is centred at ``s = r`` where E_nu is singular;
    that singularity alone drives the decay ``lam^{1/2 - nu}``.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    lams = np.asarray(sorted(lams), dtype=float)
    if lams.size < 3:
        raise ValueError("fit window too short")
    psi = psi or GaussianWindow(centre=r)
    term = HadamardTerm(nu)
    freq = np.array([term.pairing_frequency(psi, lam, r) for lam in lams])
    time = np.array([term.pairing_time(psi, lam, r) for lam in lams])
    slope = float(np.polyfit(np.log(lams), np.log(np.abs(freq)), 1)[0])
    return TailOrderFit(nu, lams, np.abs(freq), time, slope, 0.5 - nu)


# --- CSV export -------------------------------------------------------------------

KERNEL_GRID_COLUMNS = ("r", "lambda", "T", "j", "real", "imag", "bound_ratio")


def write_kernel_grid(path: str | Path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(KERNEL_GRID_COLUMNS)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
