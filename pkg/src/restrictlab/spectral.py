"""Explicit eigenfunction families, the smoothing window, and smoothed projectors.

Conventions: ``chi(s) = (1/2pi) int chi_hat(t) e^{ist} dt`` with ``chi_hat`` supported
in ``[-1/4, 1/4]``; the unit sphere carries ``lambda = sqrt(l(l+1))`` and the unit
square torus ``R^2/Z^2`` carries ``lambda = 2 pi sqrt(n)``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .quadrature import composite_gauss, gauss_legendre

SUPPORT = 0.25
_SPLINE_H = 0.1
_BLOCK = 64.0
_SPLINE_LIMIT = 1.0e4


# --- the window chi ------------------------------------------------------------

def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    u = 4.0 * t
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _bump_log_derivative(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(4.0 * t) < 1.0
    ti = t[inside]
    out[inside] = -32.0 * ti / (1.0 - 16.0 * ti * ti) ** 2
    return out


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    t, w = composite_gauss(-SUPPORT, SUPPORT, SUPPORT / 8, 20)
    return float(w @ _bump(t))


class ChiWindow:
    """The pair (chi, chi_hat) and the squared window rho = chi^2.

    ``chi_hat(t) = c exp(-1/(1-(4t)^2))`` on ``|t| < 1/4`` with ``c`` chosen so
    that ``chi(0) = 1``.  ``chi`` is evaluated from quintic splines fitted on
    lazily built blocks of width 64 (``|s| <= 1e4``) and by direct quadrature
    beyond.  Under this convention ``rho_hat = (chi_hat * chi_hat) / (2 pi)``.
    """

    def __init__(self):
        self.c = 2.0 * math.pi / _bump_mass()
        self._blocks: dict[int, object] = {}
        self._lock = threading.Lock()
        self._cutoffs: dict[float, float] = {}

    def __repr__(self) -> str:
        return "ChiWindow(support=1/4)"

    def __eq__(self, other) -> bool:
        return isinstance(other, ChiWindow)

    def __hash__(self) -> int:
        return hash("ChiWindow")

    # transforms
    def chi_hat(self, t) -> np.ndarray:
        return self.c * _bump(t)

    def chi_hat_prime(self, t) -> np.ndarray:
        return self.chi_hat(t) * _bump_log_derivative(t)

    def chi_direct(self, s) -> np.ndarray:
        """chi by Gauss-Legendre quadrature of the cosine transform."""
        s = np.abs(np.asarray(s, dtype=float))
        flat = s.ravel()
        smax = float(flat.max()) if flat.size else 0.0
        panels = max(16, int(math.ceil(smax * SUPPORT / 8.0)))
        t, w = composite_gauss(0.0, SUPPORT, SUPPORT / panels, 20)
        wb = w * self.chi_hat(t) / math.pi
        out = np.empty_like(flat)
        step = max(1, 2_000_000 // t.size)
        for i in range(0, flat.size, step):
            out[i:i + step] = np.cos(np.outer(flat[i:i + step], t)) @ wb
        return out.reshape(s.shape)

    def _block(self, b: int):
        spl = self._blocks.get(b)
        if spl is not None:
            return spl
        lo = b * _BLOCK - 1.0
        hi = (b + 1) * _BLOCK + 1.0
        n = int(round((hi - lo) / _SPLINE_H)) + 1
        grid = np.linspace(lo, hi, n)
        spl = make_interp_spline(grid, self.chi_direct(grid), k=5)
        with self._lock:
            self._blocks.setdefault(b, spl)
        return self._blocks[b]

    def chi(self, s) -> np.ndarray | float:
        """chi(s), real and even."""
        s_arr = np.abs(np.asarray(s, dtype=float))
        flat = s_arr.ravel()
        out = np.empty_like(flat)
        far = flat > _SPLINE_LIMIT
        if np.any(far):
            out[far] = self.chi_direct(flat[far])
        near = ~far
        if np.any(near):
            idx = np.nonzero(near)[0]
            blocks = np.floor(flat[idx] / _BLOCK).astype(int)
            order = np.argsort(blocks, kind="stable")
            idx, blocks = idx[order], blocks[order]
            starts = np.flatnonzero(np.r_[True, blocks[1:] != blocks[:-1]])
            ends = np.r_[starts[1:], idx.size]
            for a, e in zip(starts, ends):
                sel = idx[a:e]
                out[sel] = self._block(int(blocks[a]))(flat[sel])
        out = out.reshape(s_arr.shape)
        return float(out) if out.ndim == 0 else out

    __call__ = chi

    def rho(self, s):
        return self.chi(s) ** 2

    def rho_hat(self, t) -> np.ndarray:
        """(chi_hat * chi_hat)(t) / (2 pi); supported in [-1/2, 1/2]."""
        return self._convolve(t, self.chi_hat)

    def rho_hat_prime(self, t) -> np.ndarray:
        return self._convolve(t, self.chi_hat_prime)

    def _convolve(self, t, second: Callable) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.zeros_like(flat)
        inside = np.abs(flat) < 2 * SUPPORT
        if np.any(inside):
            ti = flat[inside]
            lo = np.maximum(-SUPPORT, ti - SUPPORT)
            hi = np.minimum(SUPPORT, ti + SUPPORT)
            x, w = gauss_legendre(0.0, 1.0, 20)
            panels = 8
            acc = np.zeros_like(ti)
            width = (hi - lo) / panels
            for p in range(panels):
                u = lo[:, None] + width[:, None] * (p + x[None, :])
                acc += (self.chi_hat(u) * second(ti[:, None] - u)) @ w * width
            out[inside] = acc / (2.0 * math.pi)
        return out.reshape(t.shape)

    @cached_property
    def envelope_coefficients(self) -> np.ndarray:
        """Fit of log|chi| peaks to a + b sqrt(s) + c log s on 50 <= s <= 2600.

        Beyond about s = 3000 quadrature noise (~1e-15) swamps chi itself, so
        tails are extrapolated from this fit.
        """
        from scipy.signal import argrelmax

        g = np.arange(50.0, 2600.0, 0.25)
        v = np.abs(self.chi_direct(g))
        i = argrelmax(v)[0]
        s = g[i]
        design = np.stack([np.ones_like(s), np.sqrt(s), np.log(s)], axis=1)
        coef, *_ = np.linalg.lstsq(design, np.log(v[i]), rcond=None)
        return coef

    def envelope(self, s) -> np.ndarray:
        """Upper envelope of |chi| (twice the fitted peak law) for s >= 50."""
        a, b, c = self.envelope_coefficients
        s = np.asarray(s, dtype=float)
        return 2.0 * np.exp(a + b * np.sqrt(s) + c * np.log(s))

    def cutoff(self, tol: float = 1e-15) -> float:
        """S with |chi(s)| < tol for |s| >= S (scan below 2600, envelope beyond)."""
        if tol in self._cutoffs:
            return self._cutoffs[tol]
        grid = np.arange(0.0, 2600.0, 0.5)
        above = np.nonzero(np.abs(self.chi_direct(grid)) >= tol)[0]
        s = float(grid[above[-1]] + 0.5) if above.size else 0.0
        if self.envelope(2600.0) >= tol:
            from scipy.optimize import brentq

            s = max(s, brentq(lambda x: math.log(self.envelope(x) / tol), 2600.0, 1e6))
        self._cutoffs[tol] = s
        return s

    def multiplier(self, T: float, lam: float, symmetric: bool = False) -> Callable:
        """sigma -> chi(T(sigma - lam)) [+ chi(T(sigma + lam))]."""
        if symmetric:
            return lambda sig: self.chi(T * (np.asarray(sig) - lam)) + self.chi(
                T * (np.asarray(sig) + lam))
        return lambda sig: self.chi(T * (np.asarray(sig) - lam))


_DEFAULT_CHI: Optional[ChiWindow] = None


def build_chi() -> ChiWindow:
    """Shared window instance (its spline cache is reused across calls)."""
    global _DEFAULT_CHI
    if _DEFAULT_CHI is None:
        _DEFAULT_CHI = ChiWindow()
    return _DEFAULT_CHI


# --- spherical harmonics -------------------------------------------------------

def normalized_legendre(l: int, m: int, x) -> np.ndarray:
    """Fully normalised P_l^m(x) with int_{S^2} |P e^{im phi}|^2 = 1 (no Condon-Shortley)."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid degree/order ({l}, {m})")
    m = abs(m)
    x = np.asarray(x, dtype=float)
    sx = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    # P_m^m = sqrt((2m+1)/(4pi) (2m)!/(4^m (m!)^2)) sin^m
    logc = 0.5 * (math.log(2 * m + 1) - math.log(4 * math.pi)
                  + math.lgamma(2 * m + 1) - m * math.log(4.0) - 2 * math.lgamma(m + 1))
    with np.errstate(divide="ignore"):
        pmm = np.exp(logc + m * np.log(sx)) if m else np.full_like(x, math.exp(logc))
    if l == m:
        return pmm
    p_prev, p = pmm, x * math.sqrt(2 * m + 3) * pmm
    for ll in range(m + 2, l + 1):
        a = math.sqrt((4 * ll * ll - 1) / (ll * ll - m * m))
        b = math.sqrt(((ll - 1) ** 2 - m * m) / (4 * (ll - 1) ** 2 - 1))
        p_prev, p = p, a * (x * p - b * p_prev)
    return p


@dataclass(frozen=True)
class SphereHarmonic:
    """Complex spherical harmonic ``amplitude * Y_l^m(theta, phi)`` on the unit sphere.

    Points are chart coordinates ``(theta, phi)`` with theta the colatitude.
    """

    l: int
    m: int
    amplitude: complex = 1.0
    surface: str = field(default="sphere", init=False)

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid spherical harmonic ({self.l}, {self.m})")

    @property
    def eigenvalue(self) -> float:
        return math.sqrt(self.l * (self.l + 1))

    @property
    def degree(self) -> int:
        return self.l

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        theta, phi = pts[..., 0], pts[..., 1]
        radial = normalized_legendre(self.l, self.m, np.cos(theta))
        return self.amplitude * radial * np.exp(1j * self.m * phi)

    def l2_norm(self) -> float:
        return abs(self.amplitude)

    def scaled(self, factor: complex) -> "SphereHarmonic":
        return SphereHarmonic(self.l, self.m, self.amplitude * factor)

    def to_dict(self) -> dict:
        return {"kind": "sphere-harmonic", "l": self.l, "m": self.m}


def sphere_harmonic(l: int, kind: str | int = "highest") -> SphereHarmonic:
    """``kind`` is ``"highest"`` (m = l), ``"zonal"`` (m = 0) or an integer order."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    if kind == "highest":
        return SphereHarmonic(l, l)
    if kind == "zonal":
        return SphereHarmonic(l, 0)
    if isinstance(kind, (int, np.integer)) and not isinstance(kind, bool):
        return SphereHarmonic(l, int(kind))
    raise ValueError(f"unknown harmonic kind {kind!r}")


# --- torus lattice circles -----------------------------------------------------

@dataclass(frozen=True)
class LatticeCircle:
    n: int
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def as_tuples(self) -> list[tuple[int, int]]:
        return [tuple(int(v) for v in p) for p in self.points]


@lru_cache(maxsize=4096)
def _circle_points(n: int) -> tuple:
    pts = []
    r = math.isqrt(n)
    for k1 in range(-r, r + 1):
        rest = n - k1 * k1
        k2 = math.isqrt(rest)
        if k2 * k2 == rest:
            pts.append((k1, k2))
            if k2:
                pts.append((k1, -k2))
    return tuple(sorted(pts))


def lattice_circle(n: int) -> LatticeCircle:
    """All k in Z^2 with |k|^2 = n, sorted lexicographically."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = _circle_points(int(n))
    return LatticeCircle(int(n), np.array(pts, dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True, eq=False)
class TorusEigenfunction:
    """Finite exponential sum ``sum_k c_k exp(2 pi i k.x)`` on R^2/Z^2.

    With all modes on one lattice circle it is an eigenfunction with
    ``lambda = 2 pi sqrt(n)``; mixed circles are allowed for linearity checks.
    """

    modes: np.ndarray
    coeffs: np.ndarray
    surface: str = field(default="flat-torus", init=False)

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, 2)
        coeffs = np.asarray(self.coeffs, dtype=complex).ravel()
        if modes.shape[0] != coeffs.shape[0]:
            raise ValueError("one coefficient per mode")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)

    @cached_property
    def norms_sq(self) -> np.ndarray:
        return np.sum(self.modes ** 2, axis=1)

    @property
    def is_eigenfunction(self) -> bool:
        return len(self.modes) > 0 and bool(np.all(self.norms_sq == self.norms_sq[0]))

    @property
    def n(self) -> int:
        if not self.is_eigenfunction:
            raise ValueError("modes lie on several lattice circles")
        return int(self.norms_sq[0])

    @property
    def eigenvalue(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.n)

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * math.pi * np.sqrt(self.norms_sq)

    @property
    def degree(self) -> int:
        return self.n

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        phase = 2.0 * math.pi * (pts @ self.modes.T.astype(float))
        return np.exp(1j * phase) @ self.coeffs

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def with_coeffs(self, coeffs) -> "TorusEigenfunction":
        return TorusEigenfunction(self.modes, coeffs)

    def scaled(self, factor: complex) -> "TorusEigenfunction":
        return self.with_coeffs(self.coeffs * factor)

    def __add__(self, other: "TorusEigenfunction") -> "TorusEigenfunction":
        table: dict[tuple, complex] = {}
        for e in (self, other):
            for k, c in zip(map(tuple, e.modes.tolist()), e.coeffs):
                table[k] = table.get(k, 0.0) + c
        keys = sorted(table)
        return TorusEigenfunction(np.array(keys, dtype=np.int64).reshape(-1, 2),
                                  np.array([table[k] for k in keys]))

    def to_dict(self) -> dict:
        return {"kind": "torus-sum",
                "modes": self.modes.tolist(),
                "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TorusEigenfunction":
        coeffs = [complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                  for c in data["coeffs"]]
        return cls(np.array(data["modes"], dtype=np.int64), np.array(coeffs))


def torus_eigenfunction(n: int, coefficients: Optional[Mapping] = None,
                        normalize: bool = True) -> TorusEigenfunction:
    """Lattice-circle sum; default coefficients are all ones."""
    circle = lattice_circle(n)
    if len(circle) == 0:
        raise ValueError(f"no lattice points with |k|^2 = {n}")
    pts = circle.as_tuples()
    if coefficients is None:
        coeffs = np.ones(len(pts), dtype=complex)
    else:
        allowed = set(pts)
        for k in coefficients:
            if tuple(k) not in allowed:
                raise ValueError(f"mode {tuple(k)} is not on the circle |k|^2 = {n}")
        coeffs = np.array([complex(coefficients.get(k, 0.0)) for k in pts])
    e = TorusEigenfunction(circle.points, coeffs)
    if normalize:
        nrm = e.l2_norm()
        if nrm == 0:
            raise ValueError("all coefficients vanish")
        e = e.scaled(1.0 / nrm)
    return e


def eigenfunction_from_dict(data: Mapping):
    kind = data["kind"]
    if kind == "sphere-harmonic":
        return SphereHarmonic(int(data["l"]), int(data["m"]))
    if kind == "torus-sum":
        return TorusEigenfunction.from_dict(data)
    raise ValueError(f"unknown eigenfunction kind {kind!r}")


# --- smoothed projectors -------------------------------------------------------

def apply_spectral_multiplier(e, func: Callable):
    """Functional calculus m(sqrt(-Delta)) applied mode by mode."""
    if isinstance(e, SphereHarmonic):
        return e.scaled(complex(np.asarray(func(np.array([e.eigenvalue])))[0]))
    return e.with_coeffs(e.coeffs * func(e.frequencies))


def apply_projector(e, chi: ChiWindow, T: float, lam: float, symmetric: bool = False):
    """chi(T(sqrt(-Delta) - lam)) e, optionally plus the mirrored term at -lam."""
    return apply_spectral_multiplier(e, chi.multiplier(T, lam, symmetric))


@dataclass(frozen=True)
class KernelValue:
    """Kernel value(s) with the truncation bound and the number of modes summed."""

    value: complex | np.ndarray
    tail_bound: float
    n_terms: int


def projector_kernel(surface: str, chi: ChiWindow, T: float, lam: float, x, y, *,
                     symmetric: bool = False, tol: float = 1e-15,
                     max_tail: float = 1e-8, window: Optional[Callable] = None) -> KernelValue:
    """Eigen-expansion of the smoothed projector kernel at (x, y).

    The sum ``sum_j chi(T(lambda_j - lam)) e_j(x) conj(e_j(y))`` runs over every mode
    with ``|T(lambda_j - lam)|`` inside the window cutoff for ``tol``.  With
    ``symmetric`` the multiplier gains ``chi(T(lambda_j + lam))``, which is the
    cosine-transform form with finite propagation speed.  ``window`` replaces
    chi (for instance ``chi.rho``) and must decay at least as fast.  ``x`` and
    ``y`` may be single points or matching stacks of points.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    f = window if window is not None else chi.chi
    sig_max = lam + chi.cutoff(tol) / T
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    single = x.ndim == 1
    x2, y2 = np.atleast_2d(x), np.atleast_2d(y)
    if surface in ("flat-torus", "torus"):
        val, n = _torus_projector(f, T, lam, x2, y2, sig_max, symmetric)
        density = lambda s: s / (2 * math.pi)
    elif surface == "sphere":
        val, n = _sphere_projector(f, T, lam, x2, y2, sig_max, symmetric)
        density = lambda s: 2.0 * s
    else:
        raise ValueError(f"no eigenbasis for surface {surface!r}")
    tail = _tail_estimate(f, T, lam, sig_max, symmetric, density)
    if tail > max_tail:
        raise ValueError(f"truncation bound {tail:.3g} above {max_tail:.3g}")
    return KernelValue(complex(val[0]) if single else val, tail, n)


def _weights(f, T, lam, sig, symmetric):
    w = f(T * (sig - lam))
    if symmetric:
        w = w + f(T * (sig + lam))
    return w


def _tail_estimate(f, T, lam, sig_max, symmetric, density) -> float:
    """Window weight beyond sig_max integrated against the mode density."""
    s = np.linspace(sig_max, sig_max + 2000.0 / T, 4001)
    w = np.abs(_weights(f, T, lam, s, symmetric))
    return float(np.trapezoid(w * density(s), s) + w[0] * max(1.0, density(sig_max)))


def torus_weight_matrix(f, T, lam, sig_max, symmetric=False):
    """Dense (2K+1)^2 table of multiplier weights over the mode box, and the k range."""
    kmax = int(math.floor(sig_max / (2 * math.pi)))
    k = np.arange(-kmax, kmax + 1)
    n2 = k[:, None] ** 2 + k[None, :] ** 2
    inside = n2 <= (sig_max / (2 * math.pi)) ** 2
    uniq, inv = np.unique(n2[inside], return_inverse=True)
    wts = _weights(f, T, lam, 2 * math.pi * np.sqrt(uniq.astype(float)), symmetric)
    W = np.zeros(n2.shape)
    W[inside] = wts[inv]
    return k, W, int(np.count_nonzero(inside))


def _torus_projector(f, T, lam, x, y, sig_max, symmetric):
    k, W, n = torus_weight_matrix(f, T, lam, sig_max, symmetric)
    d = x - y
    ex = np.exp(2j * math.pi * np.outer(d[:, 0], k))
    ey = np.exp(2j * math.pi * np.outer(d[:, 1], k))
    val = np.einsum("pk,pk->p", ex @ W, ey)
    return val, n


def _sphere_projector(f, T, lam, x, y, sig_max, symmetric):
    from .geodesics import _sphere_frame

    px = _sphere_frame(x[:, 0], x[:, 1])[0]
    py = _sphere_frame(y[:, 0], y[:, 1])[0]
    c = np.clip(np.sum(px * py, axis=-1), -1.0, 1.0)
    lmax = int(math.floor(0.5 * (-1 + math.sqrt(1 + 4 * sig_max * sig_max))))
    ls = np.arange(lmax + 1)
    wts = _weights(f, T, lam, np.sqrt(ls * (ls + 1.0)), symmetric) * (2 * ls + 1) / (4 * math.pi)
    # Legendre P_l(c) by the three-term recurrence
    acc = wts[0] * np.ones_like(c)
    p_prev, p = np.ones_like(c), c
    if lmax >= 1:
        acc = acc + wts[1] * p
    for l in range(2, lmax + 1):
        p_prev, p = p, ((2 * l - 1) * c * p - (l - 1) * p_prev) / l
        acc = acc + wts[l] * p
    return acc.astype(complex), int(np.sum(2 * ls + 1))
