"""Restriction norms, surface L^p norms, direction filters, tubes and exponent fits."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .geodesics import GeodesicSegment, points_along, _sphere_chart, _sphere_frame
from .quadrature import gauss_legendre
from .spectral import (ChiWindow, SphereHarmonic, TorusEigenfunction,
                       apply_spectral_multiplier, normalized_legendre)
from .surfaces import SurfaceModel
from .wavekernel import beta

RATIO_COLUMNS = ("family", "param", "lambda", "X", "p_or_delta", "ratio")


class TubeOverlapWarning(UserWarning):
    """Tube width large enough that the tube covers the surface."""


def _bandwidth(e) -> float:
    """Largest spatial frequency of |e|^2 along a unit-speed curve."""
    if isinstance(e, SphereHarmonic):
        return 2.0 * e.l
    return 2.0 * float(np.max(e.frequencies)) if len(e.modes) else 0.0


def _check_surface(e, model: SurfaceModel) -> None:
    if e.surface != model.kind:
        raise ValueError(f"eigenfunction lives on {e.surface}, segment on {model.kind}")


def restrict_L2(e, seg: GeodesicSegment, nodes: Optional[int] = None) -> float:
    """(int_gamma |e|^2 ds)^{1/2} by Gauss-Legendre along the segment.

    The node count grows with the bandwidth of |e|^2 so that the rule is exact
    to rounding for the band-limited families.
    """
    _check_surface(e, seg.model)
    if nodes is None:
        nodes = max(seg.nodes, int(math.ceil(_bandwidth(e) * seg.length / 2.0)) + 32)
    s, w = gauss_legendre(-0.5 * seg.length, 0.5 * seg.length, nodes)
    pts = points_along(seg.model, seg.midpoint, seg.direction, s)
    return float(math.sqrt(w @ np.abs(e(pts)) ** 2))


# --- surface L^p -------------------------------------------------------------------

def surface_Lp(e, p: float, grid: int = 512, refine: int = 16) -> float:
    """L^p(M) norm; p = inf uses a dense grid followed by local refinement."""
    if not (p >= 2):
        raise ValueError("p must be >= 2")
    if isinstance(e, SphereHarmonic):
        return _sphere_Lp(e, p, grid)
    return _torus_Lp(e, p, grid, refine)


def _sphere_Lp(e: SphereHarmonic, p: float, grid: int) -> float:
    # |Y_l^m| does not depend on phi
    if math.isinf(p):
        theta = np.linspace(0.0, math.pi, max(grid, 8 * e.l + 1))
        vals = np.abs(normalized_legendre(e.l, e.m, np.cos(theta)))
        i = int(np.argmax(vals))
        best = vals[i]
        lo, hi = theta[max(i - 1, 0)], theta[min(i + 1, theta.size - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: -abs(normalized_legendre(e.l, e.m, np.cos(t))),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14})
            best = max(best, -res.fun)
        return float(abs(e.amplitude) * best)
    n = int(math.ceil((p * e.l + 2) / 2.0)) + 16
    x, w = gauss_legendre(-1.0, 1.0, n)
    vals = np.abs(normalized_legendre(e.l, e.m, x)) ** p
    return float(abs(e.amplitude) * (2.0 * math.pi * (w @ vals)) ** (1.0 / p))


def _torus_grid_values(e: TorusEigenfunction, M: int) -> np.ndarray:
    """e on the M x M grid j/M via an inverse FFT of the coefficient table."""
    table = np.zeros((M, M), dtype=complex)
    np.add.at(table, (e.modes[:, 0] % M, e.modes[:, 1] % M), e.coeffs)
    return np.fft.ifft2(table) * M * M


def _torus_Lp(e: TorusEigenfunction, p: float, grid: int, refine: int) -> float:
    kmax = int(np.max(np.abs(e.modes))) if len(e.modes) else 0
    if math.isinf(p):
        M = max(grid, 4 * kmax + 1)
        vals = np.abs(_torus_grid_values(e, M))
        best = float(vals.max())
        top = np.argsort(vals.ravel())[-refine:]
        for idx in top:
            x0 = np.array(np.unravel_index(idx, vals.shape), dtype=float) / M
            res = minimize(lambda x: -float(np.abs(e(x[None, :]))[0]) ** 2, x0,
                           method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
            best = max(best, math.sqrt(-res.fun))
        return best
    if float(p).is_integer() and int(p) % 2 == 0:
        # |e|^p is a trigonometric polynomial of degree p kmax: trapezoid is exact
        M = int(p) * kmax + 1
    else:
        M = max(8 * kmax + 64, 4 * kmax * int(math.ceil(p)) + 1)
    vals = np.abs(_torus_grid_values(e, M)) ** p
    return float(np.mean(vals) ** (1.0 / p))


# --- direction filters ----------------------------------------------------------------

@dataclass(frozen=True)
class DirectionalFilter:
    """Fourier multiplier beta(|k_perp| / (eps |k|)) (mode "b") or its complement ("B").

    The spatial cutoff of the microlocal symbol is dropped on the torus, so the
    filter is an exact multiplier on exponentials.
    """

    eps: float
    axis: tuple = (1.0, 0.0)
    mode: str = "b"

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.mode not in ("b", "B"):
            raise ValueError("mode is 'b' or 'B'")

    def symbol(self, modes: np.ndarray) -> np.ndarray:
        a = np.asarray(self.axis, dtype=float)
        a = a / np.linalg.norm(a)
        k = np.asarray(modes, dtype=float).reshape(-1, 2)
        knorm = np.hypot(k[:, 0], k[:, 1])
        perp = np.abs(k[:, 0] * a[1] - k[:, 1] * a[0])
        arg = np.divide(perp, self.eps * knorm, out=np.zeros_like(perp), where=knorm > 0)
        b = beta(arg)
        return b if self.mode == "b" else 1.0 - b


def apply_filter(e, F: DirectionalFilter) -> TorusEigenfunction:
    if not isinstance(e, TorusEigenfunction):
        raise ValueError("direction filters act on torus exponential sums only")
    return e.with_coeffs(e.coeffs * F.symbol(e.modes))


# --- tubes ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedGeodesic:
    """Closed geodesic through ``base``: a primitive lattice direction on the torus, a
    great circle (unit frame direction) on the sphere."""

    model: SurfaceModel
    base: tuple
    direction: tuple

    @property
    def length(self) -> float:
        if self.model.kind == "sphere":
            return 2.0 * math.pi
        return float(np.hypot(*self.direction))


def torus_geodesic(p: int, q: int, base=(0.0, 0.0)) -> ClosedGeodesic:
    if math.gcd(p, q) != 1:
        raise ValueError("direction must be a primitive lattice vector")
    return ClosedGeodesic(SurfaceModel.flat_torus(), tuple(map(float, base)), (p, q))


def equator() -> ClosedGeodesic:
    return ClosedGeodesic(SurfaceModel.sphere(), (math.pi / 2, 0.0), (0.0, 1.0))


def tube_norm(e, gamma0: ClosedGeodesic, delta: float, nodes: int = 0) -> float:
    """L^2 norm of e over {dist(y, gamma0) < delta}."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    _check_surface(e, gamma0.model)
    if gamma0.model.kind == "flat-torus":
        return _torus_tube(e, gamma0, delta, nodes)
    return _sphere_tube(e, gamma0, delta, nodes)


def _torus_tube(e: TorusEigenfunction, g: ClosedGeodesic, delta: float, nodes: int) -> float:
    L = g.length
    spacing = 1.0 / L
    if delta >= 0.5 * spacing:
        warnings.warn("tube self-overlaps; using the full torus", TubeOverlapWarning)
        return e.l2_norm()
    u = np.asarray(g.direction, dtype=float) / L
    n = np.array([-u[1], u[0]])
    kmax = float(np.max(np.hypot(e.modes[:, 0], e.modes[:, 1]))) if len(e.modes) else 0.0
    # along the closed geodesic |e|^2 is periodic with frequency <= 2 kmax L
    ns = int(2 * kmax * L + 2 * (nodes or 16)) + 1
    s = L * np.arange(ns) / ns
    nt = max(nodes, int(math.ceil(2 * math.pi * kmax * 2 * delta)) + 24)
    t, wt = gauss_legendre(-delta, delta, nt)
    base = np.asarray(g.base, dtype=float)
    pts = base + s[:, None, None] * u + t[None, :, None] * n
    vals = np.abs(e(pts.reshape(-1, 2)).reshape(ns, nt)) ** 2
    mass = (L / ns) * np.sum(vals @ wt)
    return float(math.sqrt(mass))


def _sphere_tube(e: SphereHarmonic, g: ClosedGeodesic, delta: float, nodes: int) -> float:
    if delta >= 0.5 * math.pi:
        warnings.warn("band covers the sphere; using the full surface", TubeOverlapWarning)
        return e.l2_norm()
    pos, e1, e2 = _sphere_frame(g.base[0], g.base[1])
    v = g.direction[0] * e1 + g.direction[1] * e2
    pole = np.cross(pos, v)
    # orthonormal frame (pos, v, pole): polar angle alpha from pole, azimuth along gamma
    nth = max(nodes, int(math.ceil(e.l * 2 * delta)) + 32)
    alpha, wa = gauss_legendre(0.5 * math.pi - delta, 0.5 * math.pi + delta, nth)
    nphi = 2 * e.l + 2 * abs(e.m) + 33
    phi = 2 * math.pi * np.arange(nphi) / nphi
    A, P = np.meshgrid(alpha, phi, indexing="ij")
    xyz = (np.sin(A)[..., None] * (np.cos(P)[..., None] * pos + np.sin(P)[..., None] * v)
           + np.cos(A)[..., None] * pole)
    th, ph = _sphere_chart(xyz)
    vals = np.abs(e(np.stack([th, ph], axis=-1))) ** 2
    mass = (2 * math.pi / nphi) * np.sum((wa * np.sin(alpha)) @ vals)
    return float(math.sqrt(mass))


# --- windowed restriction ----------------------------------------------------------

def windowed_multiplier(chi: ChiWindow, T: float, lam: float):
    """sigma -> (1/(pi T)) int chat(t/T) e^{-it lam} cos(t sigma) dt
    = chi(T(sigma - lam)) + chi(T(sigma + lam))."""
    return chi.multiplier(T, lam, symmetric=True)


def windowed_restricted_norm(e, seg: GeodesicSegment, chi: ChiWindow, T: float, lam: float,
                             filter: Optional[DirectionalFilter] = None) -> float:
    """||R_gamma (1/(pi T)) int chat(t/T) e^{-it lam} cos(t P) [F] e dt||_{L^2(gamma)}."""
    if filter is not None:
        e = apply_filter(e, filter)
    return restrict_L2(apply_spectral_multiplier(e, windowed_multiplier(chi, T, lam)), seg)


# --- ratio samples and fits --------------------------------------------------------------

@dataclass(frozen=True)
class RatioSample:
    family: str
    param: float
    lam: float
    X: str
    p_or_delta: float
    ratio: float

    def __post_init__(self):
        if not (self.ratio >= 0):
            raise ValueError("ratio must be nonnegative")

    def row(self) -> list:
        return [self.family, self.param, self.lam, self.X, self.p_or_delta, self.ratio]


def write_ratio_csv(path: str | Path, samples: Iterable[RatioSample]) -> None:
    rows = sorted(samples, key=lambda r: (r.lam, r.family, r.param))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RATIO_COLUMNS)
        for r in rows:
            w.writerow([r.family, f"{r.param:.17g}", f"{r.lam:.17g}", r.X,
                        f"{r.p_or_delta:.17g}", f"{r.ratio:.17g}"])


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    n: int


def exponent_fit(samples: Sequence[RatioSample] | Sequence[tuple]) -> ExponentFit:
    """Least squares of log ratio on log lambda; residual is the RMS misfit."""
    pairs = [(s.lam, s.ratio) if isinstance(s, RatioSample) else tuple(s) for s in samples]
    if len(pairs) < 4:
        raise ValueError("need at least 4 samples")
    lam = np.array([p[0] for p in pairs], dtype=float)
    ratio = np.array([p[1] for p in pairs], dtype=float)
    if np.unique(lam).size < 2:
        raise ValueError("need distinct lambda values")
    if np.any(ratio <= 0):
        raise ValueError("ratios must be positive for a log fit")
    x, y = np.log(lam), np.log(ratio)
    design = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(design, y, rcond=None)
    res = y - design @ np.array([slope, icpt])
    return ExponentFit(float(slope), float(icpt), float(np.sqrt(np.mean(res ** 2))), len(pairs))
