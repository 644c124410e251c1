"""Surface models in geodesic polar form and the Jacobi/Günther machinery.

Every model is described in polar coordinates ``(t, theta)`` about a base point,
with metric ``dt^2 + A(t, theta)^2 dtheta^2``.  The polar coefficient ``A`` solves
the Jacobi equation ``A'' + K A = 0`` with ``A(0) = 0`` and ``A'(0) = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

CurvatureProfile = Callable[[np.ndarray, np.ndarray], np.ndarray]

DEFAULT_JACOBI_TOL = 1e-10


class ChartError(ValueError):
    """A point lies outside the polar chart of a model."""


class ConjugatePointError(RuntimeError):
    """The polar coefficient vanished at some t > 0 along a ray."""

    def __init__(self, theta: float, t: float):
        super().__init__(f"conjugate point along theta={theta:.6g} at t={t:.12g}")
        self.theta = theta
        self.t = t


@dataclass(frozen=True)
class PolarCoefficient:
    """Closed-form polar coefficient A(t) with its first two t-derivatives."""

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]


def _constant_profile(k: float) -> CurvatureProfile:
    def profile(t, theta):
        return np.full(np.broadcast(np.asarray(t), np.asarray(theta)).shape, float(k))
    return profile


def constant_curvature_coefficient(k: float) -> PolarCoefficient:
    """Analytic A for constant curvature k: sin, identity or sinh."""
    if k > 0:
        s = math.sqrt(k)
        return PolarCoefficient(lambda t: np.sin(s * t) / s,
                                lambda t: np.cos(s * t),
                                lambda t: -s * np.sin(s * t))
    if k < 0:
        s = math.sqrt(-k)
        return PolarCoefficient(lambda t: np.sinh(s * t) / s,
                                lambda t: np.cosh(s * t),
                                lambda t: s * np.sinh(s * t))
    return PolarCoefficient(lambda t: np.asarray(t, dtype=float),
                            lambda t: np.ones_like(np.asarray(t, dtype=float)),
                            lambda t: np.zeros_like(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class SurfaceModel:
    """A surface given in geodesic polar coordinates about a base point.

    ``kind`` is one of ``"sphere"`` (unit round sphere), ``"flat-torus"``
    (the unit square torus R^2/Z^2) or ``"warped-polar"``.
    """

    kind: str
    curvature: CurvatureProfile
    t_max: float
    nonpositive: bool = False
    polar: Optional[PolarCoefficient] = None
    rotationally_symmetric: bool = True
    name: str = ""

    @classmethod
    def sphere(cls) -> "SurfaceModel":
        return cls("sphere", _constant_profile(1.0), math.pi,
                   polar=constant_curvature_coefficient(1.0), name="S2")

    @classmethod
    def flat_torus(cls) -> "SurfaceModel":
        # polar chart is injective up to the injectivity radius 1/2
        return cls("flat-torus", _constant_profile(0.0), 0.5, nonpositive=True,
                   polar=constant_curvature_coefficient(0.0), name="T2")

    @classmethod
    def warped_polar(cls, curvature: CurvatureProfile, t_max: float, *,
                     nonpositive: bool = False,
                     polar: Optional[PolarCoefficient] = None,
                     rotationally_symmetric: bool = True,
                     name: str = "") -> "SurfaceModel":
        if t_max <= 0:
            raise ValueError("t_max must be positive")
        return cls("warped-polar", curvature, float(t_max), nonpositive=nonpositive,
                   polar=polar, rotationally_symmetric=rotationally_symmetric,
                   name=name)

    @classmethod
    def constant_curvature(cls, k: float, t_max: float) -> "SurfaceModel":
        """Warped-polar model of constant curvature ``k`` with its analytic A."""
        return cls.warped_polar(_constant_profile(k), t_max, nonpositive=k <= 0,
                                polar=constant_curvature_coefficient(k),
                                name=f"K={k:g}")

    @classmethod
    def from_polar(cls, polar: PolarCoefficient, t_max: float, *,
                   nonpositive: bool = False, name: str = "") -> "SurfaceModel":
        """Warped-polar model defined by an analytic A; curvature is -A''/A."""
        def profile(t, theta):
            t = np.asarray(t, dtype=float)
            with np.errstate(invalid="ignore", divide="ignore"):
                k = -polar.d2(t) / polar.value(t)
            return np.broadcast_to(k, np.broadcast(t, np.asarray(theta)).shape)
        return cls.warped_polar(profile, t_max, nonpositive=nonpositive, polar=polar,
                                name=name)


def curvature_at(model: SurfaceModel, t: float, theta: float) -> float:
    """Gaussian curvature of ``model`` at polar point ``(t, theta)``."""
    if not (0.0 <= t <= model.t_max):
        raise ChartError(f"t={t} outside [0, {model.t_max}]")
    if model.kind == "sphere":
        return 1.0
    if model.kind == "flat-torus":
        return 0.0
    if model.polar is not None and t > 0:
        return float(-model.polar.d2(np.asarray(t)) / model.polar.value(np.asarray(t)))
    return float(model.curvature(np.asarray(t, dtype=float), np.asarray(theta, dtype=float)))


@dataclass(frozen=True)
class JacobiSolution:
    """Polar coefficient A(t) and A'(t) along the ray at angle ``theta``."""

    theta: float
    t: np.ndarray
    A: np.ndarray
    dA: np.ndarray
    tol: float
    _dense: object = field(repr=False, compare=False, default=None)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def A_at(self, t) -> np.ndarray:
        """A at arbitrary t in [0, t_max] from the integrator's dense output."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-14)):
            raise ChartError("t outside the solved range")
        return self._dense(t)[0]

    def dA_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._dense(t)[1]


def solve_jacobi(model: SurfaceModel, theta: float = 0.0, t_max: Optional[float] = None,
                 tol: float = DEFAULT_JACOBI_TOL, num: int = 401,
                 t_eval: Optional[np.ndarray] = None) -> JacobiSolution:
    """Integrate A'' + K(t, theta) A = 0, A(0)=0, A'(0)=1 along one ray.

    Uses an adaptive 8th-order Dormand-Prince scheme with relative tolerance
    ``tol``.  Raises :class:`ConjugatePointError` if A returns to zero.
    """
    t_max = model.t_max if t_max is None else float(t_max)
    if t_max <= 0 or tol <= 0:
        raise ValueError("t_max and tol must be positive")
    if t_max > model.t_max * (1 + 1e-14):
        raise ChartError(f"t_max={t_max} beyond the chart radius {model.t_max}")
    th = float(theta)

    def rhs(t, y):
        k = float(model.curvature(np.asarray(t), np.asarray(th)))
        return [y[1], -k * y[0]]

    def crossing(t, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    grid = np.linspace(0.0, t_max, num) if t_eval is None else np.asarray(t_eval, float)
    sol = solve_ivp(rhs, (0.0, t_max), [0.0, 1.0], method="DOP853", rtol=tol,
                    atol=tol * 1e-3, dense_output=True, events=crossing)
    if sol.t_events[0].size and sol.t_events[0][0] > 0:
        raise ConjugatePointError(th, float(sol.t_events[0][0]))
    if not sol.success:
        raise RuntimeError(sol.message)
    vals = sol.sol(grid)
    A = vals[0]
    if np.any(A[grid > 0] <= 0):
        bad = grid[(grid > 0) & (A <= 0)][0]
        raise ConjugatePointError(th, float(bad))
    return JacobiSolution(th, grid, A, vals[1], tol, sol.sol)


@dataclass(frozen=True)
class GuntherReport:
    kappa: float
    t: np.ndarray
    margin: np.ndarray
    holds: bool

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))


def comparison_bound(t, kappa: float) -> np.ndarray:
    """Flat (kappa = 0) or hyperbolic (kappa > 0) polar coefficient."""
    t = np.asarray(t, dtype=float)
    if kappa == 0:
        return t
    return np.sinh(kappa * t) / kappa


def gunther_check(sol: JacobiSolution, kappa: float = 0.0,
                  rtol: float = 1e-8) -> GuntherReport:
    """Check A(t) >= t (kappa = 0) or A(t) >= sinh(kappa t)/kappa on the grid.

    Margins are ``A - bound``; the bound counts as held when every margin is at
    least ``-rtol * max(1, bound)``, which absorbs the integrator tolerance in
    equality cases.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    bound = comparison_bound(sol.t, kappa)
    margin = sol.A - bound
    holds = bool(np.all(margin >= -rtol * np.maximum(1.0, np.abs(bound))))
    return GuntherReport(float(kappa), sol.t, margin, holds)


def w0_coefficient(sol: JacobiSolution, t) -> np.ndarray | float:
    """Leading Hadamard coefficient sqrt(t / A(t)); equals 1 at t = 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ChartError("t must be nonnegative")
    out = np.ones_like(t_arr)
    pos = t_arr > 0
    if np.any(pos):
        out[pos] = np.sqrt(t_arr[pos] / sol.A_at(t_arr[pos]))
    return float(out) if out.ndim == 0 else out


def random_nonpositive_profile(rng: np.random.Generator, n_bumps: int = 3,
                               theta_dependent: bool = False) -> CurvatureProfile:
    """A smooth curvature profile K(t, theta) <= 0 built from Gaussian wells."""
    amps = rng.uniform(0.2, 2.0, n_bumps)
    centres = rng.uniform(0.0, 8.0, n_bumps)
    widths = rng.uniform(0.5, 3.0, n_bumps)
    floor = rng.uniform(0.0, 0.5)
    phases = rng.uniform(0, 2 * np.pi, n_bumps)

    def profile(t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        k = -floor * np.ones(np.broadcast(t, theta).shape)
        for a, c, w, ph in zip(amps, centres, widths, phases):
            mod = 1.0 + 0.5 * np.cos(theta + ph) if theta_dependent else 1.0
            k = k - a * mod * np.exp(-((t - c) / w) ** 2)
        return k
    return profile
