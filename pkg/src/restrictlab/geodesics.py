"""Geodesic flow, exponential map, distances and unit-length segments.

Chart conventions:

* flat torus: Cartesian ``(x1, x2)``; the fundamental chart is ``[0, 1)^2``;
* sphere: ``(theta, phi)`` with ``theta`` the colatitude;
* warped-polar: ``(t, theta)`` polar coordinates about the base point.

Tangent vectors passed to :func:`exp_map`, :func:`phase_point` and
:func:`unit_segment` are given by their components in the orthonormal frame
``(e_1, e_2)`` built from the chart (``e_2 = d_phi / sin(theta)`` on the sphere,
``d_theta / A`` on warped-polar charts), so they stay meaningful at the poles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .quadrature import gauss_legendre
from .surfaces import ChartError, SurfaceModel, solve_jacobi

DEFAULT_HORIZON = 1.0e4
DEFAULT_RETURN_TOL = 1e-9
DEFAULT_NODES_PER_UNIT = 64


def metric_diag(model: SurfaceModel, x) -> np.ndarray:
    """Diagonal of the chart metric (all charts here are orthogonal)."""
    x = np.asarray(x, dtype=float)
    if model.kind == "flat-torus":
        return np.ones(2)
    if model.kind == "sphere":
        return np.array([1.0, math.sin(x[0]) ** 2])
    return np.array([1.0, float(_polar_A(model, x[0])) ** 2])


def _polar_A(model: SurfaceModel, t, derivative: bool = False):
    if model.polar is not None:
        return model.polar.d1(np.asarray(t)) if derivative else model.polar.value(np.asarray(t))
    sol = _radial_solution(model)
    return sol.dA_at(t) if derivative else sol.A_at(t)


@lru_cache(maxsize=32)
def _radial_solution(model: SurfaceModel):
    return solve_jacobi(model, 0.0, model.t_max, tol=1e-12)


@dataclass(frozen=True)
class PhasePoint:
    """A point of the unit cotangent bundle: chart point and covector."""

    x: np.ndarray
    xi: np.ndarray
    xi_sharp: np.ndarray

    @classmethod
    def from_covector(cls, model: SurfaceModel, x, xi) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        g = metric_diag(model, x)
        if g[1] <= 0:
            raise ChartError("covector undefined at a singular point of the chart")
        return cls(x, xi, xi / g)

    def norm(self, model: SurfaceModel) -> float:
        """|xi|_g computed from the chart metric."""
        return float(np.sqrt(np.sum(self.xi * self.xi / metric_diag(model, self.x))))


def phase_point(model: SurfaceModel, x, direction) -> PhasePoint:
    """Unit covector dual to a frame direction at ``x``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    g = metric_diag(model, x)
    return PhasePoint.from_covector(model, x, v * np.sqrt(g))


# --- sphere helpers -------------------------------------------------------

def _sphere_frame(theta, phi):
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    pos = np.stack([st * cp, st * sp, ct], axis=-1)
    e1 = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e2 = np.stack([-sp, cp, np.zeros_like(st)], axis=-1)
    return pos, e1, e2


def _sphere_chart(pos):
    z = np.clip(pos[..., 2], -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.arctan2(pos[..., 1], pos[..., 0])
    return theta, phi


def _sphere_geodesic(x, direction, s):
    """Points of the great circle from chart point x with frame direction, at times s."""
    pos, e1, e2 = _sphere_frame(x[0], x[1])
    v = direction[0] * e1 + direction[1] * e2
    s = np.asarray(s, dtype=float)[..., None]
    p = pos * np.cos(s) + v * np.sin(s)
    vel = -pos * np.sin(s) + v * np.cos(s)
    return p, vel


def _to_sphere_phase(p, vel) -> PhasePoint:
    theta, phi = _sphere_chart(p)
    _, e1, e2 = _sphere_frame(theta, phi)
    a, b = float(vel @ e1), float(vel @ e2)
    st = math.sin(theta)
    xi = np.array([a, b * st])
    sharp = np.array([a, b / st]) if st > 0 else np.array([a, np.nan])
    return PhasePoint(np.array([theta, phi]), xi, sharp)


def _frame_direction(model: SurfaceModel, p: PhasePoint) -> np.ndarray:
    g = metric_diag(model, p.x)
    return p.xi / np.sqrt(g)


# --- flow -----------------------------------------------------------------

def _check_horizon(t: float, horizon: float) -> None:
    if abs(t) > horizon:
        raise ValueError(f"|t|={abs(t)} exceeds the flow horizon {horizon}")


def wrap_torus(x) -> np.ndarray:
    """Reduce cover coordinates into the fundamental chart [0, 1)^2."""
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(y >= 1.0, 0.0, y)


def _warped_rhs(model: SurfaceModel):
    def rhs(s, y):
        t, th, pt, pth = y
        A = float(_polar_A(model, t))
        dA = float(_polar_A(model, t, derivative=True))
        return [pt, pth / A ** 2, pth ** 2 * dA / A ** 3, 0.0]
    return rhs


def _warped_flow(model: SurfaceModel, p: PhasePoint, t: float, dense: bool = False):
    if not model.rotationally_symmetric:
        raise NotImplementedError("geodesic flow needs a rotationally symmetric profile")

    def leave(s, y):
        return min(y[0], model.t_max - y[0])
    leave.terminal = True

    y0 = [p.x[0], p.x[1], p.xi[0], p.xi[1]]
    sol = solve_ivp(_warped_rhs(model), (0.0, t), y0, method="DOP853", rtol=1e-12,
                    atol=1e-14, events=leave, dense_output=dense)
    if sol.status == 1:
        raise ChartError("geodesic left the polar chart")
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol


def flow(model: SurfaceModel, p: PhasePoint, t: float,
         horizon: float = DEFAULT_HORIZON) -> PhasePoint:
    """Unit-speed geodesic flow for time ``t``."""
    _check_horizon(t, horizon)
    if model.kind == "flat-torus":
        return PhasePoint(wrap_torus(p.x + t * p.xi_sharp), p.xi.copy(), p.xi_sharp.copy())
    if model.kind == "sphere":
        if math.sin(p.x[0]) == 0.0:
            raise ChartError("phase point at a pole; use exp_map or a rotated chart")
        d = _frame_direction(model, p)
        pos, vel = _sphere_geodesic(p.x, d, t)
        return _to_sphere_phase(pos, vel)
    if t == 0:
        return p
    sol = _warped_flow(model, p, t)
    tt, th, pt, pth = sol.y[:, -1]
    return PhasePoint.from_covector(model, [tt, th], [pt, pth])


def exp_map(model: SurfaceModel, x0, v, horizon: float = DEFAULT_HORIZON) -> np.ndarray:
    """Exponential map at ``x0`` applied to the frame vector ``v``."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    length = float(np.linalg.norm(v))
    if length == 0.0:
        return x0.copy()
    _check_horizon(length, horizon)
    if model.kind == "flat-torus":
        return wrap_torus(x0 + v)
    if model.kind == "sphere":
        pos, _ = _sphere_geodesic(x0, v / length, length)
        return np.array(_sphere_chart(pos))
    return flow(model, phase_point(model, x0, v), length, horizon).x


def distance(model: SurfaceModel, x, y) -> float:
    """Geodesic distance between two chart points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if model.kind == "flat-torus":
        d = y - x
        d = d - np.round(d)
        return float(np.hypot(d[0], d[1]))
    if model.kind == "sphere":
        p, _, _ = _sphere_frame(x[0], x[1])
        q, _, _ = _sphere_frame(y[0], y[1])
        return float(math.atan2(np.linalg.norm(np.cross(p, q)), float(p @ q)))
    if x[0] == 0.0:
        return float(y[0])
    if y[0] == 0.0:
        return float(x[0])
    raise NotImplementedError("warped-polar distance is only defined from the base point")


def _phase_distance(model: SurfaceModel, p: PhasePoint, q: PhasePoint) -> float:
    if model.kind == "flat-torus":
        dx = q.x - p.x
        dx = dx - np.round(dx)
        return float(np.hypot(*dx) + np.hypot(*(q.xi - p.xi)))
    return float(np.linalg.norm(q.x - p.x) + np.linalg.norm(q.xi - p.xi))


def first_return_time(model: SurfaceModel, p: PhasePoint, horizon: float,
                      tol: float = DEFAULT_RETURN_TOL) -> float:
    """Minimal t in (0, horizon] with flow(p, t) = p, or ``math.inf``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if model.kind == "flat-torus":
        return _torus_return(p.xi_sharp, horizon, tol)
    if model.kind == "sphere":
        return 2 * math.pi if horizon >= 2 * math.pi else math.inf
    return _numeric_return(model, p, horizon, tol)


def _torus_return(u: np.ndarray, horizon: float, tol: float) -> float:
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    n = int(math.floor(horizon))
    if n < 1:
        return math.inf
    k = np.arange(-n, n + 1)
    m1, m2 = np.meshgrid(k, k, indexing="ij")
    m1, m2 = m1.ravel(), m2.ravel()
    norm2 = m1 * m1 + m2 * m2
    length = np.sqrt(norm2)
    # lattice vector along u: tiny cross product, positive dot product
    ok = (norm2 > 0) & (length <= horizon) & (m1 * u[0] + m2 * u[1] > 0)
    ok &= np.abs(m1 * u[1] - m2 * u[0]) <= tol * np.maximum(length, 1.0)
    if not np.any(ok):
        return math.inf
    best = int(np.argmin(np.where(ok, norm2, np.iinfo(np.int64).max)))
    return math.sqrt(int(norm2[best]))


def _numeric_return(model: SurfaceModel, p: PhasePoint, horizon: float, tol: float) -> float:
    try:
        sol = _warped_flow(model, p, horizon, dense=True)
    except ChartError:
        return math.inf
    s = np.linspace(0.0, horizon, max(int(horizon * 200), 400))[1:]
    ys = sol.sol(s)
    dist = np.linalg.norm(ys[:2] - p.x[:, None], axis=0) + np.linalg.norm(
        ys[2:] - p.xi[:, None], axis=0)
    cand = np.where((dist[1:-1] <= dist[:-2]) & (dist[1:-1] <= dist[2:]))[0] + 1
    for i in cand:
        lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]

        def f(tt):
            y = sol.sol(tt)
            return np.linalg.norm(y[:2] - p.x) + np.linalg.norm(y[2:] - p.xi)
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        if res.fun <= tol:
            return float(res.x)
    return math.inf


@dataclass(frozen=True)
class GeodesicSegment:
    """Arc-length parametrised geodesic segment ``s in [-L/2, L/2]`` about a midpoint."""

    model: SurfaceModel
    midpoint: np.ndarray
    direction: np.ndarray
    length: float = 1.0
    nodes: int = DEFAULT_NODES_PER_UNIT

    @cached_property
    def _rule(self):
        return gauss_legendre(-0.5 * self.length, 0.5 * self.length, self.nodes)

    @property
    def s(self) -> np.ndarray:
        return self._rule[0]

    @property
    def weights(self) -> np.ndarray:
        return self._rule[1]

    @cached_property
    def points(self) -> np.ndarray:
        """Chart coordinates of the quadrature nodes (torus: cover coordinates)."""
        return points_along(self.model, self.midpoint, self.direction, self.s)

    def with_nodes(self, nodes: int) -> "GeodesicSegment":
        return GeodesicSegment(self.model, self.midpoint, self.direction, self.length,
                               int(nodes))

    def reversed(self) -> "GeodesicSegment":
        return GeodesicSegment(self.model, self.midpoint, -self.direction, self.length,
                               self.nodes)


def points_along(model: SurfaceModel, x0, direction, s) -> np.ndarray:
    """Chart points at arc-length parameters ``s`` on the geodesic through x0."""
    x0 = np.asarray(x0, dtype=float)
    d = np.asarray(direction, dtype=float)
    s = np.asarray(s, dtype=float)
    if model.kind == "flat-torus":
        return x0[None, :] + s[:, None] * d[None, :]
    if model.kind == "sphere":
        pos, _ = _sphere_geodesic(x0, d, s)
        return np.stack(_sphere_chart(pos), axis=-1)
    p = phase_point(model, x0, d)
    out = np.empty((s.size, 2))
    for sign in (1.0, -1.0):
        mask = (s * sign) > 0
        if not np.any(mask):
            continue
        q = p if sign > 0 else phase_point(model, x0, -d)
        sol = _warped_flow(model, q, float(np.max(np.abs(s[mask]))), dense=True)
        out[mask] = sol.sol(np.abs(s[mask]))[:2].T
    out[s == 0] = x0
    return out


def unit_segment(model: SurfaceModel, midpoint, direction, length: float = 1.0,
                 nodes: Optional[int] = None) -> GeodesicSegment:
    """Unit-length geodesic segment centred at ``midpoint`` (Gauss-Legendre nodes)."""
    d = np.asarray(direction, dtype=float)
    nrm = float(np.linalg.norm(d))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("direction must be a unit frame vector")
    if nodes is None:
        nodes = max(DEFAULT_NODES_PER_UNIT, int(math.ceil(DEFAULT_NODES_PER_UNIT * length)))
    seg = GeodesicSegment(model, np.asarray(midpoint, dtype=float), d / nrm, float(length),
                          int(nodes))
    if model.kind == "warped-polar":
        seg.points  # chart exit surfaces here
    return seg
