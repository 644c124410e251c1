"""Gauss-Legendre helpers shared by the kernel and restriction code."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss(a: float, b: float, max_width: float, order: int = 20
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with panels no wider than ``max_width``."""
    if b <= a:
        return np.empty(0), np.empty(0)
    npan = max(1, int(np.ceil((b - a) / max_width)))
    edges = np.linspace(a, b, npan + 1)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def oscillatory_rule(a: float, b: float, omega: float, order: int = 20,
                     phase_per_panel: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule resolving integrands oscillating at angular frequency <= omega.

    Each panel carries at most ``phase_per_panel`` radians of phase, which keeps the
    20-point rule at roughly machine precision.
    """
    omega = max(float(omega), 1e-3)
    return composite_gauss(a, b, phase_per_panel / omega, order)
