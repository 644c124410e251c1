"""Bessel function J0 of real argument.

Three regimes:

* ``|x| <= 4``: Taylor series;
* ``4 < |x| <= 25``: Miller backward recurrence normalised with
  ``1 = J0 + 2 * sum J_{2k}``;
* ``|x| > 25``: Hankel asymptotic expansion, truncated at its smallest term.
"""
from __future__ import annotations

import math

import numpy as np

_SERIES_MAX = 4.0
_MILLER_MAX = 25.0


def _series(x: np.ndarray) -> np.ndarray:
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        term = term * q / (k * k)
        total = total + term
    return total


def _miller(x: np.ndarray) -> np.ndarray:
    xmax = float(np.max(x))
    start = 2 * ((int(xmax) + 20 + int(math.sqrt(60.0 * xmax))) // 2)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j0 = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        order = k - 1
        if order == 0:
            j0 = j_cur
        elif order % 2 == 0:
            norm = norm + j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur = j_cur * scale
            j_next = j_next * scale
            norm = norm * scale
    return j0 / (j0 + 2.0 * norm)


def _hankel_coefficients(nterms: int) -> np.ndarray:
    a = np.empty(nterms)
    a[0] = 1.0
    for k in range(1, nterms):
        a[k] = a[k - 1] * (-(2 * k - 1) ** 2) / (k * 8.0)
    return a


_HANKEL = _hankel_coefficients(40)


def _asymptotic_block(x: np.ndarray) -> np.ndarray:
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inv = 1.0 / x
    active = np.ones(x.shape, dtype=bool)
    last = np.full_like(x, np.inf)
    term = np.ones_like(x)
    for k in range(len(_HANKEL)):
        term = _HANKEL[k] * inv ** k
        mag = np.abs(term)
        # stop each entry once the asymptotic terms start growing
        active &= mag <= last
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            p = p + np.where(active, sign * term, 0.0)
        else:
            q = q + np.where(active, sign * term, 0.0)
        last = np.where(active, mag, last)
        if not np.any(active & (mag > 1e-18)):
            break
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _asymptotic(x: np.ndarray) -> np.ndarray:
    # bucket by size so large arguments exit after a few terms
    out = np.empty_like(x)
    edges = (_MILLER_MAX, 100.0, 1e3, np.inf)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (x > lo) & (x <= hi)
        if np.any(sel):
            out[sel] = _asymptotic_block(x[sel])
    return out


def j0(x):
    """Bessel J0, vectorised over ``x``."""
    arr = np.abs(np.asarray(x, dtype=float))
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat <= _SERIES_MAX
    mid = (flat > _SERIES_MAX) & (flat <= _MILLER_MAX)
    large = flat > _MILLER_MAX
    if np.any(small):
        out[small] = _series(flat[small])
    if np.any(mid):
        out[mid] = _miller(flat[mid])
    if np.any(large):
        out[large] = _asymptotic(flat[large])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out
