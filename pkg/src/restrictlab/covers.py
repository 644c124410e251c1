"""Deck groups of universal covers: lattices, cyclic stabilisers, Fuchsian groups.

Fuchsian elements are SL(2, R) matrices acting on the upper half-plane by
Möbius transformations; the cover "origin" is the point ``i``.  Orbit points
are tracked on the hyperboloid model, where ``x0 = cosh d(i, g i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
import yaml
from scipy.spatial import cKDTree

DEFAULT_BUDGET = 2_000_000
PRESET_DIR = Path(__file__).parent / "presets"


class EnumerationBudgetError(RuntimeError):
    """Fuchsian enumeration needed more elements than the configured budget."""

    def __init__(self, budget: int, radius: float, partial: "DeckEnumeration"):
        super().__init__(f"more than {budget} elements within radius {radius}")
        self.budget = budget
        self.radius = radius
        self.partial = partial


@dataclass(frozen=True)
class DeckGroup:
    """A group of cover isometries.

    ``kind`` is ``"lattice"`` (generators are basis vectors), ``"cyclic"``
    (one translation vector) or ``"fuchsian"`` (SL(2, R) matrices; inverses are
    added automatically).  ``margin`` bounds the circumradius of a fundamental
    domain about the origin and is used to prune word enumeration.
    """

    kind: str
    generators: tuple
    name: str = ""
    margin: Optional[float] = None

    @classmethod
    def lattice(cls, basis=((1.0, 0.0), (0.0, 1.0)), name: str = "Z2") -> "DeckGroup":
        gens = tuple(np.asarray(b, dtype=float) for b in basis)
        if len(gens) != 2 or abs(np.linalg.det(np.stack(gens))) < 1e-12:
            raise ValueError("lattice needs two independent basis vectors")
        return cls("lattice", gens, name)

    @classmethod
    def cyclic(cls, length: float, axis=(1.0, 0.0), name: str = "") -> "DeckGroup":
        u = np.asarray(axis, dtype=float)
        u = u / np.linalg.norm(u)
        if length <= 0:
            raise ValueError("translation length must be positive")
        return cls("cyclic", (float(length) * u,), name or f"cyclic(l={length:g})")

    @classmethod
    def fuchsian(cls, matrices: Sequence, name: str = "",
                 margin: Optional[float] = None) -> "DeckGroup":
        gens = []
        for m in matrices:
            m = np.asarray(m, dtype=float).reshape(2, 2)
            if abs(np.linalg.det(m) - 1.0) > 1e-9:
                raise ValueError("Fuchsian generators must have unit determinant")
            gens.append(m)
        return cls("fuchsian", tuple(gens), name, margin)

    @property
    def basis(self) -> np.ndarray:
        return np.stack(self.generators)

    @property
    def translation_length(self) -> float:
        return float(np.linalg.norm(self.generators[0]))

    @property
    def axis(self) -> np.ndarray:
        return self.generators[0] / self.translation_length

    def word_generators(self) -> list[np.ndarray]:
        gens = list(self.generators)
        return gens + [np.linalg.inv(g) for g in gens]


def bolza_generators() -> list[np.ndarray]:
    """Side pairings of the regular hyperbolic octagon with angles pi/4.

    In the disc model these are ``[[a, b e^{ik pi/4}], [conj, a]]`` with
    ``a = 1 + sqrt 2`` and ``|b| = sqrt(2 + 2 sqrt 2)``; returned conjugated into
    SL(2, R) by the Cayley transform.
    """
    a = 1.0 + math.sqrt(2.0)
    b = math.sqrt(2.0 + 2.0 * math.sqrt(2.0))
    cayley = np.array([[1.0, -1.0j], [1.0, 1.0j]])
    inv = np.linalg.inv(cayley)
    out = []
    for k in range(4):
        bk = b * np.exp(1j * k * np.pi / 4)
        disc = np.array([[a, bk], [np.conj(bk), a]])
        real = inv @ disc @ cayley
        out.append(np.real_if_close(real, tol=1e6).real)
    return out


BOLZA_CIRCUMRADIUS = math.acosh((1.0 + math.sqrt(2.0)) ** 2)


def load_preset(name_or_path: str | Path) -> DeckGroup:
    """Load a deck group from a YAML preset (bundled name or file path)."""
    path = Path(name_or_path)
    if not path.exists():
        path = PRESET_DIR / f"{name_or_path}.yaml"
    data = yaml.safe_load(path.read_text())
    kind = data["kind"]
    if kind == "lattice":
        return DeckGroup.lattice(data["basis"], name=data.get("name", path.stem))
    if kind == "cyclic":
        return DeckGroup.cyclic(data["length"], data.get("axis", (1.0, 0.0)),
                                name=data.get("name", path.stem))
    if kind == "fuchsian":
        return DeckGroup.fuchsian(data["generators"], name=data.get("name", path.stem),
                                  margin=data.get("margin"))
    raise ValueError(f"unknown deck group kind {kind!r}")


def genus2_group() -> DeckGroup:
    return load_preset("genus2")


# --- hyperbolic geometry ----------------------------------------------------

def mobius(m: np.ndarray, z):
    """Apply SL(2, R) matrix ``m`` to upper half-plane point(s) z (complex)."""
    z = np.asarray(z, dtype=complex)
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def hyperbolic_distance(z, w) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    arg = 1.0 + np.abs(z - w) ** 2 / (2.0 * z.imag * w.imag)
    return np.arccosh(np.maximum(arg, 1.0))


def hyperboloid(mats: np.ndarray) -> np.ndarray:
    """Hyperboloid coordinates of g(i) for a stack of SL(2, R) matrices."""
    a, b, c, d = mats[..., 0, 0], mats[..., 0, 1], mats[..., 1, 0], mats[..., 1, 1]
    x0 = 0.5 * (a * a + b * b + c * c + d * d)
    x1 = 0.5 * (a * a + b * b - c * c - d * d)
    x2 = a * c + b * d
    return np.stack([x0, x1, x2], axis=-1)


def displacement(mats: np.ndarray) -> np.ndarray:
    """d(i, g i) for a stack of SL(2, R) matrices."""
    x0 = hyperboloid(mats)[..., 0]
    return np.arccosh(np.maximum(x0, 1.0))


# --- enumeration --------------------------------------------------------------

@dataclass(frozen=True)
class DeckEnumeration:
    """Group elements with their displacement d(0, alpha(0)), sorted.

    Lattice and cyclic elements are integer labels (tuples); Fuchsian elements
    are 2x2 matrices.  Iterating yields ``(element, displacement)`` pairs.
    """

    group: DeckGroup
    radius: float
    elements: list
    displacements: np.ndarray
    translations: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator:
        return iter(zip(self.elements, self.displacements.tolist()))

    def __getitem__(self, i):
        return self.elements[i], float(self.displacements[i])

    def counts(self, radii) -> np.ndarray:
        """N(R) = number of elements with displacement <= R."""
        return np.searchsorted(self.displacements, np.asarray(radii, dtype=float) * (1 + 1e-12),
                               side="right")


def enumerate_deck(group: DeckGroup, radius: float,
                   budget: int = DEFAULT_BUDGET) -> DeckEnumeration:
    """All elements with d(0, alpha(0)) <= radius, sorted by displacement."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if group.kind == "lattice":
        return _enumerate_lattice(group, radius)
    if group.kind == "cyclic":
        ell = group.translation_length
        jmax = int(math.floor(radius / ell + 1e-12))
        js = sorted(range(-jmax, jmax + 1), key=lambda j: (abs(j), j))
        disp = np.array([abs(j) * ell for j in js])
        trans = np.array([j * group.generators[0] for j in js]).reshape(-1, 2)
        return DeckEnumeration(group, radius, [(j,) for j in js], disp, trans)
    return _enumerate_fuchsian(group, radius, budget)


def _enumerate_lattice(group: DeckGroup, radius: float) -> DeckEnumeration:
    basis = group.basis
    # shortest nonzero row bound for the coefficient box
    sv = np.linalg.svd(basis, compute_uv=False)
    n = int(math.ceil(radius / sv[-1])) + 1
    k = np.arange(-n, n + 1)
    j1, j2 = np.meshgrid(k, k, indexing="ij")
    labels = np.stack([j1.ravel(), j2.ravel()], axis=-1)
    trans = labels @ basis
    disp = np.hypot(trans[:, 0], trans[:, 1])
    keep = disp <= radius * (1 + 1e-12) + 1e-15
    labels, trans, disp = labels[keep], trans[keep], disp[keep]
    order = np.lexsort((labels[:, 1], labels[:, 0], np.round(disp, 12)))
    labels, trans, disp = labels[order], trans[order], disp[order]
    return DeckEnumeration(group, radius, [tuple(int(v) for v in row) for row in labels],
                           disp, trans)


def _dedupe(known: np.ndarray, cand: np.ndarray, tol: float) -> np.ndarray:
    """Mask of candidate rows that are new w.r.t. ``known`` and earlier candidates."""
    if cand.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    stacked = np.vstack([known, cand]) if known.shape[0] else cand
    offset = known.shape[0]
    tree = cKDTree(stacked)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    keep = np.ones(cand.shape[0], dtype=bool)
    if pairs.size:
        later = np.maximum(pairs[:, 0], pairs[:, 1])
        later = later[later >= offset] - offset
        keep[later] = False
    return keep


def _enumerate_fuchsian(group: DeckGroup, radius: float, budget: int) -> DeckEnumeration:
    gens = np.stack(group.word_generators())
    margin = group.margin
    if margin is None:
        margin = float(np.max(displacement(gens)))
    search = radius + margin
    cosh_search = math.cosh(search)
    tol = 1e-4

    layers_m = [np.eye(2)[None]]
    layers_x = [hyperboloid(layers_m[0])]
    total = 1
    prev_x = np.empty((0, 3))
    while layers_m[-1].shape[0]:
        front = layers_m[-1]
        cand = np.einsum("fij,gjk->fgik", front, gens).reshape(-1, 2, 2)
        cx = hyperboloid(cand)
        inside = cx[:, 0] <= cosh_search
        cand, cx = cand[inside], cx[inside]
        known = np.vstack([prev_x, layers_x[-1]])
        keep = _dedupe(known, cx, tol)
        cand, cx = cand[keep], cx[keep]
        prev_x = layers_x[-1]
        layers_m.append(cand)
        layers_x.append(cx)
        total += cand.shape[0]
        if total > budget:
            partial = _finish_fuchsian(group, radius, layers_m)
            raise EnumerationBudgetError(budget, radius, partial)
    return _finish_fuchsian(group, radius, layers_m)


def _finish_fuchsian(group: DeckGroup, radius: float, layers: list) -> DeckEnumeration:
    mats = np.concatenate(layers, axis=0)
    # sign canonicalisation: first nonzero entry positive
    flat = mats.reshape(-1, 4)
    lead = np.argmax(np.abs(flat) > 1e-12, axis=1)
    sign = np.sign(flat[np.arange(len(flat)), lead])
    mats = mats * sign[:, None, None]
    x = hyperboloid(mats)
    disp = np.arccosh(np.maximum(x[:, 0], 1.0))
    keep = disp <= radius * (1 + 1e-12) + 1e-12
    mats, x, disp = mats[keep], x[keep], disp[keep]
    order = np.lexsort((np.round(x[:, 2], 9), np.round(x[:, 1], 9), np.round(disp, 9)))
    mats, disp = mats[order], disp[order]
    return DeckEnumeration(group, radius, list(mats), disp)


def element_of(group: DeckGroup, label) -> Callable:
    """The isometry x -> alpha(x) for a lattice/cyclic label or a Fuchsian matrix."""
    if group.kind == "fuchsian":
        m = np.asarray(label)
        return lambda z: mobius(m, z)
    v = translation_of(group, label)
    return lambda x: np.asarray(x, dtype=float) + v


def translation_of(group: DeckGroup, label) -> np.ndarray:
    label = np.atleast_1d(np.asarray(label, dtype=float))
    if group.kind == "lattice":
        return label @ group.basis
    if group.kind == "cyclic":
        return label[0] * group.generators[0]
    raise ValueError("Fuchsian elements are not translations")


# --- stabilisers, fundamental domains, periodisation ------------------------

def stabilizer_subgroup(model, p, horizon: float = 100.0) -> DeckGroup:
    """Cyclic stabiliser of the lifted axis of the closed geodesic through ``p``.

    Only the flat torus has a nontrivial deck group among the shipped models.
    """
    from .geodesics import first_return_time

    if model.kind != "flat-torus":
        raise ValueError("closed-geodesic stabilisers are available on the flat torus only")
    ell = first_return_time(model, p, horizon)
    if not math.isfinite(ell):
        raise ValueError("geodesic is not periodic within the horizon")
    gen = np.round(ell * np.asarray(p.xi_sharp, dtype=float) / np.linalg.norm(p.xi_sharp))
    return DeckGroup("cyclic", (gen,), f"stab({int(gen[0])},{int(gen[1])})")


@dataclass(frozen=True)
class Representative:
    point: object
    element: object


def fundamental_rep(group: DeckGroup, x, max_steps: int = 10_000) -> Representative:
    """Unique representative of ``x`` in the fundamental domain, and alpha with alpha(rep) = x.

    Domains: the half-open parallelogram spanned by the basis (lattice), the strip
    ``0 <= <x, axis> < length`` (cyclic), and the Dirichlet domain about ``i``
    reached by greedy distance reduction (Fuchsian).
    """
    if group.kind == "lattice":
        x = np.asarray(x, dtype=float)
        basis = group.basis
        coef = np.linalg.solve(basis.T, x)
        j = np.floor(coef)
        frac = coef - j
        wrap = frac >= 1.0
        j = j + wrap
        frac = np.where(wrap, 0.0, frac)
        # built from the snapped fraction so the half-open domain holds under rounding
        rep = frac @ basis
        return Representative(rep, tuple(int(v) for v in j))
    if group.kind == "cyclic":
        x = np.asarray(x, dtype=float)
        ell = group.translation_length
        s = float(x @ group.axis) / ell
        j = math.floor(s)
        frac = s - j
        if frac >= 1.0:
            j, frac = j + 1, 0.0
        rep = x - j * group.generators[0]
        rep = rep + (frac * ell - float(rep @ group.axis)) * group.axis
        return Representative(rep, (j,))
    return _fuchsian_rep(group, complex(x), max_steps)


def _fuchsian_rep(group: DeckGroup, z: complex, max_steps: int) -> Representative:
    gens = group.word_generators()
    alpha = np.eye(2)
    point = z
    d = float(hyperbolic_distance(point, 1j))
    for _ in range(max_steps):
        best = None
        for h in gens:
            w = complex(mobius(h, point))
            dw = float(hyperbolic_distance(w, 1j))
            if dw < d - 1e-12 and (best is None or dw < best[0]):
                best = (dw, w, h)
        if best is None:
            return Representative(point, alpha)
        d, point, h = best
        alpha = alpha @ np.linalg.inv(h)
    raise RuntimeError("fundamental_rep exceeded its step budget")


def periodize(f: Callable, group: DeckGroup) -> Callable:
    """Periodic extension x -> f(fundamental_rep(x).point)."""
    if group.kind == "lattice":
        basis = group.basis
        inv_t = np.linalg.inv(basis.T)

        def periodic(x):
            x = np.asarray(x, dtype=float)
            coef = x @ inv_t.T
            frac = coef - np.floor(coef)
            frac = np.where(frac >= 1.0, 0.0, frac)
            return f(frac @ basis)
        return periodic

    def periodic_generic(x):
        x = np.asarray(x)
        if x.ndim == (1 if group.kind == "cyclic" else 0):
            return f(fundamental_rep(group, x).point)
        pts = [fundamental_rep(group, xi).point for xi in x]
        return f(np.asarray(pts))
    return periodic_generic


# --- orbit growth --------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    radii: np.ndarray
    counts: np.ndarray
    rate: float
    intercept: float
    mode: str
    window: tuple
    truncated: bool = False
    resolved_radius: float = field(default=float("nan"))


def orbit_growth_fit(group: DeckGroup, r_max: float, n_radii: int = 41,
                     budget: int = DEFAULT_BUDGET, min_count: int = 20) -> GrowthFit:
    """Tabulate N(R) and fit its growth.

    Fuchsian groups get the slope of log N(R) against R (exponential rate);
    lattices and cyclic groups the slope of log N(R) against log R (degree).
    The fit uses radii in the upper half of the resolved range with at least
    ``min_count`` elements.
    """
    truncated = False
    radius = float(r_max)
    while True:
        try:
            enum = enumerate_deck(group, radius, budget)
            break
        except EnumerationBudgetError:
            truncated = True
            radius -= 0.5
            if radius <= 0:
                raise
    radii = np.linspace(0.0, radius, n_radii)
    counts = enum.counts(radii)
    lo = 0.5 * radius
    sel = (radii >= lo) & (counts >= min_count)
    if np.count_nonzero(sel) < 3:
        sel = counts >= 1
        sel &= radii > 0
    if group.kind == "fuchsian":
        xs, mode = radii[sel], "exponential"
    else:
        xs, mode = np.log(radii[sel]), "polynomial"
    if xs.size >= 2:
        slope, icpt = np.polyfit(xs, np.log(counts[sel]), 1)
    else:
        slope, icpt = float("nan"), float("nan")
    window = (float(radii[sel][0]), float(radii[sel][-1])) if xs.size else (0.0, 0.0)
    return GrowthFit(radii, counts, float(slope), float(icpt), mode, window, truncated,
                     radius)
