"""Finite-dimensional real normed spaces and their convex-analytic primitives.

A space is described declaratively (:class:`NormSpec`) and supports norm and
dual-norm evaluation, one-sided directional derivatives of the norm,
supporting-functional extraction with a smoothness verdict, and the
exposed-point test on the dual ball.  Three families are covered:

* ``lp``           -- (sum |x_i|^p)^(1/p), with p = inf meaning max |x_i|
* ``weighted_lp``  -- same with positive per-coordinate weights
* ``polyhedral``   -- max_i |<a_i, x>| over a spanning list of functionals
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .settings import DEFAULT_TOL, Tolerances

__all__ = [
    "NormSpec",
    "Vector",
    "Functional",
    "SupportDescription",
    "ExposedPoint",
    "norm",
    "directional_derivative",
    "finite_difference_directional",
    "support_set",
    "is_w_star_exposed",
]

_KINDS = ("lp", "weighted_lp", "polyhedral")


def _as_coords(x, dim: int) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (dim,):
        raise ValueError(f"dimension mismatch: expected {dim} coordinates, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coordinates must be finite")
    return a


def _coerce(x, dim: int) -> np.ndarray:
    """Cheap coordinate coercion for hot evaluation paths (no finiteness scan)."""
    a = np.asarray(x, dtype=float)
    if a.shape != (dim,):
        raise ValueError(f"dimension mismatch: expected {dim} coordinates, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Declarative description of a finite-dimensional real normed space."""

    kind: str
    dim: int
    p: Optional[float] = None
    weights: Optional[np.ndarray] = None
    functionals: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind in ("lp", "weighted_lp"):
            if self.p is None or (self.p < 1.0 and not math.isinf(self.p)):
                raise ValueError("p must satisfy p >= 1 or p = inf")
        if self.kind == "weighted_lp":
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim,) or np.any(w <= 0):
                raise ValueError("weights must be dim positive reals")
            object.__setattr__(self, "weights", _frozen(w))
        if self.kind == "polyhedral":
            a = np.asarray(self.functionals, dtype=float)
            if a.ndim != 2 or a.shape[1] != self.dim:
                raise ValueError("functionals must be an (m, dim) array")
            if np.linalg.matrix_rank(a) < self.dim:
                raise ValueError("polyhedral functionals must span the dual space")
            object.__setattr__(self, "functionals", _frozen(a))

    # -- constructors ------------------------------------------------------

    @classmethod
    def lp(cls, dim: int, p: float) -> "NormSpec":
        return cls(kind="lp", dim=dim, p=float(p))

    @classmethod
    def weighted_lp(cls, dim: int, p: float, weights) -> "NormSpec":
        return cls(kind="weighted_lp", dim=dim, p=float(p), weights=np.asarray(weights, float))

    @classmethod
    def polyhedral(cls, dim: int, functionals) -> "NormSpec":
        return cls(kind="polyhedral", dim=dim, functionals=np.asarray(functionals, float))

    # -- identity ----------------------------------------------------------

    def spec_key(self) -> tuple:
        if self.kind == "lp":
            return ("lp", self.dim, self.p)
        if self.kind == "weighted_lp":
            return ("weighted_lp", self.dim, self.p, tuple(self.weights))
        return ("polyhedral", self.dim, tuple(map(tuple, self.functionals)))

    def __eq__(self, other):
        return isinstance(other, NormSpec) and self.spec_key() == other.spec_key()

    def __hash__(self):
        return hash(self.spec_key())

    def __repr__(self):
        if self.kind == "lp":
            return f"NormSpec.lp({self.dim}, p={self.p})"
        if self.kind == "weighted_lp":
            return f"NormSpec.weighted_lp({self.dim}, p={self.p}, weights={list(self.weights)})"
        return f"NormSpec.polyhedral({self.dim}, {len(self.functionals)} functionals)"

    # -- evaluation --------------------------------------------------------

    def norm_of(self, coords) -> float:
        """Norm of raw coordinates."""
        a = _coerce(coords, self.dim)
        if self.kind == "lp":
            if math.isinf(self.p):
                return float(np.max(np.abs(a)))
            if self.p == 1.0:
                return float(np.sum(np.abs(a)))
            return float(np.sum(np.abs(a) ** self.p) ** (1.0 / self.p))
        if self.kind == "weighted_lp":
            if math.isinf(self.p):
                return float(np.max(self.weights * np.abs(a)))
            return float(np.sum(self.weights * np.abs(a) ** self.p) ** (1.0 / self.p))
        return float(np.max(np.abs(self.functionals @ a)))

    def dual_norm_of(self, coords) -> float:
        """Norm of a dual element acting by the dot product.

        Conjugate-exponent formulas for the lp kinds; a linear program over
        the unit ball for polyhedral norms.
        """
        c = _coerce(coords, self.dim)
        if self.kind == "lp":
            if math.isinf(self.p):
                return float(np.sum(np.abs(c)))
            if self.p == 1.0:
                return float(np.max(np.abs(c)))
            q = self.p / (self.p - 1.0)
            return float(np.sum(np.abs(c) ** q) ** (1.0 / q))
        if self.kind == "weighted_lp":
            w = self.weights
            if math.isinf(self.p):
                return float(np.sum(np.abs(c) / w))
            if self.p == 1.0:
                return float(np.max(np.abs(c) / w))
            q = self.p / (self.p - 1.0)
            return float(np.sum((np.abs(c) / w ** (1.0 / self.p)) ** q) ** (1.0 / q))
        # max c.x subject to |a_i . x| <= 1
        a = self.functionals
        ub = np.vstack([a, -a])
        res = linprog(-c, A_ub=ub, b_ub=np.ones(2 * len(a)), bounds=[(None, None)] * self.dim,
                      method="highs")
        if not res.success:
            raise ArithmeticError(f"dual norm LP failed: {res.message}")
        return float(-res.fun)

    # -- element constructors ---------------------------------------------

    def vector(self, coords) -> "Vector":
        return Vector(_as_coords(coords, self.dim), self)

    def functional(self, coords) -> "Functional":
        return Functional(_as_coords(coords, self.dim), self)

    def basis_vector(self, i: int) -> "Vector":
        e = np.zeros(self.dim)
        e[i] = 1.0
        return Vector(e, self)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "lp":
            return {"kind": "lp", "dim": self.dim, "p": "inf" if math.isinf(self.p) else self.p}
        if self.kind == "weighted_lp":
            return {"kind": "weighted_lp", "dim": self.dim,
                    "p": "inf" if math.isinf(self.p) else self.p,
                    "weights": list(self.weights)}
        return {"kind": "polyhedral", "dim": self.dim,
                "functionals": [list(row) for row in self.functionals]}

    @classmethod
    def from_json(cls, data: Union[dict, str]) -> "NormSpec":
        if isinstance(data, str):
            data = json.loads(data)
        kind = data.get("kind")
        dim = int(data.get("dim", 0))
        if kind in ("lp", "weighted_lp"):
            p = data.get("p")
            p = math.inf if p == "inf" else float(p)
            if kind == "lp":
                return cls.lp(dim, p)
            return cls.weighted_lp(dim, p, data["weights"])
        if kind == "polyhedral":
            return cls.polyhedral(dim, data["functionals"])
        raise ValueError(f"unknown space kind {kind!r}")

    # -- classification helpers --------------------------------------------

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "lp" and self.p == 2.0

    @property
    def is_smooth_space(self) -> bool:
        """True when every nonzero point has a unique supporting functional."""
        return self.kind in ("lp", "weighted_lp") and 1.0 < self.p < math.inf


@dataclass(frozen=True, eq=False)
class Vector:
    """Element of a normed space: coordinates plus the space they live in."""

    coords: np.ndarray
    space: NormSpec

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(_as_coords(self.coords, self.space.dim)))

    @property
    def norm(self) -> float:
        return self.space.norm_of(self.coords)

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.coords == 0.0))

    def unit(self) -> "Vector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Vector(self.coords / n, self.space)

    def _check_space(self, other: "Vector"):
        if self.space != other.space:
            raise ValueError("vectors belong to different spaces")

    def __add__(self, other: "Vector") -> "Vector":
        self._check_space(other)
        return Vector(self.coords + other.coords, self.space)

    def __sub__(self, other: "Vector") -> "Vector":
        self._check_space(other)
        return Vector(self.coords - other.coords, self.space)

    def __neg__(self) -> "Vector":
        return Vector(-self.coords, self.space)

    def __mul__(self, t: float) -> "Vector":
        return Vector(self.coords * float(t), self.space)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Vector({list(self.coords)})"


@dataclass(frozen=True, eq=False)
class Functional:
    """Dual-space element acting on predual vectors by the dot product."""

    coords: np.ndarray
    space: NormSpec  # the predual space

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(_as_coords(self.coords, self.space.dim)))

    @property
    def dual_norm(self) -> float:
        return self.space.dual_norm_of(self.coords)

    def __call__(self, x: Union[Vector, np.ndarray, Sequence[float]]) -> float:
        c = x.coords if isinstance(x, Vector) else _as_coords(x, self.space.dim)
        return float(np.dot(self.coords, c))

    def __neg__(self) -> "Functional":
        return Functional(-self.coords, self.space)

    def __repr__(self):
        return f"Functional({list(self.coords)})"


@dataclass(frozen=True, eq=False)
class SupportDescription:
    """One supporting functional at a nonzero point plus the smoothness verdict.

    ``witness`` is a member of the supporting set of ``point`` normalized to
    the unit sphere; ``kind`` is "singleton" when that set is a single
    functional and "face" otherwise.
    """

    point: Vector
    kind: str
    witness: Functional
    is_smooth: bool


class ExposedPoint(NamedTuple):
    """Result of the exposed-point test: verdict plus a norming smooth point."""

    exposed: bool
    point: Optional[Vector]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def norm(x: Vector) -> float:
    """Norm of ``x`` in its own space."""
    return x.norm


def _active_sets(space: NormSpec, u: np.ndarray, tol: Tolerances):
    """Indices where the max defining the norm is attained (linf/polyhedral)."""
    if space.kind == "polyhedral":
        vals = space.functionals @ u
        m = np.max(np.abs(vals))
        active = np.nonzero(np.abs(vals) >= m - tol.scaled(m))[0]
        return vals, active
    w = space.weights if space.kind == "weighted_lp" else np.ones(space.dim)
    vals = w * np.abs(u)
    m = np.max(vals)
    active = np.nonzero(vals >= m - tol.scaled(m))[0]
    return vals, active


def directional_derivative(u: Vector, x: Vector, tol: Tolerances = DEFAULT_TOL) -> float:
    """One-sided derivative of the norm at the unit vector ``u`` toward ``x``.

    Closed forms for every supported kind: the norm gradient for smooth lp,
    active-coordinate or active-functional maxima for l1/linf/polyhedral.
    Finite by convexity; sublinear in ``x``.
    """
    space = u.space
    u._check_space(x)
    un = u.norm
    if abs(un - 1.0) > 1e-6:
        raise ValueError(f"u must be a unit vector (norm {un})")
    uc, xc = u.coords, x.coords
    w = space.weights if space.kind == "weighted_lp" else np.ones(space.dim)
    p = space.p

    if space.kind in ("lp", "weighted_lp") and 1.0 < p < math.inf:
        g = w * np.sign(uc) * np.abs(uc) ** (p - 1.0) / un ** (p - 1.0)
        return float(np.dot(g, xc))
    if space.kind in ("lp", "weighted_lp") and p == 1.0:
        on = uc != 0.0
        return float(np.dot(w[on] * np.sign(uc[on]), xc[on]) + np.sum(w[~on] * np.abs(xc[~on])))
    if space.kind in ("lp", "weighted_lp"):  # p = inf
        _, active = _active_sets(space, uc, tol)
        return float(np.max(w[active] * np.sign(uc[active]) * xc[active]))
    if space.kind == "polyhedral":
        vals, active = _active_sets(space, uc, tol)
        return float(np.max(np.sign(vals[active]) * (space.functionals[active] @ xc)))
    return finite_difference_directional(u, x, tol)


def finite_difference_directional(u: Vector, x: Vector, tol: Tolerances = DEFAULT_TOL) -> float:
    """One-sided difference quotient with step halving, t = 2^-k for k = 10..40.

    Convexity makes the quotient monotone in t, so agreement of two
    successive estimates certifies convergence.
    """
    space = u.space
    un = u.norm
    prev = None
    est = None
    for k in range(10, 41):
        t = 2.0 ** -k
        est = (space.norm_of(u.coords + t * x.coords) - un) / t
        if prev is not None and abs(est - prev) <= tol.fd:
            return float(est)
        prev = est
    return float(est)


def support_set(x: Vector, tol: Tolerances = DEFAULT_TOL) -> SupportDescription:
    """A supporting functional at ``x`` and whether it is the only one.

    The witness has dual norm one and attains the norm of ``x``.  For the
    face cases (l1 with a zero coordinate, linf/polyhedral with a tied max)
    one member of the face is returned.
    """
    if x.is_zero:
        raise ValueError("support_set is undefined at x = 0")
    space = x.space
    xc = x.coords
    xn = x.norm
    w = space.weights if space.kind == "weighted_lp" else np.ones(space.dim)
    p = space.p

    if space.kind in ("lp", "weighted_lp") and 1.0 < p < math.inf:
        g = w * np.sign(xc) * np.abs(xc) ** (p - 1.0) / xn ** (p - 1.0)
        return SupportDescription(x, "singleton", Functional(g, space), True)

    if space.kind in ("lp", "weighted_lp") and p == 1.0:
        on = xc != 0.0
        g = np.where(on, w * np.sign(xc), 0.0)
        smooth = bool(np.all(on))
        return SupportDescription(x, "singleton" if smooth else "face",
                                  Functional(g, space), smooth)

    if space.kind in ("lp", "weighted_lp"):  # p = inf
        _, active = _active_sets(space, xc, tol)
        i = int(active[0])
        g = np.zeros(space.dim)
        g[i] = w[i] * np.sign(xc[i])
        smooth = len(active) == 1
        return SupportDescription(x, "singleton" if smooth else "face",
                                  Functional(g, space), smooth)

    # polyhedral: active signed functionals, deduplicated up to coincidence
    vals, active = _active_sets(space, xc, tol)
    signed = np.sign(vals[active])[:, None] * space.functionals[active]
    distinct = [signed[0]]
    for row in signed[1:]:
        if all(np.max(np.abs(row - d)) > tol.scaled(1.0) for d in distinct):
            distinct.append(row)
    smooth = len(distinct) == 1
    return SupportDescription(x, "singleton" if smooth else "face",
                              Functional(distinct[0], space), smooth)


def _lp_norming_point(space: NormSpec, c: np.ndarray) -> np.ndarray:
    """Point of the unit sphere where the unit functional c attains its norm."""
    w = space.weights if space.kind == "weighted_lp" else np.ones(space.dim)
    p = space.p
    if 1.0 < p < math.inf:
        q = p / (p - 1.0)
        mag = (np.abs(c) / w) ** (q - 1.0)
        x = np.sign(c) * mag
        n = space.norm_of(x)
        return x / n
    raise ValueError("norming point formula requires 1 < p < inf")


def is_w_star_exposed(f: Functional, tol: Tolerances = DEFAULT_TOL) -> ExposedPoint:
    """Whether a unit dual element is the unique supporting functional of
    some smooth unit vector; returns that exposing point when it exists.

    For smooth lp kinds every unit functional qualifies.  For l1 the exposed
    duals are the full sign patterns, for linf the signed coordinate
    functionals, and for polyhedral norms the functionals that define a facet
    of the unit ball (decided by a small linear program).
    """
    space = f.space
    c = f.coords
    dn = space.dual_norm_of(c)
    if abs(dn - 1.0) > 1e-6:
        raise ValueError(f"functional must have dual norm 1 (got {dn})")
    w = space.weights if space.kind == "weighted_lp" else np.ones(space.dim)
    p = space.p

    if space.kind in ("lp", "weighted_lp") and 1.0 < p < math.inf:
        x = _lp_norming_point(space, c)
        return ExposedPoint(True, Vector(x, space))

    if space.kind in ("lp", "weighted_lp") and p == 1.0:
        # dual is sup-type; exposed iff every coordinate attains |c_i| = w_i
        if np.all(np.abs(np.abs(c) / w - 1.0) <= tol.scaled(1.0)):
            x = np.sign(c) / (w * space.dim)
            x = x / space.norm_of(x)
            return ExposedPoint(True, Vector(x, space))
        return ExposedPoint(False, None)

    if space.kind in ("lp", "weighted_lp"):  # p = inf, dual is sum-type
        scaled = np.abs(c) / w
        i = int(np.argmax(scaled))
        e = np.zeros(space.dim)
        e[i] = np.sign(c[i]) / w[i]
        if space.dual_norm_of(c - w[i] * np.sign(c[i]) * _unit_coord(space.dim, i)) <= tol.scaled(1.0):
            x = e / space.norm_of(e)
            return ExposedPoint(True, Vector(x, space))
        return ExposedPoint(False, None)

    return _polyhedral_exposed(space, c, tol)


def _unit_coord(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim)
    e[i] = 1.0
    return e


def _polyhedral_exposed(space: NormSpec, c: np.ndarray, tol: Tolerances) -> ExposedPoint:
    a = space.functionals
    scale = np.max(np.abs(c))
    for i in range(len(a)):
        for s in (1.0, -1.0):
            if np.max(np.abs(c - s * a[i])) > tol.scaled(scale) * 1e3:
                continue
            # maximize t with a_i.x = s, |a_j.x| <= 1 - t for j not parallel
            others = [j for j in range(len(a))
                      if j != i and np.max(np.abs(np.abs(a[j]) - np.abs(a[i]))) > 1e-12]
            n = space.dim
            if others:
                rows = np.vstack([np.hstack([a[others], np.ones((len(others), 1))]),
                                  np.hstack([-a[others], np.ones((len(others), 1))])])
                b = np.ones(2 * len(others))
            else:
                rows = np.zeros((0, n + 1))
                b = np.zeros(0)
            eq = np.hstack([s * a[i], 0.0])[None, :]
            res = linprog(np.hstack([np.zeros(n), -1.0]), A_ub=rows, b_ub=b,
                          A_eq=eq, b_eq=[1.0],
                          bounds=[(None, None)] * n + [(None, 2.0)], method="highs")
            if res.success and res.x[-1] > 1e-9:
                x = res.x[:n]
                x = x / space.norm_of(x)
                desc = support_set(Vector(x, space), tol)
                if desc.is_smooth:
                    return ExposedPoint(True, Vector(x, space))
    return ExposedPoint(False, None)
