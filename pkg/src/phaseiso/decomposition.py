"""Factoring a declared-surjective phase-isometry oracle into sign * isometry.

The engine recovers a linear isometry T and a sign table eps such that
eps(x) * T x reproduces every oracle answer, or fails with a concrete
witness.  Four constructive routes are provided:

* ``one_dim``  -- T(t) = t * f(x0) for a unit x0, signs read off per sample
* ``smooth``   -- sign pinning on probe pairs, functional-recovery
                  corroboration, projective recovery from basis images
* ``linf``     -- coordinate-functional alignment, sign-map verification,
                  hyperplane pinning, frame assembly
* ``l1``       -- basis-ray homogeneity, finite-support expansion with norm
                  bookkeeping, exposed-functional sign fixing

plus a best-effort ``generic`` route (pinning + projective recovery) for
space kinds none of the specialized arguments cover.  Every run finishes by
re-verifying the defining equation on fresh pairs through the recovered
factorization and by replaying the full query log against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .orthogonality import is_birkhoff_orthogonal
from .phase_maps import (LinearMap, PhaseMapOracle, SignAssignment, canonical_ray,
                         multiset_match, ray_key)
from .settings import DEFAULT_TOL, Tolerances
from .spaces import Functional, NormSpec, Vector, is_w_star_exposed, support_set

__all__ = [
    "DecompositionError",
    "NotDecomposable",
    "RangeDegenerate",
    "CollinearityViolation",
    "RouteUnsupported",
    "SurjectivityNotDeclared",
    "NoStabilization",
    "SmoothnessFailure",
    "NotExposed",
    "SignPinning",
    "FunctionalRecovery",
    "TwoDimNormalization",
    "DecompositionCertificate",
    "QueryPlan",
    "plan_queries",
    "route_for",
    "pin_signs",
    "normalize_two_dim",
    "recover_projective_linear",
    "recover_functional",
    "decompose",
]

ROUTES = ("auto", "one_dim", "smooth", "linf", "l1", "generic")

_HOM_GRID = (0.5, 2.0, -1.0, 3.0)
_TWO_DIM_GRID = tuple(s * 2.0 ** k for k in range(-6, 7) for s in (1.0, -1.0))
_SCHEDULE = tuple(2.0 ** k for k in range(21))


class DecompositionError(Exception):
    """Base class for decomposition failures."""


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj]
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


class NotDecomposable(DecompositionError):
    """The oracle violates an identity every decomposable map satisfies."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = _plain(witness)


class RangeDegenerate(NotDecomposable):
    """Probe images span too small a subspace of the codomain."""


class CollinearityViolation(NotDecomposable):
    """A probe image left the line the recovered linear map predicts."""


class RouteUnsupported(DecompositionError):
    """The requested route does not apply to the domain space."""


class SurjectivityNotDeclared(RouteUnsupported):
    """A surjective route was requested for an oracle without the declaration."""


class NoStabilization(DecompositionError):
    """The functional-recovery schedule ran out before estimates settled."""


class SmoothnessFailure(DecompositionError):
    """The image of a schedule point is not a smooth point of the codomain."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class NotExposed(DecompositionError):
    """The requested functional is not an exposed point of the dual ball."""


# ---------------------------------------------------------------------------
# sign pinning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignPinning:
    """Best (alpha, beta) in {-1,+1}^2 with f(x+y) ~ alpha f(x) + beta f(y)."""

    alpha: int
    beta: int
    residual: float
    tied: bool = False

    @property
    def product(self) -> int:
        return self.alpha * self.beta


def _independent(x: np.ndarray, y: np.ndarray) -> bool:
    s = np.linalg.svd(np.vstack([x, y]), compute_uv=False)
    return s[-1] > 1e-12 * max(s[0], 1.0)


def pin_signs(f: PhaseMapOracle, x, y, tol: Tolerances = DEFAULT_TOL) -> SignPinning:
    """Pin the sign combination relating f(x+y) to f(x) and f(y).

    Tries all four combinations and keeps the smallest residual; exact ties
    are broken toward (+1, +1) and flagged.  Raises :class:`NotDecomposable`
    when no combination fits.
    """
    xc = x.coords if isinstance(x, Vector) else np.asarray(x, float)
    yc = y.coords if isinstance(y, Vector) else np.asarray(y, float)
    if not _independent(xc, yc):
        raise ValueError("pin_signs requires linearly independent inputs; "
                         "route dependent pairs through the one-dimensional path")
    cod = f.codomain
    fx, fy, fxy = f(xc), f(yc), f(xc + yc)
    residuals = {}
    for a in (1, -1):
        for b in (1, -1):
            residuals[(a, b)] = cod.norm_of(fxy - (a * fx + b * fy))
    best = min(residuals, key=residuals.get)
    r_best = residuals[best]
    tied = sum(1 for r in residuals.values() if r <= r_best + tol.tie) > 1
    if tied and residuals[(1, 1)] <= r_best + tol.tie:
        best = (1, 1)
        r_best = residuals[best]
    scale = f.domain.norm_of(xc + yc)
    if r_best > tol.scaled(scale):
        raise NotDecomposable(
            f"no sign combination reproduces f(x+y); best residual {r_best:.3e}",
            witness=(list(xc), list(yc)))
    return SignPinning(best[0], best[1], r_best, tied)


# ---------------------------------------------------------------------------
# probe planning
# ---------------------------------------------------------------------------


def route_for(space: NormSpec) -> str:
    """Resolve the automatic route for a space."""
    if space.dim == 1:
        return "one_dim"
    if space.kind in ("lp", "weighted_lp"):
        if space.p == 1.0:
            return "l1" if space.kind == "lp" else "generic"
        if math.isinf(space.p):
            return "linf" if space.kind == "lp" else "generic"
        return "smooth"
    return "generic"


@dataclass
class QueryPlan:
    """Deterministic probe sets for one decomposition run.

    Built from (space, route, seed) alone, so a sample table generated from
    the same triple contains every point the run will query.
    """

    space: NormSpec
    route: str
    seed: int
    basis: List[np.ndarray] = field(default_factory=list)
    ones: Optional[np.ndarray] = None
    pair_sums: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    randoms: List[np.ndarray] = field(default_factory=list)
    random_pair_sums: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    hom_checks: List[Tuple[np.ndarray, float, np.ndarray]] = field(default_factory=list)
    basis_ray_grid: List[Tuple[int, float, np.ndarray]] = field(default_factory=list)
    schedules: Dict[str, Tuple[Functional, Vector, List[np.ndarray]]] = field(default_factory=dict)
    theta_bases: List[np.ndarray] = field(default_factory=list)
    theta_points: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    hyper_pins: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    two_dim_reps: List[np.ndarray] = field(default_factory=list)
    verify_points: List[np.ndarray] = field(default_factory=list)
    fresh_pairs: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    one_dim_ts: List[float] = field(default_factory=list)

    def all_points(self) -> List[np.ndarray]:
        """Every point the run may query, deduplicated by exact coordinates."""
        seen = {}
        def add(p):
            seen.setdefault(tuple(map(float, p)), np.asarray(p, float))
        for p in self.basis:
            add(p)
        if self.ones is not None:
            add(self.ones)
        for p in self.pair_sums.values():
            add(p)
        for p in self.randoms:
            add(p)
        for x, y, z in self.random_pair_sums:
            add(x); add(y); add(z)
        for base, t, p in self.hom_checks:
            add(base); add(p)
        for i, t, p in self.basis_ray_grid:
            add(p)
        for _, u, pts in self.schedules.values():
            add(u.coords)
            for p in pts:
                add(p)
        for x, tx, nx in self.theta_points:
            add(x); add(tx); add(nx)
        for z, e, ze in self.hyper_pins:
            add(z); add(e); add(ze)
        for p in self.two_dim_reps:
            add(p)
        for p in self.verify_points:
            add(p)
        for x, y in self.fresh_pairs:
            add(x); add(y)
        if self.space.dim == 1:
            for t in self.one_dim_ts:
                add(np.array([t]))
            add(np.array([1.0]))
        return list(seen.values())


def _unit_functional(space: NormSpec, coords: np.ndarray) -> Functional:
    c = np.asarray(coords, float)
    return Functional(c / space.dual_norm_of(c), space)


def _schedule_for(space: NormSpec, x_star: Functional, tol: Tolerances):
    exposed = is_w_star_exposed(x_star, tol)
    if not exposed.exposed:
        raise NotExposed("functional is not an exposed point of the dual ball; "
                         "no smooth norming point exists")
    u = exposed.point
    return x_star, u, [t * u.coords for t in _SCHEDULE]


def plan_queries(space: NormSpec, route: str = "auto", seed: int = 0,
                 tol: Tolerances = DEFAULT_TOL) -> QueryPlan:
    """Lay out every probe a decomposition run will use, ahead of time."""
    route = _validate_route(space, route)
    n = space.dim
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x9E37]))
    plan = QueryPlan(space=space, route=route, seed=seed)

    if route == "one_dim":
        grid = [0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0]
        plan.one_dim_ts = grid + [float(t) for t in rng.uniform(-8.0, 8.0, size=20)]
        plan.fresh_pairs = [(np.array([float(a)]), np.array([float(b)]))
                            for a, b in rng.uniform(-5.0, 5.0, size=(25, 2))]
        return plan

    eye = np.eye(n)
    plan.basis = [eye[i].copy() for i in range(n)]
    plan.ones = np.ones(n)
    for i in range(n):
        for j in range(i + 1, n):
            plan.pair_sums[(i, j)] = eye[i] + eye[j]
    plan.randoms = [rng.standard_normal(n) for _ in range(3 * n)]
    for k in range(min(5, len(plan.randoms) // 2)):
        x, y = plan.randoms[2 * k], plan.randoms[2 * k + 1]
        plan.random_pair_sums.append((x, y, x + y))

    hom_bases = [eye[0]] + plan.randoms[:2]
    for base in hom_bases:
        for t in _HOM_GRID:
            plan.hom_checks.append((base, t, t * base))

    if route == "l1":
        for i in range(n):
            for t in _HOM_GRID:
                plan.basis_ray_grid.append((i, t, t * eye[i]))
        plan.schedules["exposed"] = _schedule_for(space, _unit_functional(space, np.ones(n)), tol)
    if route == "linf":
        for i in range(n):
            plan.schedules[f"coord{i}"] = _schedule_for(space, _unit_functional(space, eye[i]), tol)
        for x in plan.randoms[:6]:
            theta = np.sign(x)
            nx = space.norm_of(x)
            plan.theta_bases.append(x)
            plan.theta_points.append((x, theta, nx * theta))
    if route == "smooth" and n >= 3:
        plan.schedules["coord0"] = _schedule_for(space, _unit_functional(space, eye[0]), tol)
    if route in ("linf", "l1"):
        for x in plan.randoms[:6]:
            z = x.copy()
            z[0] = 0.0
            if not np.any(z):
                continue
            plan.hyper_pins.append((z, eye[0].copy(), z + eye[0]))

    if n == 2 and route in ("smooth", "generic"):
        for a in _TWO_DIM_GRID:
            z = a * eye[0] + eye[1]
            plan.two_dim_reps.append(canonical_ray(z, space))
        plan.two_dim_reps.append(canonical_ray(eye[0], space))
        plan.two_dim_reps.append(canonical_ray(eye[1], space))

    plan.verify_points = [rng.standard_normal(n) for _ in range(100)]
    plan.fresh_pairs = [(rng.standard_normal(n), rng.standard_normal(n)) for _ in range(25)]
    return plan


# ---------------------------------------------------------------------------
# functional recovery
# ---------------------------------------------------------------------------


@dataclass
class FunctionalRecovery:
    """Unit codomain functional phi with |x*(x)| = |phi(f(x))| on the samples."""

    x_star: Functional
    phi: Functional
    exposing_point: Vector
    stabilized_at: float
    trace: List[Tuple[float, float]]
    samples: List[np.ndarray]
    sign_pattern: List[int]
    max_deviation: float

    def to_dict(self) -> dict:
        return {
            "x_star": list(self.x_star.coords),
            "phi": list(self.phi.coords),
            "exposing_point": list(self.exposing_point.coords),
            "stabilized_at": self.stabilized_at,
            "trace": [[t, d] for t, d in self.trace],
            "sign_pattern": self.sign_pattern,
            "max_deviation": self.max_deviation,
        }


def _canonical_functional(c: np.ndarray) -> np.ndarray:
    for v in c:
        if v != 0.0:
            return -c if v < 0.0 else c
    return c


def recover_functional(f: PhaseMapOracle, x_star: Functional,
                       schedule: Optional[Sequence[np.ndarray]] = None,
                       verify_points: Optional[Sequence[np.ndarray]] = None,
                       exposing_point: Optional[Vector] = None,
                       tol: Tolerances = DEFAULT_TOL) -> FunctionalRecovery:
    """Recover the unit codomain functional matched to an exposed x*.

    Takes the supporting functional of the codomain norm at f(t*u), where u
    is the smooth point exposed by x*, along the doubling schedule t = 2^k,
    stopping once successive estimates agree in dual norm; the result is
    oriented so phi(f(u)) > 0 and checked against |x*(x)| on the samples.
    """
    if exposing_point is None:
        exposed = is_w_star_exposed(x_star, tol)
        if not exposed.exposed:
            raise NotExposed(
                "functional is not exposed: no smooth point is normed by it alone")
        u = exposed.point
    else:
        u = exposing_point
    cod = f.codomain
    if schedule is None:
        schedule = [t * u.coords for t in _SCHEDULE]

    prev = None
    phi_coords = None
    stabilized_at = None
    trace: List[Tuple[float, float]] = []
    for point in schedule:
        t = float(np.linalg.norm(point) / max(np.linalg.norm(u.coords), 1e-300))
        img = Vector(f(point), cod)
        if img.is_zero:
            raise SmoothnessFailure(f"f vanished on the schedule at t={t}", t)
        desc = support_set(img, tol)
        if not desc.is_smooth:
            raise SmoothnessFailure(
                f"f(t*u) is not a smooth point of the codomain at t={t}", t)
        cur = _canonical_functional(desc.witness.coords)
        if prev is not None:
            delta = cod.dual_norm_of(cur - prev)
            trace.append((t, delta))
            if delta < tol.stabilization:
                phi_coords = cur
                stabilized_at = t
                break
        prev = cur
    if phi_coords is None:
        raise NoStabilization("functional estimates never settled on the schedule")

    fu = f(u.coords)
    orient = float(np.dot(phi_coords, fu))
    if orient < 0.0:
        phi_coords = -phi_coords
    phi = Functional(phi_coords, cod)

    samples = list(verify_points) if verify_points is not None else []
    signs = []
    max_dev = 0.0
    for v in samples:
        lhs = x_star(v)
        rhs = phi(f(v))
        dev = abs(abs(lhs) - abs(rhs))
        max_dev = max(max_dev, dev)
        if dev > tol.functional * (1.0 + f.domain.norm_of(v)):
            raise NotDecomposable(
                f"|x*(x)| and |phi(f(x))| disagree by {dev:.3e}", witness=list(v))
        if abs(lhs) > tol.scaled(1.0) and abs(rhs) > tol.scaled(1.0):
            signs.append(1 if lhs * rhs > 0 else -1)
        else:
            signs.append(1)
    return FunctionalRecovery(x_star, phi, u, stabilized_at, trace, samples, signs, max_dev)


# ---------------------------------------------------------------------------
# two-dimensional normalization
# ---------------------------------------------------------------------------


@dataclass
class TwoDimNormalization:
    """Certified sign-product constancy on the grid plus the linear map it yields.

    ``products`` maps each grid ratio a to alpha(a)*beta(a); certification
    means every pin succeeded and every product equals the one at a = 1, so
    the derived map g(a x + b y) = a g(x) + b g(y) is linear and phase
    equivalent to the oracle.
    """

    pi: int
    products: Dict[float, int]
    pins: Dict[float, SignPinning]
    linear: LinearMap

    @property
    def certified(self) -> bool:
        return all(v == self.pi for v in self.products.values())

    def as_oracle(self) -> PhaseMapOracle:
        lin = self.linear
        return PhaseMapOracle.from_callable(
            lin.domain, lin.codomain, lambda c: lin.matrix @ c,
            declared_surjective=True, name="normalized")


def _homogenized(f: PhaseMapOracle, tol: Tolerances):
    """View of f that queries only canonical representatives.

    Returns a callable z -> s * f(rep(z)) agreeing with +-f(z) pointwise
    whenever f maps rays into rays.
    """
    space = f.domain

    def f0(z: np.ndarray) -> np.ndarray:
        nz = space.norm_of(z)
        if nz == 0.0:
            return np.zeros(f.codomain.dim)
        rep = canonical_ray(z, space)
        s = nz if np.dot(rep, z) > 0.0 else -nz
        return s * f(rep)

    return f0


def normalize_two_dim(f: PhaseMapOracle, tol: Tolerances = DEFAULT_TOL,
                      grid: Sequence[float] = _TWO_DIM_GRID) -> TwoDimNormalization:
    """Turn a two-dimensional phase-map oracle into a certified linear map.

    Works on the homogenized view of f over the basis {e1, e2}: pins the
    sign pair of f0(a e1 + e2) against its components for every grid ratio a
    and demands the product alpha(a)*beta(a) be the constant alpha(1)*beta(1).
    A violating grid point means no sign function can linearize the oracle.
    """
    space = f.domain
    if space.dim != 2:
        raise RouteUnsupported("normalize_two_dim requires a two-dimensional domain")
    cod = f.codomain
    f0 = _homogenized(f, tol)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    g1 = f0(e1)
    g2 = f0(e2)

    pins: Dict[float, SignPinning] = {}
    products: Dict[float, int] = {}
    for a in grid:
        target = f0(a * e1 + e2)
        residuals = {}
        for al in (1, -1):
            for be in (1, -1):
                residuals[(al, be)] = cod.norm_of(target - (al * a * g1 + be * g2))
        best = min(residuals, key=residuals.get)
        r_best = residuals[best]
        tied = sum(1 for r in residuals.values() if r <= r_best + tol.tie) > 1
        scale = space.norm_of(a * e1 + e2)
        if r_best > tol.scaled(scale):
            raise NotDecomposable(
                f"sign pinning failed on the normalization grid at a={a}",
                witness=("grid", a, r_best))
        pins[a] = SignPinning(best[0], best[1], r_best, tied)
        products[a] = best[0] * best[1]

    pi = products.get(1.0, pins[grid[0]].product)
    offenders = [a for a, v in products.items() if v != pi]
    if offenders:
        raise NotDecomposable(
            "sign-product constancy fails on the normalization grid at "
            f"a={offenders[0]}", witness=("product", offenders[0]))

    matrix = np.column_stack([pi * g1, g2])
    linear = LinearMap(matrix, space, cod, isometric=True)
    return TwoDimNormalization(pi, products, pins, linear)


# ---------------------------------------------------------------------------
# projective linear recovery
# ---------------------------------------------------------------------------


def recover_projective_linear(f: PhaseMapOracle, plan: QueryPlan,
                              tol: Tolerances = DEFAULT_TOL) -> LinearMap:
    """Recover a linear map A with [A x] = [f(x)] from basis images.

    Classical projective coordinates: scale each basis image so the image of
    the all-ones vector has unit coordinates in that frame, then verify
    collinearity of A x with f(x) on the verification probes.
    """
    space = f.domain
    n = space.dim
    if n < 2:
        raise RouteUnsupported("projective recovery requires dimension >= 2; "
                               "use the one-dimensional path")
    v = np.column_stack([f(e) for e in plan.basis])
    sing = np.linalg.svd(v, compute_uv=False)
    if sing[-1] <= 1e-9 * max(sing[0], 1.0):
        raise RangeDegenerate(
            "basis images are linearly dependent; the range collapses into "
            "a lower-dimensional subspace", witness=None)
    s_img = f(plan.ones)
    c = np.linalg.lstsq(v, s_img, rcond=None)[0]
    fit = v @ c - s_img
    if np.linalg.norm(fit) > tol.scaled(space.norm_of(plan.ones)) * 10:
        raise CollinearityViolation(
            "image of the all-ones probe is not in the span of the basis images",
            witness=list(plan.ones))
    a = v * c
    lin = LinearMap(a, space, f.codomain)

    for probe in plan.verify_points:
        ax = a @ probe
        fx = f(probe)
        na, nf = np.linalg.norm(ax), np.linalg.norm(fx)
        if na < 1e-12 or nf < 1e-12:
            continue
        unit = fx / nf
        sine = np.linalg.norm(ax - np.dot(ax, unit) * unit) / na
        if sine > tol.collinearity:
            raise CollinearityViolation(
                f"probe image left the predicted line (sine residual {sine:.3e})",
                witness=list(probe))
    return lin


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class DecompositionCertificate:
    """Recovered factorization with its verification transcript."""

    T: LinearMap
    sign_table: SignAssignment
    route: str
    residual_max: float
    verified_pairs: int
    max_equation_discrepancy: float
    surjectivity: str
    queried_points: int
    tolerances: Tolerances
    diagnostics: dict = field(default_factory=dict)

    def reconstruct(self, x) -> np.ndarray:
        """eps(x) * T x from the recorded sign table."""
        coords = x.coords if isinstance(x, Vector) else np.asarray(x, float)
        return self.sign_table.get(coords) * (self.T.matrix @ coords)

    def to_json(self) -> dict:
        return {
            "route": self.route,
            "T": [list(row) for row in self.T.matrix],
            "sign_table": self.sign_table.to_dict(),
            "residual_max": self.residual_max,
            "verified_pairs": self.verified_pairs,
            "max_equation_discrepancy": self.max_equation_discrepancy,
            "surjectivity": self.surjectivity,
            "queried_points": self.queried_points,
            "tolerances": self.tolerances.to_dict(),
            "diagnostics": self.diagnostics,
        }


def _normalize_global_sign(matrix: np.ndarray, tol: Tolerances) -> np.ndarray:
    col = matrix[:, 0]
    for val in col:
        if abs(val) > tol.scaled(1.0):
            return -matrix if val < 0.0 else matrix
    return matrix


def _assemble_certificate(f: PhaseMapOracle, matrix: np.ndarray, route: str,
                          plan: QueryPlan, tol: Tolerances,
                          diagnostics: dict) -> DecompositionCertificate:
    """Shared final stage: sign normalization, fresh-pair re-verification,
    and the full query-log replay that the certificate asserts."""
    space, cod = f.domain, f.codomain
    matrix = _normalize_global_sign(matrix, tol)
    t_map = LinearMap(matrix, space, cod, isometric=True)

    def best_sign(coords, fx):
        tx = matrix @ coords
        r_plus = cod.norm_of(fx - tx)
        r_minus = cod.norm_of(fx + tx)
        return (1, r_plus) if r_plus <= r_minus else (-1, r_minus)

    # re-verify the defining equation through the factorization on fresh pairs
    worst_disc = 0.0
    for x, y in plan.fresh_pairs:
        sx, _ = best_sign(x, f(x))
        sy, _ = best_sign(y, f(y))
        rx = sx * (matrix @ x)
        ry = sy * (matrix @ y)
        got = (cod.norm_of(rx + ry), cod.norm_of(rx - ry))
        want = (space.norm_of(x + y), space.norm_of(x - y))
        ok, disc = multiset_match(got, want, tol)
        worst_disc = max(worst_disc, disc)
        if not ok:
            raise NotDecomposable(
                "reconstructed map violates the defining equation on a fresh pair",
                witness=(list(x), list(y)))

    # replay every logged query against eps * T
    sign_table = SignAssignment(space)
    residual_max = 0.0
    for coords in list(f.query_log):
        if not np.any(coords):
            continue
        fx = f(coords)
        s, residual = best_sign(coords, fx)
        residual_max = max(residual_max, residual)
        if residual > tol.scaled(space.norm_of(coords)):
            raise NotDecomposable(
                f"logged query is not reproduced by the factorization "
                f"(residual {residual:.3e})", witness=list(coords))
        sign_table.table[ray_key(coords, space)] = s

    return DecompositionCertificate(
        T=t_map,
        sign_table=sign_table,
        route=route,
        residual_max=residual_max,
        verified_pairs=len(plan.fresh_pairs),
        max_equation_discrepancy=worst_disc,
        surjectivity="declared" if f.declared_surjective else "forced",
        queried_points=len(f.query_log),
        tolerances=tol,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# route implementations
# ---------------------------------------------------------------------------


def _check_homogeneity(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances):
    """f(t x) must be +- t f(x) at every grid point."""
    cod = f.codomain
    for base, t, point in plan.hom_checks:
        fb = f(base)
        fp = f(point)
        r = min(cod.norm_of(fp - t * fb), cod.norm_of(fp + t * fb))
        if r > tol.scaled(f.domain.norm_of(point)):
            raise NotDecomposable(
                f"homogeneity fails at t={t} (residual {r:.3e})",
                witness=(t, list(base)))


def _basis_pins(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances) -> Dict[Tuple[int, int], SignPinning]:
    """Pin every planned basis pair and check the products are sign-coherent."""
    pins = {}
    for (i, j), _ in plan.pair_sums.items():
        pins[(i, j)] = pin_signs(f, plan.basis[i], plan.basis[j], tol)
    # triangle coherence: product(i,j) must equal product(0,i)*product(0,j)
    for (i, j), pin in pins.items():
        if i == 0:
            continue
        left = pins[(0, i)].product * pins[(0, j)].product
        if pin.product != left:
            raise NotDecomposable(
                "pairwise sign products are incoherent across basis triples",
                witness=(i, j))
    return pins


def _column_signs(pins: Dict[Tuple[int, int], SignPinning], n: int) -> np.ndarray:
    sigma = np.ones(n)
    for j in range(1, n):
        sigma[j] = pins[(0, j)].product
    return sigma


def _pin_random_pairs(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances):
    for x, y, _ in plan.random_pair_sums:
        pin_signs(f, x, y, tol)


def _route_one_dim(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances):
    cod = f.codomain
    x0 = np.array([1.0])
    fx0 = f(x0)
    for t in plan.one_dim_ts:
        ft = f(np.array([t]))
        r = min(cod.norm_of(ft - t * fx0), cod.norm_of(ft + t * fx0))
        if r > tol.scaled(abs(t)):
            raise NotDecomposable(
                f"f(t) is not +- t f(1) at t={t} (residual {r:.3e})", witness=t)
    return fx0[:, None]


def _route_smooth(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances, diagnostics: dict):
    _check_homogeneity(f, plan, tol)
    if f.domain.dim == 2:
        norm2 = normalize_two_dim(f, tol)
        diagnostics["two_dim_products"] = {str(a): v for a, v in norm2.products.items()}
        return norm2.linear.matrix
    pins = _basis_pins(f, plan, tol)
    _pin_random_pairs(f, plan, tol)
    if "coord0" in plan.schedules:
        x_star, u, schedule = plan.schedules["coord0"]
        rec = recover_functional(f, x_star, schedule, plan.randoms, u, tol)
        diagnostics["functional_max_deviation"] = rec.max_deviation
    lin = recover_projective_linear(f, plan, tol)
    diagnostics["pin_ties"] = sum(1 for p in pins.values() if p.tied)
    return lin.matrix


def _route_generic(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances, diagnostics: dict):
    _check_homogeneity(f, plan, tol)
    if f.domain.dim == 2:
        norm2 = normalize_two_dim(f, tol)
        diagnostics["two_dim_products"] = {str(a): v for a, v in norm2.products.items()}
        return norm2.linear.matrix
    _basis_pins(f, plan, tol)
    _pin_random_pairs(f, plan, tol)
    lin = recover_projective_linear(f, plan, tol)
    return lin.matrix


def _route_linf(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances, diagnostics: dict):
    space, cod = f.domain, f.codomain
    n = space.dim

    # Step 1: recover and align one codomain functional per coordinate
    phis = []
    for i in range(n):
        x_star, u, schedule = plan.schedules[f"coord{i}"]
        rec = recover_functional(f, x_star, schedule, plan.randoms, u, tol)
        phis.append(rec.phi.coords)
    w_matrix = np.vstack(phis)
    for i in range(n):
        for j in range(n):
            val = float(np.dot(phis[i], f(plan.basis[j])))
            want = 1.0 if i == j else 0.0
            if abs(val - want) > math.sqrt(tol.rel):
                raise NotDecomposable(
                    "aligned coordinate functionals do not separate the basis "
                    f"images (phi_{i}(f(e_{j})) = {val:.3e})", witness=(i, j))

    # Step 2: the coordinate sign map must commute with f up to phase
    for x, theta, scaled in plan.theta_points:
        nx = space.norm_of(x)
        support = np.abs(x) > 0.0
        f_theta = f(theta)
        f_scaled = f(scaled)
        f_x = f(x)
        got_a = (cod.norm_of(f_theta + f_scaled), cod.norm_of(f_theta - f_scaled))
        want_a = (1.0 + nx, abs(1.0 - nx))
        ok, _ = multiset_match(got_a, want_a, tol)
        if not ok:
            raise NotDecomposable("sign-map identity (unit vs scaled) fails",
                                  witness=list(x))
        inf_supp = np.min(np.abs(x[support]))
        got_b = (cod.norm_of(f_scaled + f_x), cod.norm_of(f_scaled - f_x))
        want_b = (2.0 * nx, nx - inf_supp)
        ok, _ = multiset_match(got_b, want_b, tol)
        if not ok:
            raise NotDecomposable("sign-map identity (scaled vs original) fails",
                                  witness=list(x))
        b = w_matrix @ f_theta
        c = w_matrix @ f_x
        if np.max(np.abs(np.abs(b[support]) - 1.0)) > math.sqrt(tol.rel):
            raise NotDecomposable("image of a sign vector lost unit coordinates",
                                  witness=list(x))
        rel = np.sign(b[support]) * np.sign(c[support])
        if np.any(rel != rel[0]):
            raise NotDecomposable(
                "coordinate signs of f(x) disagree with the image of the sign "
                "vector", witness=list(x))

    # Step 3: homogeneity, the mutually orthogonal hyperplane pair, pinning
    _check_homogeneity(f, plan, tol)
    _check_hyperplane_pins(f, plan, tol)
    pins = _basis_pins(f, plan, tol)
    sigma = _column_signs(pins, n)
    matrix = np.column_stack([sigma[j] * f(plan.basis[j]) for j in range(n)])
    return matrix


def _check_hyperplane_pins(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances):
    """Condition (b): the coordinate hyperplane is orthogonal to the marked
    direction both ways, and f pins signs across the pair."""
    space = f.domain
    e0 = Vector(plan.basis[0], space)
    for z, _, _ in plan.hyper_pins:
        zv = Vector(z, space)
        if not (is_birkhoff_orthogonal(e0, zv, tol) and is_birkhoff_orthogonal(zv, e0, tol)):
            raise NotDecomposable(
                "coordinate hyperplane is not mutually orthogonal to the marked "
                "direction", witness=list(z))
        pin_signs(f, z, plan.basis[0], tol)


def _route_l1(f: PhaseMapOracle, plan: QueryPlan, tol: Tolerances, diagnostics: dict):
    space, cod = f.domain, f.codomain
    n = space.dim

    # Step 1: basis rays scale correctly and stay disjoint in the image
    for i, t, point in plan.basis_ray_grid:
        fe = f(plan.basis[i])
        ft = f(point)
        r = min(cod.norm_of(ft - t * fe), cod.norm_of(ft + t * fe))
        if r > tol.scaled(abs(t)):
            raise NotDecomposable(
                f"f(t e_{i}) is not +- t f(e_{i}) at t={t}", witness=(i, t))
    for i in range(min(n, 4)):
        j = (i + 1) % n
        ft = f(2.0 * plan.basis[i])
        fe = f(plan.basis[j])
        for sgn in (1.0, -1.0):
            got = cod.norm_of(ft + sgn * fe)
            if abs(got - 3.0) > tol.scaled(3.0):
                raise NotDecomposable(
                    "disjointly supported basis probes lost the additive norm "
                    f"identity ({got} != 3)", witness=(i, j))

    # Steps 2/3: finite-support expansion in the basis images with bookkeeping
    pins = _basis_pins(f, plan, tol)
    sigma = _column_signs(pins, n)
    v = np.column_stack([f(e) for e in plan.basis])
    sing = np.linalg.svd(v, compute_uv=False)
    if sing[-1] <= 1e-9 * max(sing[0], 1.0):
        raise RangeDegenerate("basis images are linearly dependent", witness=None)
    expansion_probes = plan.randoms + [plan.ones] + list(plan.pair_sums.values())
    for x in expansion_probes:
        fx = f(x)
        b = np.linalg.solve(v, fx) if v.shape[0] == v.shape[1] else np.linalg.lstsq(v, fx, rcond=None)[0]
        if cod.norm_of(v @ b - fx) > tol.scaled(space.norm_of(x)):
            raise NotDecomposable("f(x) is outside the span of the basis images",
                                  witness=list(x))
        if np.max(np.abs(np.abs(b) - np.abs(x))) > tol.scaled(space.norm_of(x)):
            raise NotDecomposable(
                "expansion coefficients break the coordinate magnitude bookkeeping",
                witness=list(x))
        support = np.abs(x) > tol.scaled(space.norm_of(x))
        if np.any(support):
            rel = np.sign(b[support]) * np.sign(x[support]) * sigma[support]
            if np.any(rel != rel[0]):
                raise NotDecomposable(
                    "expansion signs are incoherent with the basis sign chain",
                    witness=list(x))
        for m in np.nonzero(support)[0][:4]:
            ssum = cod.norm_of(fx + b[m] * v[:, m]) + cod.norm_of(fx - b[m] * v[:, m])
            if abs(ssum - 2.0 * space.norm_of(x)) > tol.scaled(space.norm_of(x)):
                raise NotDecomposable(
                    "norm bookkeeping identity fails for a support coordinate",
                    witness=(list(x), int(m)))

    # Step 4: the exposed all-signs functional fixes the sign structure
    x_star, u, schedule = plan.schedules["exposed"]
    rec = recover_functional(f, x_star, schedule, plan.randoms, u, tol)
    diagnostics["functional_max_deviation"] = rec.max_deviation

    # Step 5: homogeneity and the hyperplane pinning conditions
    _check_homogeneity(f, plan, tol)
    _check_hyperplane_pins(f, plan, tol)

    matrix = v * sigma
    return matrix


_ROUTE_IMPL = {
    "one_dim": None,  # handled inline
    "smooth": _route_smooth,
    "linf": _route_linf,
    "l1": _route_l1,
    "generic": _route_generic,
}


def _validate_route(space: NormSpec, route: str) -> str:
    resolved = route_for(space) if route == "auto" else route
    if resolved not in ROUTES or resolved == "auto":
        raise RouteUnsupported(f"unknown route {route!r}")
    n = space.dim
    if resolved == "one_dim" and n != 1:
        raise RouteUnsupported("one_dim route requires a one-dimensional domain")
    if resolved == "smooth":
        if not (space.kind in ("lp", "weighted_lp") and 1.0 < space.p < math.inf):
            raise RouteUnsupported("smooth route requires an lp space with 1 < p < inf")
    if resolved == "linf":
        if not (space.kind == "lp" and math.isinf(space.p)):
            raise RouteUnsupported("linf route requires the sup-norm space")
    if resolved == "l1":
        if not (space.kind == "lp" and space.p == 1.0):
            raise RouteUnsupported("l1 route requires the sum-norm space")
    if n == 1 and resolved != "one_dim":
        raise RouteUnsupported("one-dimensional domains use the one_dim route")
    return resolved


def decompose(f: PhaseMapOracle, route: str = "auto", seed: int = 0,
              tol: Tolerances = DEFAULT_TOL, force: bool = False,
              plan: Optional[QueryPlan] = None) -> DecompositionCertificate:
    """Factor a declared-surjective phase-isometry oracle into sign * isometry.

    Routes: ``one_dim``, ``smooth``, ``linf``, ``l1``, ``generic``; ``auto``
    dispatches on the domain kind.  Raises :class:`NotDecomposable` with a
    witness when the oracle violates a required identity, and
    :class:`SurjectivityNotDeclared` when the oracle lacks the surjectivity
    declaration and ``force`` is not set.
    """
    space = f.domain
    resolved = _validate_route(space, route)
    if not f.declared_surjective and not force:
        raise SurjectivityNotDeclared(
            "decomposition requires a surjectivity declaration on the oracle "
            "(or force=True to attempt anyway)")
    if plan is None:
        plan = plan_queries(space, resolved, seed, tol)
    elif plan.route != resolved or plan.space != space:
        raise RouteUnsupported("supplied plan does not match the space and route")

    diagnostics: dict = {}
    if resolved == "one_dim":
        matrix = _route_one_dim(f, plan, tol)
    else:
        matrix = _ROUTE_IMPL[resolved](f, plan, tol, diagnostics)
    return _assemble_certificate(f, matrix, resolved, plan, tol, diagnostics)
