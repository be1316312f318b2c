"""Phase-map oracles, the defining functional-equation checkers, and
ground-truth generators for round-trip testing.

A phase-isometry satisfies, for all x and y,

    {|f(x)+f(y)|, |f(x)-f(y)|} = {|x+y|, |x-y|}      (as multisets)

and any map of the form eps(x) * T x with eps taking values in {-1, +1} and
T a linear isometry satisfies it.  The generators here produce such maps
with a hidden sign assignment so decomposition can be scored end to end.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .settings import DEFAULT_TOL, Tolerances
from .spaces import NormSpec, Vector, _as_coords

__all__ = [
    "MissingSamples",
    "SampleFormatError",
    "canonical_ray",
    "ray_key",
    "key_string",
    "SignAssignment",
    "PhaseMapOracle",
    "LinearMap",
    "PairCheck",
    "PhaseCheckReport",
    "InvariantReport",
    "check_phase_equation",
    "check_wigner_equation",
    "check_phase_invariants",
    "generate_isometry",
    "generate_phase_isometry",
    "make_sign_flip_oracle",
    "multiset_match",
    "read_samples",
    "write_samples",
]


class MissingSamples(KeyError):
    """A sample-table oracle was asked for points it does not hold."""

    def __init__(self, points: List[Tuple[float, ...]]):
        self.points = points
        preview = ", ".join(str(list(p)) for p in points[:5])
        more = "" if len(points) <= 5 else f" (+{len(points) - 5} more)"
        super().__init__(f"sample table is missing {len(points)} probe point(s): {preview}{more}")


class SampleFormatError(ValueError):
    """A samples file line failed to parse."""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


# ---------------------------------------------------------------------------
# canonical ray representatives and sign assignments
# ---------------------------------------------------------------------------

_KEY_DECIMALS = 12


def canonical_ray(coords: np.ndarray, space: NormSpec, oriented: bool = False) -> np.ndarray:
    """Unit representative of the line (or, when oriented, the ray) through x.

    Normalizes to the unit sphere and, in line mode, flips so the first
    nonzero coordinate is positive; the zero vector maps to itself.
    """
    a = np.asarray(coords, dtype=float)
    n = space.norm_of(a)
    if n == 0.0:
        return np.zeros(space.dim)
    r = a / n
    if not oriented:
        for v in r:
            if v != 0.0:
                if v < 0.0:
                    r = -r
                break
    return r


def ray_key(coords: np.ndarray, space: NormSpec, oriented: bool = False) -> Tuple[float, ...]:
    """Hashable key for the ray through x, stable to 12 decimals."""
    r = canonical_ray(coords, space, oriented)
    rounded = np.round(r, _KEY_DECIMALS) + 0.0  # +0.0 folds -0.0 into +0.0
    return tuple(rounded.tolist())


def key_string(key: Tuple[float, ...]) -> str:
    return ",".join(repr(v) for v in key)


@dataclass
class SignAssignment:
    """Recorded phase values in {-1, +1} keyed by canonical ray representatives.

    By convention the zero vector carries +1.
    """

    space: NormSpec
    table: Dict[Tuple[float, ...], int] = field(default_factory=dict)

    def key_of(self, x: Union[Vector, np.ndarray]) -> Tuple[float, ...]:
        coords = x.coords if isinstance(x, Vector) else np.asarray(x, float)
        return ray_key(coords, self.space)

    def get(self, x: Union[Vector, np.ndarray]) -> int:
        coords = x.coords if isinstance(x, Vector) else np.asarray(x, float)
        if not np.any(coords):
            return 1
        return self.table[self.key_of(coords)]

    def set(self, x: Union[Vector, np.ndarray], value: int):
        if value not in (-1, 1):
            raise ValueError("sign values must be -1 or +1")
        self.table[self.key_of(x)] = value

    def __len__(self):
        return len(self.table)

    def to_dict(self) -> Dict[str, int]:
        return {key_string(k): v for k, v in sorted(self.table.items())}


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PhaseMapOracle:
    """Query interface to the map under study.

    Backed either by a callable or by a finite sample table with exact
    coordinate keys.  Queries are cached, so repeated evaluation at the same
    point returns the identical vector, and every distinct evaluated point
    is recorded in ``query_log``.
    """

    domain: NormSpec
    codomain: NormSpec
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    table: Optional[Dict[Tuple[float, ...], np.ndarray]] = None
    declared_surjective: bool = False
    name: str = "oracle"
    query_log: List[np.ndarray] = field(default_factory=list)
    hidden_truth: Optional[dict] = None
    _cache: Dict[Tuple[float, ...], np.ndarray] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_callable(cls, domain: NormSpec, codomain: NormSpec,
                      fn: Callable[[np.ndarray], np.ndarray],
                      declared_surjective: bool = False, name: str = "oracle"):
        return cls(domain=domain, codomain=codomain, fn=fn,
                   declared_surjective=declared_surjective, name=name)

    @classmethod
    def from_table(cls, domain: NormSpec, codomain: NormSpec,
                   pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
                   declared_surjective: bool = False, name: str = "table"):
        table = {tuple(map(float, x)): np.asarray(fx, float) for x, fx in pairs}
        return cls(domain=domain, codomain=codomain, table=table,
                   declared_surjective=declared_surjective, name=name)

    @property
    def is_table(self) -> bool:
        return self.table is not None

    def known_keys(self):
        return set() if self.table is None else set(self.table.keys())

    def missing_points(self, points: Sequence[np.ndarray]) -> List[Tuple[float, ...]]:
        if self.table is None:
            return []
        return [tuple(map(float, p)) for p in points
                if tuple(map(float, p)) not in self.table]

    def __call__(self, x: Union[Vector, np.ndarray, Sequence[float]]) -> np.ndarray:
        coords = x.coords if isinstance(x, Vector) else _as_coords(x, self.domain.dim)
        key = tuple(map(float, coords))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.table is not None:
            if key not in self.table:
                raise MissingSamples([key])
            val = np.asarray(self.table[key], dtype=float)
        else:
            val = np.asarray(self.fn(np.array(coords)), dtype=float)
        if val.shape != (self.codomain.dim,):
            raise ValueError("oracle returned a vector of the wrong dimension")
        val = val.copy()
        val.setflags(write=False)
        with self._lock:
            self._cache[key] = val
            self.query_log.append(np.array(coords))
        return val

    def image_vector(self, x) -> Vector:
        return Vector(self(x), self.codomain)


# ---------------------------------------------------------------------------
# linear maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Matrix map between two described spaces (codomain dim x domain dim)."""

    matrix: np.ndarray
    domain: NormSpec
    codomain: NormSpec
    isometric: bool = False
    note: Optional[str] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise ValueError("matrix shape must be (codomain dim, domain dim)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x: Union[Vector, np.ndarray]) -> np.ndarray:
        coords = x.coords if isinstance(x, Vector) else _as_coords(x, self.domain.dim)
        return self.matrix @ coords

    def verify_isometric(self, seed: int = 0, samples: int = 100,
                         tol: Tolerances = DEFAULT_TOL) -> float:
        """Max deviation of |Tx| from |x| over a random sample."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            x = rng.standard_normal(self.domain.dim)
            worst = max(worst, abs(self.codomain.norm_of(self.matrix @ x)
                                   - self.domain.norm_of(x)))
        return worst

    def to_json(self) -> dict:
        return {"matrix": [list(row) for row in self.matrix],
                "domain": self.domain.to_json(), "codomain": self.codomain.to_json(),
                "isometric": self.isometric, "note": self.note}

    @classmethod
    def from_json(cls, data: dict) -> "LinearMap":
        return cls(np.asarray(data["matrix"], float),
                   NormSpec.from_json(data["domain"]), NormSpec.from_json(data["codomain"]),
                   isometric=bool(data.get("isometric", False)), note=data.get("note"))


# ---------------------------------------------------------------------------
# functional-equation checks
# ---------------------------------------------------------------------------


def multiset_match(pair_a: Tuple[float, float], pair_b: Tuple[float, float],
                   tol: Tolerances = DEFAULT_TOL) -> Tuple[bool, float]:
    """Compare two-element multisets: sort and match componentwise.

    Returns (matched, discrepancy) with the threshold scaled by magnitude.
    """
    a = sorted(pair_a)
    b = sorted(pair_b)
    disc = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
    scale = max(map(abs, a + b), default=0.0)
    return disc <= tol.rel * (1.0 + scale), disc


@dataclass(frozen=True)
class PairCheck:
    x: np.ndarray
    y: np.ndarray
    passed: bool
    discrepancy: float


@dataclass
class PhaseCheckReport:
    checks: List[PairCheck]
    max_discrepancy: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[PairCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self, include_passing: bool = False) -> dict:
        out = {
            "pairs": len(self.checks),
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "failures": [
                {"x": list(c.x), "y": list(c.y), "discrepancy": c.discrepancy}
                for c in self.failures
            ],
        }
        if include_passing:
            out["checks"] = [
                {"x": list(c.x), "y": list(c.y), "passed": c.passed,
                 "discrepancy": c.discrepancy}
                for c in self.checks
            ]
        return out


def _pair_coords(pair, space: NormSpec):
    x, y = pair
    xc = x.coords if isinstance(x, Vector) else _as_coords(x, space.dim)
    yc = y.coords if isinstance(y, Vector) else _as_coords(y, space.dim)
    return xc, yc


def check_phase_equation(f: PhaseMapOracle, pairs, tol: Tolerances = DEFAULT_TOL) -> PhaseCheckReport:
    """Check {|f(x)+f(y)|, |f(x)-f(y)|} = {|x+y|, |x-y|} on each pair."""
    dom, cod = f.domain, f.codomain
    checks = []
    worst = 0.0
    for pair in pairs:
        xc, yc = _pair_coords(pair, dom)
        fx, fy = f(xc), f(yc)
        got = (cod.norm_of(fx + fy), cod.norm_of(fx - fy))
        want = (dom.norm_of(xc + yc), dom.norm_of(xc - yc))
        ok, disc = multiset_match(got, want, tol)
        worst = max(worst, disc)
        checks.append(PairCheck(xc, yc, ok, disc))
    return PhaseCheckReport(checks, worst)


def check_wigner_equation(f: PhaseMapOracle, pairs, tol: Tolerances = DEFAULT_TOL) -> PhaseCheckReport:
    """Check |<f(x), f(y)>| = |<x, y>| on each pair (Euclidean spaces only)."""
    if not (f.domain.is_euclidean and f.codomain.is_euclidean):
        raise ValueError("the inner-product equation requires Euclidean (p=2) spaces")
    checks = []
    worst = 0.0
    for pair in pairs:
        xc, yc = _pair_coords(pair, f.domain)
        fx, fy = f(xc), f(yc)
        got = abs(float(np.dot(fx, fy)))
        want = abs(float(np.dot(xc, yc)))
        disc = abs(got - want)
        ok = disc <= tol.rel * (1.0 + max(got, want))
        worst = max(worst, disc)
        checks.append(PairCheck(xc, yc, ok, disc))
    return PhaseCheckReport(checks, worst)


@dataclass
class InvariantReport:
    """Outcome of the norm-preservation / sign-symmetry / oddness suite."""

    norm_preserved: bool
    sign_symmetric: bool
    odd: Optional[bool]
    injective: Optional[bool]
    max_norm_deviation: float
    witnesses: Dict[str, list]

    @property
    def passed(self) -> bool:
        checks = [self.norm_preserved, self.sign_symmetric]
        checks += [v for v in (self.odd, self.injective) if v is not None]
        return all(checks)

    def to_dict(self) -> dict:
        return {
            "norm_preserved": self.norm_preserved,
            "sign_symmetric": self.sign_symmetric,
            "odd": self.odd,
            "injective": self.injective,
            "max_norm_deviation": self.max_norm_deviation,
            "witnesses": self.witnesses,
            "passed": self.passed,
        }


def check_phase_invariants(f: PhaseMapOracle, xs, surjective_mode: bool = False,
                       tol: Tolerances = DEFAULT_TOL) -> InvariantReport:
    """Check the consequences every phase-isometry must satisfy on a sample:
    norm preservation and f(-x) = +-f(x); under a surjectivity declaration
    additionally oddness (f(-x) = -f(x)) and injectivity on the sample.
    """
    dom, cod = f.domain, f.codomain
    witnesses: Dict[str, list] = {"norm": [], "sign": [], "odd": [], "injective": []}
    max_dev = 0.0
    points = []
    for x in xs:
        xc = x.coords if isinstance(x, Vector) else _as_coords(x, dom.dim)
        points.append(xc)
        fx = f(xc)
        dev = abs(cod.norm_of(fx) - dom.norm_of(xc))
        max_dev = max(max_dev, dev)
        if dev > tol.scaled(dom.norm_of(xc)):
            witnesses["norm"].append(list(xc))
        fmx = f(-xc)
        scale = tol.scaled(cod.norm_of(fx))
        plus = cod.norm_of(fmx - fx) <= scale
        minus = cod.norm_of(fmx + fx) <= scale
        if not (plus or minus):
            witnesses["sign"].append(list(xc))
        if surjective_mode and not minus:
            witnesses["odd"].append(list(xc))
    injective: Optional[bool] = None
    if surjective_mode:
        injective = True
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                if dom.norm_of(points[i] - points[j]) <= tol.scaled(1.0):
                    continue
                if cod.norm_of(f(points[i]) - f(points[j])) <= tol.scaled(1.0):
                    injective = False
                    witnesses["injective"].append([list(points[i]), list(points[j])])
    return InvariantReport(
        norm_preserved=not witnesses["norm"],
        sign_symmetric=not witnesses["sign"],
        odd=(not witnesses["odd"]) if surjective_mode else None,
        injective=injective,
        max_norm_deviation=max_dev,
        witnesses={k: v for k, v in witnesses.items() if v},
    )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate_isometry(space: NormSpec, seed: int = 0) -> LinearMap:
    """A random linear isometry of the space onto itself.

    Euclidean: Haar-random orthogonal matrix.  Other lp kinds: a random
    signed permutation.  Weighted lp: a random diagonal of signs (the only
    generically weight-safe choice).  Polyhedral symmetry groups are not
    modeled; the identity is returned with a warning note.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x150]))
    n = space.dim
    note = None
    if space.is_euclidean:
        g = rng.standard_normal((n, n))
        q, r = np.linalg.qr(g)
        m = q * np.sign(np.diag(r))
    elif space.kind == "lp":
        perm = rng.permutation(n)
        signs = rng.choice([-1.0, 1.0], size=n)
        m = np.zeros((n, n))
        m[perm, np.arange(n)] = signs
    elif space.kind == "weighted_lp":
        m = np.diag(rng.choice([-1.0, 1.0], size=n))
    else:
        m = np.eye(n)
        note = "polyhedral isometry generation is not supported; identity returned"
    t = LinearMap(m, space, space, isometric=True, note=note)
    worst = t.verify_isometric(seed=seed)
    if worst > DEFAULT_TOL.scaled(1.0) * 100:
        raise AssertionError(f"generated map failed the isometry sample check ({worst})")
    return t


def _hash_sign(seed: int, key: Tuple[float, ...]) -> int:
    payload = struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF) + struct.pack(f"<{len(key)}d", *key)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return 1 if digest[0] & 1 == 0 else -1


def generate_phase_isometry(t: LinearMap, seed: int = 0, even: bool = True) -> PhaseMapOracle:
    """Oracle x -> eps(x) * T x with a hidden pseudo-random sign assignment.

    ``even`` makes eps constant on each line through the origin, so the
    oracle is odd and onto; with ``even=False`` the two rays of a line draw
    independent signs and oddness generically fails.
    """
    if not t.isometric:
        raise ValueError("generate_phase_isometry requires an isometric map")
    space = t.domain
    hidden = SignAssignment(space)

    def sign_of(coords: np.ndarray) -> int:
        if not np.any(coords):
            return 1
        key = ray_key(coords, space, oriented=not even)
        return _hash_sign(seed, key)

    def fn(coords: np.ndarray) -> np.ndarray:
        s = sign_of(coords)
        if even and np.any(coords):
            hidden.table[ray_key(coords, space)] = s
        return s * (t.matrix @ coords)

    oracle = PhaseMapOracle.from_callable(space, t.codomain, fn,
                                          declared_surjective=even, name="generated")
    oracle.hidden_truth = {"T": t, "seed": seed, "even": even, "sign_of": sign_of,
                           "signs": hidden}
    return oracle


def make_sign_flip_oracle(space: NormSpec, x0, tol: Tolerances = DEFAULT_TOL) -> PhaseMapOracle:
    """The classic one-point phase flip: maps x0 to -x0 and -x0 to x0 while
    fixing everything else; a surjective phase-isometry that is not an
    isometry."""
    x0c = _as_coords(x0, space.dim)

    def fn(coords: np.ndarray) -> np.ndarray:
        if space.norm_of(coords - x0c) <= tol.scaled(space.norm_of(x0c)):
            return -coords
        if space.norm_of(coords + x0c) <= tol.scaled(space.norm_of(x0c)):
            return -coords
        return coords

    return PhaseMapOracle.from_callable(space, space, fn,
                                        declared_surjective=True, name="sign-flip")


# ---------------------------------------------------------------------------
# sample files (JSON Lines, one {"x": [...], "fx": [...]} record per line)
# ---------------------------------------------------------------------------


def write_samples(path: str, oracle: PhaseMapOracle, points: Sequence[np.ndarray]):
    with open(path, "w") as fh:
        for x in points:
            fx = oracle(x)
            fh.write(json.dumps({"x": list(map(float, x)), "fx": list(map(float, fx))}) + "\n")


def read_samples(path: str) -> List[Tuple[np.ndarray, np.ndarray]]:
    pairs = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                x = np.asarray(rec["x"], dtype=float)
                fx = np.asarray(rec["fx"], dtype=float)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise SampleFormatError(path, line_no, str(exc)) from exc
            if x.ndim != 1 or fx.ndim != 1:
                raise SampleFormatError(path, line_no, "x and fx must be flat arrays")
            pairs.append((x, fx))
    return pairs
