"""Independent reference oracles for cross-checking library results.

Deliberately written from the definitions, not from the library's formulas:
finite differences for directional derivatives, golden-section search for
one-dimensional norm minimization, and exhaustive enumeration for polyhedral
quantities.
"""

import math

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def highprec_norm(space, a):
    """Extended-precision norm evaluated straight from the space description."""
    a = np.asarray(a, dtype=np.longdouble)
    if space.kind in ("lp", "weighted_lp"):
        w = (np.asarray(space.weights, np.longdouble)
             if space.kind == "weighted_lp" else np.ones(space.dim, np.longdouble))
        if math.isinf(space.p):
            return np.max(w * np.abs(a))
        return np.sum(w * np.abs(a) ** np.longdouble(space.p)) ** (1.0 / np.longdouble(space.p))
    rows = np.asarray(space.functionals, np.longdouble)
    return np.max(np.abs(rows @ a))


def fd_directional(space, u, x, steps=range(8, 41), agree=5e-8):
    """Finite-difference limit of (|u + t x| - |u|) / t as t -> 0+.

    Extended precision keeps the difference quotient out of cancellation
    noise; the one-sided quotient of a convex function decreases to the
    limit, so successive agreement bounds the remaining error.
    """
    u = np.asarray(u, np.longdouble)
    x = np.asarray(x, np.longdouble)
    nu = highprec_norm(space, u)
    prev = None
    est = None
    for k in steps:
        t = np.longdouble(2.0) ** -k
        est = (highprec_norm(space, u + t * x) - nu) / t
        if prev is not None and abs(est - prev) <= agree:
            return float(est)
        prev = est
    return float(est)


def golden_min_norm_on_line(space, x, y, lo=None, hi=None, iters=90):
    """Minimize t -> |x + t y| by golden-section search.

    The map is convex and coercive in t, so the bracket |t| <= 2|x| / |y|
    contains the minimizer.
    """
    ny = space.norm_of(y)
    if ny == 0.0:
        return space.norm_of(x), 0.0
    half = 2.0 * space.norm_of(x) / max(ny, 1e-12) + 1.0
    a = -half if lo is None else lo
    b = half if hi is None else hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = space.norm_of(x + c * y)
    fd = space.norm_of(x + d * y)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = space.norm_of(x + c * y)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = space.norm_of(x + d * y)
    t = (a + b) / 2.0
    return space.norm_of(x + t * y), t


def birkhoff_by_minimization(space, x, y, margin=1e-7):
    """Orthogonality verdict from the definition: the minimum over t of
    |x + t y| must not drop below |x|."""
    best, _ = golden_min_norm_on_line(space, x, y)
    return best >= space.norm_of(x) - margin


def brute_polyhedral_directional(space, u, x, atol=1e-12):
    """Max of a*(x) over the active functionals at u, by enumeration."""
    vals = space.functionals @ u
    m = np.max(np.abs(vals))
    best = -np.inf
    for i, v in enumerate(vals):
        if abs(abs(v) - m) <= atol * (1.0 + m):
            best = max(best, np.sign(v) * float(space.functionals[i] @ x))
    return best
