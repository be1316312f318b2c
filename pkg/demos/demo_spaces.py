#!/usr/bin/env python3
"""Tour of the normed-space primitives: norms, duals, directional
derivatives, supporting functionals, and exposed points of the dual ball."""

import numpy as np

from phaseiso import (NormSpec, directional_derivative, is_w_star_exposed,
                      support_set)

l1 = NormSpec.lp(2, 1)
l2 = NormSpec.lp(2, 2)
linf = NormSpec.lp(2, float("inf"))
poly = NormSpec.polyhedral(2, [[1, 1], [1, -1]])

print("== norms of (3, -4) ==")
for name, space in [("l1", l1), ("l2", l2), ("linf", linf), ("diamond-ish", poly)]:
    print(f"  {name:12s} |x| = {space.norm_of([3, -4]):.6f}")

print("\n== dual norms of the functional (1, 1) ==")
for name, space in [("l1", l1), ("l2", l2), ("linf", linf), ("diamond-ish", poly)]:
    print(f"  {name:12s} |c|* = {space.dual_norm_of([1, 1]):.6f}")

print("\n== one-sided derivative of the norm at u toward x ==")
u = l1.vector([1.0, 0.0])
for x in ([0.0, 1.0], [1.0, 1.0], [-1.0, 2.0]):
    print(f"  l1, u=(1,0), x={x}: M_u(x) = {directional_derivative(u, l1.vector(x)):+.4f}")

print("\n== supporting functionals and smoothness ==")
for space, point in [(l1, [1.0, 1.0]), (l1, [1.0, 0.0]), (linf, [2.0, 1.0]),
                     (linf, [1.0, 1.0]), (l2, [3.0, 4.0])]:
    desc = support_set(space.vector(point))
    print(f"  {space.kind} p={space.p} at {point}: witness={np.round(desc.witness.coords, 4).tolist()}"
          f" smooth={desc.is_smooth} ({desc.kind})")

print("\n== exposed points of the dual ball ==")
l1_3 = NormSpec.lp(3, 1)
for c in ([1, 1, -1], [1, 1, 0]):
    res = is_w_star_exposed(l1_3.functional(np.asarray(c, float)))
    where = None if res.point is None else np.round(res.point.coords, 4).tolist()
    print(f"  l1_3 functional {c}: exposed={res.exposed} norming point={where}")
