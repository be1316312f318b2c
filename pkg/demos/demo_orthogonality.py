#!/usr/bin/env python3
"""Birkhoff orthogonality in action: asymmetry, hyperplanes, and the three
equivalent characterizations on l1 spaces."""

import numpy as np

from phaseiso import (NormSpec, birkhoff_verdict, l1_orthogonality_triple,
                      orthogonal_hyperplane)

l1 = NormSpec.lp(2, 1)
x = l1.vector([1.0, 0.0])
y = l1.vector([1.0, 2.0])

print("== orthogonality is not symmetric ==")
for a, b, label in [(x, y, "x vs y"), (y, x, "y vs x")]:
    v = birkhoff_verdict(a, b)
    print(f"  {label}: orthogonal={v.orthogonal} slopes=({v.forward_slope:+.3f}, "
          f"{v.backward_slope:+.3f})")

v = birkhoff_verdict(x, y)
print(f"  annihilating witness at x: {v.witness.coords.tolist()} "
      f"(value on y = {v.witness(y):+.2e})")

print("\n== a hyperplane the point is orthogonal to ==")
l2 = NormSpec.lp(3, 2)
z = orthogonal_hyperplane(l2.vector([1.0, 1.0, 0.0]))
print(f"  normal = {np.round(z.normal.coords, 6).tolist()}")
rng = np.random.default_rng(1)
samples = z.sample(rng, 3)
for s in samples:
    print(f"  sample z = {np.round(s.coords, 3).tolist()} -> normal(z) = {z.normal(s):+.1e}")

print("\n== three equivalent tests on l1 ==")
l1_4 = NormSpec.lp(4, 1)
cases = [
    ([1.0, -2.0, 0.0, 0.0], [0.0, 0.0, 3.0, 0.0]),
    ([1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]),
    ([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
]
for a, b in cases:
    t = l1_orthogonality_triple(l1_4.vector(a), l1_4.vector(b))
    print(f"  x={a} y={b}: disjoint={t.disjoint_support} "
          f"orthogonal={t.birkhoff} norm-identity={t.norm_identity}")
