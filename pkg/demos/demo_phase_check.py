#!/usr/bin/env python3
"""Checking the defining equation of phase-isometries and the invariants
every surjective one must satisfy."""

import math

import numpy as np

from phaseiso import (NormSpec, PhaseMapOracle, check_phase_equation,
                      check_phase_invariants, check_wigner_equation,
                      generate_isometry, generate_phase_isometry,
                      make_sign_flip_oracle)

rng = np.random.default_rng(0)
space = NormSpec.lp(3, 2)
pairs = [(rng.standard_normal(3), rng.standard_normal(3)) for _ in range(200)]

print("== a hidden sign * isometry passes everything ==")
f = generate_phase_isometry(generate_isometry(space, 42), 42)
print(f"  phase equation:  passed={check_phase_equation(f, pairs).passed}")
print(f"  wigner equation: passed={check_wigner_equation(f, pairs).passed}")
xs = [rng.standard_normal(3) for _ in range(30)]
print(f"  invariants:      passed={check_phase_invariants(f, xs, surjective_mode=True).passed}")

print("\n== a shift is not a phase-isometry ==")
shift = PhaseMapOracle.from_callable(space, space, lambda c: c + np.array([0.3, 0.0, 0.0]))
rep = check_phase_equation(shift, [(np.zeros(3), np.zeros(3))])
print(f"  passed={rep.passed} max_discrepancy={rep.max_discrepancy:.3f}")

print("\n== the curve t -> (t, sin t) is an into phase-isometry ==")
line = NormSpec.lp(1, 2)
plane = NormSpec.lp(2, float("inf"))
curve = PhaseMapOracle.from_callable(line, plane,
                                     lambda c: np.array([c[0], math.sin(c[0])]))
pairs_1d = [(5 * rng.standard_normal(1), 5 * rng.standard_normal(1)) for _ in range(200)]
rep = check_phase_equation(curve, pairs_1d)
print(f"  passed={rep.passed} max_discrepancy={rep.max_discrepancy:.2e}")

print("\n== one flipped point: a phase-isometry that is not an isometry ==")
x0 = np.array([1.0, 0.0, 0.0])
flip = make_sign_flip_oracle(space, x0)
rep = check_phase_invariants(flip, [x0] + xs, surjective_mode=True)
print(f"  invariants passed={rep.passed}")
x = np.array([1.0, 1.0, 0.0])
print(f"  |f(x0) - f(x)| = {space.norm_of(flip(x0) - flip(x)):.4f} "
      f"but |x0 - x| = {space.norm_of(x0 - x):.4f}")
