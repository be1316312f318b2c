import math

import numpy as np
import pytest

from phaseiso import (CollinearityViolation, LinearMap, MissingSamples, NormSpec,
                      NotDecomposable, NotExposed, PhaseMapOracle, RangeDegenerate,
                      RouteUnsupported, SmoothnessFailure, SurjectivityNotDeclared,
                      canonical_ray, decompose, generate_isometry,
                      generate_phase_isometry, normalize_two_dim, pin_signs,
                      plan_queries, recover_functional, recover_projective_linear,
                      score_certificate)
from phaseiso.decomposition import route_for

L2_2 = NormSpec.lp(2, 2)
L2_4 = NormSpec.lp(4, 2)
L1_3 = NormSpec.lp(3, 1)
LINF_3 = NormSpec.lp(3, float("inf"))
LINE = NormSpec.lp(1, 2)
LINF_2 = NormSpec.lp(2, float("inf"))


def sign_table_oracle(space, t_matrix, signs):
    """eps * T with eps looked up per canonical line representative."""
    def fn(c):
        key = tuple(np.round(canonical_ray(c, space), 9))
        return signs.get(key, 1) * (t_matrix @ c)
    return PhaseMapOracle.from_callable(space, space, fn, declared_surjective=True)


class TestPinSigns:
    def test_linear_map_pins_positive(self):
        f = PhaseMapOracle.from_callable(L2_2, L2_2, lambda c: c.copy(),
                                         declared_surjective=True)
        pin = pin_signs(f, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert (pin.alpha, pin.beta) == (1, 1)
        assert pin.residual == 0.0
        assert not pin.tied

    def test_mixed_signs_recovered(self):
        x = np.array([1.0, 0.0])
        y = np.array([0.0, 1.0])
        signs = {tuple(np.round(canonical_ray(x, L2_2), 9)): -1,
                 tuple(np.round(canonical_ray(y, L2_2), 9)): 1,
                 tuple(np.round(canonical_ray(x + y, L2_2), 9)): 1}
        f = sign_table_oracle(L2_2, np.eye(2), signs)
        pin = pin_signs(f, x, y)
        # f(x+y) = x + y while f(x) = -x, f(y) = y
        assert (pin.alpha, pin.beta) == (-1, 1)
        assert pin.residual == 0.0

    def test_unpinnable_map_raises(self):
        f = PhaseMapOracle.from_callable(
            L2_2, L2_2, lambda c: c if abs(c[0] - 1.0) > 1e-12 or abs(c[1] - 1.0) > 1e-12
            else np.array([3.0, 0.1]))
        with pytest.raises(NotDecomposable) as err:
            pin_signs(f, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert err.value.witness is not None

    def test_dependent_inputs_rejected(self):
        f = PhaseMapOracle.from_callable(L2_2, L2_2, lambda c: c.copy())
        with pytest.raises(ValueError, match="one-dimensional"):
            pin_signs(f, np.array([1.0, 0.0]), np.array([2.0, 0.0]))

    def test_parallel_images_tie_flagged(self):
        # equal images make (+1,-1) and (-1,+1) cancel identically: exact tie
        x = np.array([1.0, 0.0])
        y = np.array([0.0, 1.0])

        def fn(c):
            if np.allclose(c, x) or np.allclose(c, y):
                return np.array([1.0, 0.0])
            return np.zeros(2)

        f = PhaseMapOracle.from_callable(L2_2, L2_2, fn)
        pin = pin_signs(f, x, y)
        assert pin.tied
        assert pin.residual == 0.0


class TestNormalizeTwoDim:
    def test_round_trip_certifies(self):
        for seed in range(10):
            t = generate_isometry(L2_2, seed)
            f = generate_phase_isometry(t, seed)
            norm2 = normalize_two_dim(f)
            assert norm2.certified
            assert set(norm2.products.values()) == {norm2.pi}
            # the derived map is a linear isometry matching f up to signs
            assert norm2.linear.verify_isometric(seed) <= 1e-9

    def test_products_are_exact_signs(self):
        f = generate_phase_isometry(generate_isometry(L2_2, 3), 3)
        norm2 = normalize_two_dim(f)
        for v in norm2.products.values():
            assert v in (-1, 1)

    def test_unit_grid_point_trivially_consistent(self):
        f = generate_phase_isometry(generate_isometry(L2_2, 3), 3)
        norm2 = normalize_two_dim(f)
        assert norm2.products[1.0] == norm2.pi

    def test_adversarial_component_flip_detected(self):
        # corrupt only the x-component sign of the image on the a = 2 ray
        t = np.eye(2)
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        bad_rep = canonical_ray(2.0 * e1 + e2, L2_2)

        def fn(c):
            if np.allclose(c, bad_rep, atol=1e-12):
                z = 2.0 * e1 + e2
                flipped = (-2.0 * e1 + e2) / L2_2.norm_of(z)
                return flipped
            return c.copy()

        f = PhaseMapOracle.from_callable(L2_2, L2_2, fn, declared_surjective=True)
        with pytest.raises(NotDecomposable) as err:
            normalize_two_dim(f)
        kind, a, *_ = err.value.witness
        assert kind == "product"
        assert a == 2.0

    def test_requires_two_dimensions(self):
        f = PhaseMapOracle.from_callable(L1_3, L1_3, lambda c: c.copy())
        with pytest.raises(RouteUnsupported):
            normalize_two_dim(f)

    def test_oracle_view_is_linear(self, rng):
        f = generate_phase_isometry(generate_isometry(L2_2, 5), 5)
        norm2 = normalize_two_dim(f)
        g = norm2.as_oracle()
        for _ in range(20):
            a, b = rng.standard_normal(2)
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            left = g(a * x + b * y)
            right = a * g(x) + b * g(y)
            assert np.allclose(left, right, atol=1e-12)


class TestProjectiveRecovery:
    def test_ray_map_recovers_matrix(self):
        t = generate_isometry(L2_4, 17)
        f = generate_phase_isometry(t, 17)
        plan = plan_queries(L2_4, "smooth", 17)
        lin = recover_projective_linear(f, plan)
        err = min(np.max(np.abs(lin.matrix - s * t.matrix)) for s in (1.0, -1.0))
        assert err <= 1e-12

    def test_one_dimension_rejected(self):
        f = PhaseMapOracle.from_callable(LINE, LINE, lambda c: c.copy())
        plan = plan_queries(L2_4, "smooth", 0)
        with pytest.raises(RouteUnsupported):
            recover_projective_linear(
                PhaseMapOracle.from_callable(LINE, LINE, lambda c: c.copy()), plan)

    def test_rank_collapse_detected(self):
        # every image lands in a two-dimensional subspace
        def fn(c):
            return np.array([c[0], c[1], 0.0, 0.0])

        f = PhaseMapOracle.from_callable(L2_4, L2_4, fn, declared_surjective=True)
        plan = plan_queries(L2_4, "smooth", 0)
        with pytest.raises(RangeDegenerate):
            recover_projective_linear(f, plan)

    def test_collinearity_violation_detected(self):
        t = np.eye(4)
        ones = np.ones(4)

        def fn(c):
            if np.allclose(c, ones):
                return c + np.array([0.5, -0.5, 0.0, 0.0])
            return t @ c

        f = PhaseMapOracle.from_callable(L2_4, L2_4, fn, declared_surjective=True)
        plan = plan_queries(L2_4, "smooth", 0)
        with pytest.raises(CollinearityViolation):
            recover_projective_linear(f, plan)


class TestRecoverFunctional:
    def test_round_trip_p3(self, rng):
        space = NormSpec.lp(3, 3)
        t = generate_isometry(space, 23)
        f = generate_phase_isometry(t, 23)
        x_star = space.functional([1.0, 0.0, 0.0])
        verify = [rng.standard_normal(3) for _ in range(100)]
        rec = recover_functional(f, x_star, verify_points=verify)
        assert space.dual_norm_of(rec.phi.coords) == pytest.approx(1.0, abs=1e-9)
        # phi must read off |x_1| through f
        expected = np.abs(t.matrix @ np.array([1.0, 0.0, 0.0]))
        assert np.allclose(np.abs(rec.phi.coords), expected, atol=1e-9)
        assert rec.max_deviation <= 1e-8
        assert rec.stabilized_at <= 2.0 ** 5

    def test_identity_returns_x_star(self, rng):
        space = NormSpec.lp(4, 2)
        f = PhaseMapOracle.from_callable(space, space, lambda c: c.copy())
        c = rng.standard_normal(4)
        c /= space.dual_norm_of(c)
        rec = recover_functional(f, space.functional(c),
                                 verify_points=[rng.standard_normal(4) for _ in range(50)])
        assert np.allclose(rec.phi.coords, c, atol=1e-9)
        assert all(s == 1 for s in rec.sign_pattern)

    def test_one_dimensional_domain(self):
        f = PhaseMapOracle.from_callable(LINE, LINE, lambda c: c * (1 if c[0] >= 0 else -1))
        rec = recover_functional(f, LINE.functional([1.0]),
                                 verify_points=[np.array([t]) for t in (-3.0, -1.0, 0.5, 2.0)])
        for v in (np.array([4.0]), np.array([-2.5])):
            assert abs(abs(rec.phi(f(v))) - abs(v[0])) <= 1e-9

    def test_not_exposed_rejected(self):
        f = PhaseMapOracle.from_callable(L1_3, L1_3, lambda c: c.copy())
        with pytest.raises(NotExposed):
            recover_functional(f, L1_3.functional([1.0, 1.0, 0.0]))

    def test_nonsmooth_image_reported(self):
        # image of every schedule point has a tied sup-norm maximum
        f = PhaseMapOracle.from_callable(
            L2_2, LINF_2, lambda c: np.array([c[0], c[0]]) if abs(c[1]) < 1e-9 else c.copy())
        with pytest.raises(SmoothnessFailure) as err:
            recover_functional(f, L2_2.functional([1.0, 0.0]))
        assert err.value.t >= 1.0

    def test_sign_pattern_matches_hidden_signs(self, rng):
        space = NormSpec.lp(2, 2)
        t = generate_isometry(space, 29)
        f = generate_phase_isometry(t, 29)
        x_star = space.functional([1.0, 0.0])
        verify = [rng.standard_normal(2) for _ in range(50)]
        rec = recover_functional(f, x_star, verify_points=verify)
        for v, s in zip(verify, rec.sign_pattern):
            lhs = x_star(v)
            rhs = rec.phi(f(v))
            if abs(lhs) > 1e-9:
                assert lhs == pytest.approx(s * rhs, rel=1e-8)


class TestDecompose:
    @pytest.mark.parametrize("space,route", [
        (NormSpec.lp(1, 2), "one_dim"),
        (NormSpec.lp(2, 2), "smooth"),
        (NormSpec.lp(5, 1.5), "smooth"),
        (NormSpec.lp(3, 1), "l1"),
        (NormSpec.lp(3, float("inf")), "linf"),
        (NormSpec.weighted_lp(3, 2.0, [1.0, 0.5, 2.0]), "smooth"),
        (NormSpec.polyhedral(3, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]), "generic"),
    ])
    def test_round_trip_routes(self, space, route):
        for seed in (1, 2, 3):
            t = generate_isometry(space, seed)
            f = generate_phase_isometry(t, seed)
            cert = decompose(f, seed=seed)
            assert cert.route == route
            score = score_certificate(f, cert)
            assert score["t_error"] <= 1e-9
            assert score["eps_consistent"]
            assert cert.residual_max <= 1e-9
            assert cert.max_equation_discrepancy <= 1e-10
            assert cert.surjectivity == "declared"

    def test_certificate_replays_every_query(self):
        f = generate_phase_isometry(generate_isometry(L1_3, 4), 4)
        cert = decompose(f, seed=4)
        for x in f.query_log:
            assert np.allclose(cert.reconstruct(x), f(x), atol=1e-9)

    def test_global_sign_normalized(self):
        for seed in range(6):
            f = generate_phase_isometry(generate_isometry(L2_4, seed), seed)
            cert = decompose(f, seed=seed)
            col = cert.T.matrix[:, 0]
            first = col[np.nonzero(np.abs(col) > 1e-9)[0][0]]
            assert first > 0

    def test_surjectivity_must_be_declared(self):
        f = generate_phase_isometry(generate_isometry(L1_3, 8), 8)
        f.declared_surjective = False
        with pytest.raises(SurjectivityNotDeclared):
            decompose(f, seed=8)
        cert = decompose(f, seed=8, force=True)
        assert cert.surjectivity == "forced"

    def test_route_mismatch_rejected(self):
        f = generate_phase_isometry(generate_isometry(L1_3, 8), 8)
        with pytest.raises(RouteUnsupported):
            decompose(f, route="linf", seed=8)
        with pytest.raises(RouteUnsupported):
            decompose(f, route="one_dim", seed=8)

    def test_sine_curve_not_decomposable_on_forced_one_dim(self):
        f = PhaseMapOracle.from_callable(
            LINE, LINF_2, lambda c: np.array([c[0], math.sin(c[0])]))
        with pytest.raises(SurjectivityNotDeclared):
            decompose(f, route="one_dim", seed=0)
        with pytest.raises(NotDecomposable) as err:
            decompose(f, route="one_dim", seed=0, force=True)
        assert err.value.witness is not None

    def test_sign_tampered_probe_detected(self):
        # corrupting one planned probe answer must surface as a witness
        space = L1_3
        t = generate_isometry(space, 6)
        base = generate_phase_isometry(t, 6)
        ones = np.ones(3)

        def fn(c):
            if np.allclose(c, ones):
                return 2.0 * base(c)
            return base(c)

        f = PhaseMapOracle.from_callable(space, space, fn, declared_surjective=True)
        with pytest.raises(NotDecomposable):
            decompose(f, seed=6)

    def test_incoherent_pair_signs_detected(self):
        # flip the sign of f only at e_1 + e_2 image of a smooth-space oracle:
        # pinning still succeeds pointwise, so the certificate must catch it
        # via the replay of the full log or the triangle coherence
        space = L2_4
        t = generate_isometry(space, 9)
        base = generate_phase_isometry(t, 9)
        probe = np.array([1.0, 1.0, 0.0, 0.0])

        def fn(c):
            if np.allclose(c, probe):
                return base(c) + 0.3 * base(np.array([0.0, 0.0, 1.0, 0.0]))
            return base(c)

        f = PhaseMapOracle.from_callable(space, space, fn, declared_surjective=True)
        with pytest.raises(NotDecomposable):
            decompose(f, seed=9)


class TestSignMapLaws:
    """Laws of the coordinatewise sign map that the sup-norm route leans on."""

    def test_positive_scaling_invariance(self, rng):
        for _ in range(200):
            x = rng.standard_normal(5)
            t = abs(rng.standard_normal()) + 1e-3
            assert np.array_equal(np.sign(t * x), np.sign(x))

    def test_odd(self, rng):
        for _ in range(200):
            x = rng.standard_normal(5)
            assert np.array_equal(np.sign(-x), -np.sign(x))

    def test_additive_on_disjoint_supports(self, rng):
        for _ in range(200):
            mask = rng.random(6) < 0.5
            x = rng.standard_normal(6) * mask
            y = rng.standard_normal(6) * ~mask
            assert np.array_equal(np.sign(x + y), np.sign(x) + np.sign(y))

    def test_unit_norm_off_zero(self, rng):
        space = NormSpec.lp(6, float("inf"))
        for _ in range(50):
            x = rng.standard_normal(6)
            assert space.norm_of(np.sign(x)) == 1.0


class TestNoStabilization:
    def test_rotating_images_never_settle(self):
        # the supporting functional at f(t*u) turns with t, so the schedule
        # runs out without two successive estimates agreeing
        space = NormSpec.lp(2, 2)

        def fn(c):
            n = space.norm_of(c)
            if n == 0.0:
                return c.copy()
            a = 0.4 * math.log2(max(n, 1e-12)) if n >= 1.0 else 0.0
            rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
            return rot @ c

        from phaseiso import NoStabilization
        f = PhaseMapOracle.from_callable(space, space, fn)
        with pytest.raises(NoStabilization):
            recover_functional(f, space.functional([1.0, 0.0]))


class TestTableMode:
    def build_table(self, space, seed, route="auto"):
        resolved = route_for(space) if route == "auto" else route
        oracle = generate_phase_isometry(generate_isometry(space, seed), seed)
        plan = plan_queries(space, resolved, seed)
        pairs = [(p, oracle(p)) for p in plan.all_points()]
        table = PhaseMapOracle.from_table(space, space, pairs, declared_surjective=True)
        return oracle, plan, table

    @pytest.mark.parametrize("space", [L1_3, LINF_3, L2_4, NormSpec.lp(2, 2)])
    def test_plan_covers_all_queries(self, space):
        oracle, plan, table = self.build_table(space, 12)
        cert = decompose(table, seed=12, plan=plan)
        assert cert.residual_max <= 1e-9
        # and the recovered map matches the callable-mode ground truth
        score = score_certificate(oracle, cert)
        assert score["t_error"] <= 1e-9

    def test_missing_probe_reported(self):
        oracle, plan, table = self.build_table(L1_3, 12)
        victim = tuple(map(float, plan.basis[1]))
        del table.table[victim]
        missing = table.missing_points(plan.all_points())
        assert victim in missing
        with pytest.raises(MissingSamples):
            decompose(table, seed=12, plan=plan)

    def test_plan_is_deterministic(self):
        p1 = plan_queries(L1_3, "l1", 77)
        p2 = plan_queries(L1_3, "l1", 77)
        a = p1.all_points()
        b = p2.all_points()
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
