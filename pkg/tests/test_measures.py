import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nondecomp.errors import DegeneracyError, DegeneratePriorError, DomainError
from nondecomp.measures import (ConcaveLink, PseudolinearCoeffs, dual_objective, dual_step,
                                fbeta_coeffs, fbeta_from_counts, fenchel_conjugate_value,
                                fenchel_oracle, kld, link_value, measure_from_rates,
                                neg_kld_nested, nested_dual_steps, pseudolinear_value,
                                supergradient_gap, valuation, valuation_weights)

MIN = ConcaveLink("min_tpr_tnr")
QMEAN = ConcaveLink("q_mean")
GRID = np.round(np.arange(0.0, 1.0001, 0.05), 10)


def harmonic_fbeta(tp, fn, fp, beta):
    """Independent oracle: weighted harmonic mean of precision and recall."""
    if tp == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    b2 = beta * beta
    return (1 + b2) * prec * rec / (b2 * prec + rec)


class TestLinks:
    def test_min_value(self):
        assert link_value(MIN, 0.3, 0.7) == 0.3

    def test_qmean_values(self):
        assert link_value(QMEAN, 1, 1) == 1.0
        assert link_value(QMEAN, 1, 0) == pytest.approx(0.292893, abs=1e-6)

    def test_soft_clamp(self):
        assert link_value(MIN, 1 + 5e-10, 0.5) == 0.5

    @pytest.mark.parametrize("u", [-0.01, 1.01, np.nan])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            link_value(MIN, u, 0.5)

    def test_unknown_link(self):
        with pytest.raises(ValueError):
            ConcaveLink("h_mean")


class TestDualStep:
    def test_min_cases(self):
        assert dual_step(MIN, 0.4, 0.6) == (1.0, 0.0)
        assert dual_step(MIN, 0.7, 0.6) == (0.0, 1.0)
        assert dual_step(MIN, 0.5, 0.5) == (0.5, 0.5)

    def test_qmean_edge(self):
        a, b = dual_step(QMEAN, 1.0, 0.0)
        assert a == 0.0 and b == pytest.approx(1 / np.sqrt(2))

    def test_qmean_clamp_at_optimum(self):
        assert dual_step(QMEAN, 1.0, 1.0) == (0.0, 0.0)

    def test_qmean_matches_partials(self):
        u, v, h = 0.3, 0.8, 1e-6
        a, b = dual_step(QMEAN, u, v)
        assert a == pytest.approx((QMEAN.value(u + h, v) - QMEAN.value(u - h, v)) / (2 * h), abs=1e-6)
        assert b == pytest.approx((QMEAN.value(u, v + h) - QMEAN.value(u, v - h)) / (2 * h), abs=1e-6)

    @pytest.mark.parametrize("link", [MIN, QMEAN])
    def test_supergradient_inequality_on_grid(self, link):
        worst = max(supergradient_gap(link, u, v) for u in GRID for v in GRID)
        assert worst <= 1e-12

    def test_min_duals_on_simplex(self):
        for u, v in itertools.product(GRID, GRID):
            a, b = dual_step(MIN, u, v)
            assert a >= 0 and b >= 0 and a + b == pytest.approx(1.0)


class TestFenchel:
    def test_min_conjugate_at_vertex(self):
        assert fenchel_conjugate_value(MIN, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_min_conjugate_zero_on_simplex(self):
        for a in np.linspace(0, 1, 11):
            assert fenchel_conjugate_value(MIN, a, 1 - a) == pytest.approx(0.0, abs=1e-12)

    def test_qmean_conjugate_at_origin(self):
        assert fenchel_conjugate_value(QMEAN, 0.0, 0.0) == pytest.approx(-1.0)

    def test_oracle_min(self):
        a, b, _ = fenchel_oracle(MIN, 0.2, 0.8, grid_step=0.01)
        assert a == pytest.approx(1.0) and b == pytest.approx(0.0)

    def test_oracle_qmean_symmetric(self):
        a, b, _ = fenchel_oracle(QMEAN, 0.5, 0.5, grid_step=0.01)
        assert a == pytest.approx(b, abs=0.02)

    @pytest.mark.parametrize("link", [MIN, QMEAN])
    def test_closed_form_attains_oracle(self, link):
        for u, v in [(0.1, 0.9), (0.4, 0.6), (0.5, 0.5), (0.85, 0.3), (1.0, 0.0), (0.95, 0.95)]:
            a, b = dual_step(link, u, v)
            closed = dual_objective(link, u, v, a, b, grid_step=0.01)
            oracle = fenchel_oracle(link, u, v, grid_step=0.01)[2]
            assert oracle >= closed - 1e-3
            assert abs(closed - oracle) <= 1e-3

    def test_oracle_accepts_callables(self):
        a, b, obj = fenchel_oracle(lambda u, v: np.minimum(u, v), 0.2, 0.8, grid_step=0.05)
        assert (a, b) == (1.0, 0.0)
        assert obj == pytest.approx(0.2)


class TestPseudolinear:
    def test_coefficients(self):
        c = fbeta_coeffs(1.0, 0.5)
        assert c.a == (0.0, 2.0, 0.0) and c.b == (2.0, 1.0, -1.0)
        assert c.lower_bound_m == 1.0 and c.upper_bound_M == 2.0
        assert c.kappa == 3.0

    def test_perfect_classifier(self):
        for p in (0.1, 0.5, 0.9):
            assert pseudolinear_value(fbeta_coeffs(2.0, p), 1.0, 1.0) == pytest.approx(1.0)

    def test_known_value(self):
        assert pseudolinear_value(fbeta_coeffs(1.0, 0.25), 0.8, 0.9) == pytest.approx(1.6 / 2.1)

    def test_identity_ratio(self):
        c = PseudolinearCoeffs((1.0, 2.0, 3.0), (1.0, 2.0, 3.0), 1.0, 6.0)
        assert pseudolinear_value(c, 0.3, 0.9) == pytest.approx(1.0)

    def test_degenerate_denominator(self):
        c = PseudolinearCoeffs((0.0, 1.0, 0.0), (0.0, 1.0, 0.0), 0.5, 1.0)
        with pytest.raises(DegeneracyError):
            pseudolinear_value(c, 0.1, 0.0)

    def test_bad_prior(self):
        with pytest.raises(DegeneratePriorError):
            fbeta_coeffs(1.0, 1.0)

    def test_denominator_minimum_is_m(self):
        c = fbeta_coeffs(0.5, 0.2)
        U, V = np.meshgrid(np.linspace(0, 1, 51), np.linspace(0, 1, 51))
        assert c.denominator(U, V).min() == pytest.approx(c.lower_bound_m)
        assert c.numerator(U, V).max() == pytest.approx(c.upper_bound_M)

    def test_random_tuples_match_confusion_matrix(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 400))
            n_pos = int(rng.integers(1, n))
            tp = int(rng.integers(0, n_pos + 1))
            tn = int(rng.integers(0, n - n_pos + 1))
            beta = float(rng.uniform(0.2, 3.0))
            c = fbeta_coeffs(beta, n_pos / n)
            got = pseudolinear_value(c, tp / n_pos, tn / (n - n_pos))
            want = harmonic_fbeta(tp, n_pos - tp, n - n_pos - tn, beta)
            assert abs(got - want) <= 1e-9

    def test_counts_form_matches_harmonic(self):
        for tp, fn, fp in itertools.product(range(6), repeat=3):
            assert fbeta_from_counts(tp, fn, fp, 2.0) == pytest.approx(harmonic_fbeta(tp, fn, fp, 2.0))


class TestValuation:
    def test_zero_at_own_level(self):
        c = fbeta_coeffs(1.0, 0.3)
        lvl = pseudolinear_value(c, 0.6, 0.7)
        assert valuation(c, 0.6, 0.7, lvl) == pytest.approx(0.0, abs=1e-12)

    def test_level_zero_is_numerator(self):
        c = fbeta_coeffs(1.0, 0.3)
        assert valuation(c, 0.6, 0.7, 0.0) == c.numerator(0.6, 0.7)

    def test_sign_property(self, rng):
        for _ in range(1000):
            c = fbeta_coeffs(float(rng.uniform(0.3, 2)), float(rng.uniform(0.05, 0.95)))
            u, v, lvl = rng.random(3)
            assert (valuation(c, u, v, lvl) > 0) == (pseudolinear_value(c, u, v) > lvl)

    def test_weights(self):
        c = fbeta_coeffs(1.0, 0.5)
        assert valuation_weights(c, 0.5) == (-1.0, 1.5, 0.5)

    def test_negative_level(self):
        with pytest.raises(ValueError):
            valuation(fbeta_coeffs(1.0, 0.5), 0.5, 0.5, -0.1)


class TestKld:
    def test_zero_when_equal(self):
        assert kld((0.5, 0.5), (0.5, 0.5)) == 0.0

    def test_known_value(self):
        assert kld((0.5, 0.5), (0.25, 0.75)) == pytest.approx(0.143841, abs=1e-6)

    def test_drift_value(self):
        assert kld((0.5, 0.5), (0.9, 0.1)) == pytest.approx(0.510826, abs=1e-6)

    def test_gibbs(self, rng):
        for _ in range(1000):
            a, b = rng.random(2)
            assert kld((a, 1 - a), (b, 1 - b)) >= 0

    def test_zero_component(self):
        with pytest.raises(DomainError):
            kld((0.5, 0.5), (1.0, 0.0), floor=False)
        assert np.isfinite(kld((0.5, 0.5), (1.0, 0.0)))


class TestNested:
    def test_perfect_rates(self):
        m = neg_kld_nested(0.3)
        assert m.value(1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_decomposition_identity(self, rng):
        for _ in range(1000):
            p, u, v = rng.uniform(0.01, 0.99), rng.random(), rng.random()
            m = neg_kld_nested(p)
            q1, q0 = m.estimated_priors(u, v)
            assert abs(m.value(u, v) + kld((p, 1 - p), (q1, q0))) <= 1e-9

    def test_gradients_match_differences(self, rng):
        h = 1e-6
        for _ in range(50):
            m = neg_kld_nested(rng.uniform(0.05, 0.95))
            u, v = rng.uniform(0.05, 0.95, 2)
            for f, g in ((m.zeta1, m.zeta1_grad), (m.zeta2, m.zeta2_grad)):
                du = (f(u + h, v) - f(u - h, v)) / (2 * h)
                dv = (f(u, v + h) - f(u, v - h)) / (2 * h)
                assert np.allclose(g(u, v), (du, dv), atol=1e-6)

    def test_floor_flag(self):
        m = neg_kld_nested(0.5)
        assert m.floored(0.0, 1.0)
        assert np.isfinite(m.value(0.0, 1.0))
        assert not m.floored(0.5, 0.5)

    def test_dual_steps_at_perfect_rates(self):
        alpha, beta, gamma = nested_dual_steps(neg_kld_nested(0.5), [1.0, 1.0], [0.3, -2.0])
        np.testing.assert_allclose(alpha, [0.5, -0.5])
        np.testing.assert_allclose(beta, [-0.5, 0.5])
        np.testing.assert_array_equal(gamma, [1.0, 1.0])

    def test_inner_duals_match_grid_oracle(self):
        m = neg_kld_nested(0.3)
        for u, v in [(0.7, 0.8), (0.5, 0.5), (0.9, 0.6)]:
            alpha, beta, _ = nested_dual_steps(m, [u, v], [0, 0])
            for f, d, box in ((m.zeta1, alpha, ((0, 0.5), (-1.0, 0))),
                              (m.zeta2, beta, ((-0.5, 0), (0, 1.0)))):
                closed = d @ [u, v] - fenchel_conjugate_value(f, d[0], d[1], 0.01)
                oracle = fenchel_oracle(f, u, v, grid_step=0.01, dual_box=box,
                                        dual_grid_step=0.01)[2]
                # no grid dual does better, and the closed form reaches f(u, v)
                assert oracle >= closed - 1e-3
                assert abs(closed - f(u, v)) <= 1e-3

    def test_bad_prior(self):
        with pytest.raises(DegeneratePriorError):
            neg_kld_nested(0.0)

    def test_measure_from_rates(self):
        assert measure_from_rates(MIN, 0.2, 0.9) == 0.2
        assert measure_from_rates(fbeta_coeffs(1.0, 0.5), 1.0, 1.0) == pytest.approx(1.0)
        assert measure_from_rates(neg_kld_nested(0.4), 1.0, 1.0) == pytest.approx(0.0)


@settings(max_examples=200)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_links_are_concave_along_segments(u1, v1, u2, v2):
    for link in (MIN, QMEAN):
        mid = link.value((u1 + u2) / 2, (v1 + v2) / 2)
        assert mid >= (link.value(u1, v1) + link.value(u2, v2)) / 2 - 1e-12
