import itertools

import numpy as np
import pytest

from nondecomp.data import Dataset, SyntheticSpec, gen_two_gaussians, minibatch_stream, split
from nondecomp.errors import ConfigurationError
from nondecomp.measures import (ConcaveLink, fbeta_coeffs, fbeta_from_counts, neg_kld_nested,
                                pseudolinear_value, valuation)
from nondecomp.netcore import Model, NetworkConfig, OptStepper, grad_check, nn_init, scores, step
from nondecomp.optimizers import (TrainConfig, augmented_objective, ce_train, counts_metric,
                                  cross_entropy_objective, damp_net, damp_train, delta_from_measure,
                                  dnemsis_train, dspade_train, evaluate, labeling_objective,
                                  most_violated_labeling, nested_objective, plugin_tune,
                                  stability_report, struct_ann_train, structured_objective,
                                  tune_threshold, valuation_objective)
from nondecomp.optimizers.damp import batch_level
from nondecomp.rewards import ClassPriors, sample_averages

from conftest import random_batch, random_net

MIN = ConcaveLink("min_tpr_tnr")


def skewed(n=600, d=4, p=0.1, delta_mu=2.0, seed=1):
    ds = gen_two_gaussians(SyntheticSpec(n=n, d=d, p=p, delta_mu=delta_mu, seed=seed))
    return split(ds, 0.75, seed=seed + 1)


class TestObjectiveGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_augmented(self, seed):
        rng = np.random.default_rng(seed)
        m = random_net(rng, activation="tanh")
        X, y = random_batch(rng, m.config.input_dim)
        obj = augmented_objective(X, y, ClassPriors(0.3), *rng.random(2))
        assert grad_check(m, obj) < 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_nested(self, seed):
        rng = np.random.default_rng(seed)
        m = random_net(rng, activation="tanh")
        X, y = random_batch(rng, m.config.input_dim)
        obj = nested_objective(X, y, ClassPriors(0.4), rng.normal(size=2), rng.normal(size=2),
                               np.ones(2))
        assert grad_check(m, obj) < 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_valuation(self, seed):
        rng = np.random.default_rng(seed)
        m = random_net(rng, activation="sigmoid")
        X, y = random_batch(rng, m.config.input_dim)
        obj = valuation_objective(X, y, ClassPriors(0.2), fbeta_coeffs(1.0, 0.2), 0.4)
        assert grad_check(m, obj) < 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_cross_entropy(self, seed):
        rng = np.random.default_rng(seed)
        m = random_net(rng, activation="tanh")
        X, y = random_batch(rng, m.config.input_dim)
        assert grad_check(m, cross_entropy_objective(X, y)) < 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_structured(self, seed):
        rng = np.random.default_rng(seed)
        m = random_net(rng, activation="tanh")
        X, y = random_batch(rng, m.config.input_dim)
        y_tilde = np.where(rng.random(len(y)) < 0.5, 1.0, -1.0)
        assert grad_check(m, structured_objective(X, y, y_tilde, 0.3, 2.0)) < 1e-6

    def test_augmented_value(self):
        # zero inputs and zero bias: every score is 0 and every reward 1/2
        m = nn_init(NetworkConfig(2, (1,), "relu", 0))
        X = np.zeros((4, 2))
        y = np.array([1.0, -1, -1, -1])
        v, _ = augmented_objective(X, y, ClassPriors(0.25), 0.3, 0.7)(m)
        assert v == pytest.approx(0.5)


def reference_dspade(train, w, b, eta, iters):
    """Plain full-batch ascent on a linear scorer with running zero-one rates."""
    X, y = train.X, train.y
    p = np.mean(y == 1)
    alpha = beta = 0.0
    tprs, tnrs, duals = [], [], []
    for _ in range(iters):
        s = X @ w + b
        r = 1.0 / (1.0 + np.exp(-y * s))
        c = np.where(y == 1, alpha / p, beta / (1 - p)) / len(y)
        g = c * y * r * (1 - r)
        w = w + eta * (g @ X)
        b = b + eta * g.sum()
        s = X @ w + b
        tprs.append(np.mean(s[y == 1] > 0))
        tnrs.append(np.mean(s[y == -1] < 0))
        u, v = np.mean(tprs), np.mean(tnrs)
        alpha, beta = (1.0, 0.0) if u < v else (0.0, 1.0) if u > v else (0.5, 0.5)
        duals.append((alpha, beta))
    return np.array(duals), w


class TestDspade:
    def test_matches_reference(self):
        tr, _ = skewed(n=200, d=3, seed=4)
        net = NetworkConfig(3, (1,), "relu", 0)
        cfg = TrainConfig(eta=0.5, batch_size=len(tr), iters=30, eval_every=1, dual_reward="zero_one")
        model, trace = dspade_train(tr, net, MIN, cfg)
        init = nn_init(net)
        duals, w = reference_dspade(tr, init.weights[0][0], 0.0, 0.5, 30)
        got = np.array([(r.alpha, r.beta) for r in trace.records])
        np.testing.assert_array_equal(got, duals)
        np.testing.assert_allclose(model.weights[0][0], w, atol=1e-9)

    def test_frozen_duals_is_plain_ascent(self):
        tr, _ = skewed(n=200, seed=2)
        net = NetworkConfig(4, (5, 1), "tanh", 3)
        cfg = TrainConfig(eta=0.2, batch_size=32, iters=20, freeze_duals=(0.5, 0.5))
        model, _ = dspade_train(tr, net, MIN, cfg)
        ref = nn_init(net)
        stepper = OptStepper("constant_sgd", 0.2)
        stream = minibatch_stream(tr, 32, cfg.seed, False)
        priors = ClassPriors.from_labels(tr.y)
        for _ in range(20):
            X, y = next(stream)
            ref = step(stepper, ref, augmented_objective(X, y, priors, 0.5, 0.5)(ref)[1])
        np.testing.assert_array_equal(model.flat(), ref.flat())

    def test_deterministic(self):
        tr, te = skewed(seed=3)
        net = NetworkConfig(4, (8, 1), "relu", 5)
        cfg = TrainConfig(eta=0.1, batch_size=32, iters=40, seed=6)
        a, ta = dspade_train(tr, net, MIN, cfg, te)
        b, tb = dspade_train(tr, net, MIN, cfg, te)
        assert a.flat().tobytes() == b.flat().tobytes()
        assert ta.grad_norms == tb.grad_norms

    def test_duals_are_supergradients(self):
        tr, _ = skewed(seed=3)
        cfg = TrainConfig(eta=0.1, batch_size=32, iters=30, eval_every=1)
        _, trace = dspade_train(tr, NetworkConfig(4, (1,), "relu", 0), ConcaveLink("q_mean"), cfg)
        for r in trace.records[1:]:
            assert r.alpha >= 0 and r.beta >= 0


class TestDnemsis:
    def test_gamma_is_one(self):
        tr, te = skewed(seed=1)
        m = neg_kld_nested(tr.p_hat)
        cfg = TrainConfig(eta=0.05, batch_size=32, iters=30, eval_every=5)
        _, trace = dnemsis_train(tr, NetworkConfig(4, (6, 1), "relu", 2), m, cfg, te)
        assert all(r.gamma1 == 1.0 and r.gamma2 == 1.0 for r in trace.records)
        assert len(trace.records) == 6

    def test_perfect_init_stays_near_zero(self, separable):
        m = neg_kld_nested(0.5)
        init = Model([np.array([[5.0, 0.0]])], [np.zeros(1)], NetworkConfig(2, (1,), "relu", 0))
        cfg = TrainConfig(eta=1e-3, batch_size=6, iters=20, eval_every=20)
        model, trace = dnemsis_train(separable, init.config, m, cfg, separable, init_model=init)
        assert trace.records[-1].test_metric == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(model.flat(), init.flat(), atol=1e-3)


class TestDamp:
    def test_level_makes_valuation_zero(self, rng):
        m = random_net(rng, d_in=3, depth=1)
        X, y = random_batch(rng, 3, n=10)
        priors = ClassPriors(0.4)
        c = fbeta_coeffs(1.0, 0.4)
        level = batch_level(c, "sigmoid", priors, m, X, y)
        u, v = sample_averages("sigmoid", priors, m, X, y)
        assert valuation(c, u, v, level) == pytest.approx(0.0, abs=1e-12)
        assert level == pytest.approx(pseudolinear_value(c, u, v))

    def test_full_batch_levels_monotone(self):
        tr, _ = skewed(n=400, d=4, p=0.25, delta_mu=1.5, seed=5)
        net, k = damp_net(4, (8,), 4, seed=1)
        cfg = TrainConfig(eta=0.1, batch_size=32, iters=40, inner_iters=5, full_batch=True,
                          pretrain_epochs=2, eval_every=10)
        _, trace = damp_train(tr, net, k, fbeta_coeffs(1.0, tr.p_hat), cfg)
        assert np.all(np.diff(trace.levels) >= -1e-12)

    def test_samples_column(self):
        tr, te = skewed(n=400, p=0.25, seed=5)
        net, k = damp_net(4, (8,), 4, seed=1)
        cfg = TrainConfig(eta=0.05, batch_size=16, iters=12, inner_iters=3, eval_every=4,
                          pretrain_epochs=1)
        split_model, trace = damp_train(tr, net, k, fbeta_coeffs(1.0, tr.p_hat), cfg, te)
        assert [r.samples for r in trace.records] == [16 * r.iter for r in trace.records]
        assert trace.records[-1].iter == 12 * 4
        assert trace.meta["pretrain_samples"] == 16 * (len(tr) // 16)
        assert split_model.scores(te.X).shape == (len(te),)

    def test_bad_split(self):
        tr, _ = skewed(n=200)
        with pytest.raises(ConfigurationError):
            damp_train(tr, NetworkConfig(4, (1,), "relu", 0), 1, fbeta_coeffs(1.0, 0.1),
                       TrainConfig())


def brute_force(s, y, delta):
    best, best_val = None, -np.inf
    for bits in itertools.product([-1.0, 1.0], repeat=len(s)):
        val = labeling_objective(s, y, np.array(bits), delta)
        if val > best_val + 1e-12:
            best, best_val = np.array(bits), val
    return best, best_val


class TestStructured:
    def test_zero_delta_is_sign(self):
        s = np.array([0.5, -0.2, 0.0, 3.0])
        y = np.array([1.0, 1.0, -1.0, -1.0])
        out = most_violated_labeling(s, y, lambda *a: 0.0)
        np.testing.assert_array_equal(out, [1, -1, -1, 1])

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        s = rng.normal(size=n)
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        delta = delta_from_measure(fbeta_coeffs(1.0, 0.5)) if seed % 2 else delta_from_measure("accuracy")
        got = labeling_objective(s, y, most_violated_labeling(s, y, delta), delta)
        assert got == pytest.approx(brute_force(s, y, delta)[1], abs=1e-10)

    def test_three_points(self):
        s = np.array([0.1, -0.3, 0.2])
        y = np.array([1.0, -1.0, -1.0])
        delta = delta_from_measure(fbeta_coeffs(1.0, 1 / 3))
        # flipping only the third point: F1 = 0 so Delta = 1, plus 2 * 0.2 - 2 * 0.1
        best, val = brute_force(s, y, delta)
        np.testing.assert_array_equal(most_violated_labeling(s, y, delta), [-1, -1, 1])
        np.testing.assert_array_equal(best, [-1, -1, 1])
        assert val == pytest.approx(1.2)

    def test_fbeta_delta(self):
        d = delta_from_measure(fbeta_coeffs(1.0, 0.5))
        assert d(2, 1, 1, 3) == pytest.approx(1 - fbeta_from_counts(2, 1, 1))

    def test_correct_labeling_is_weight_decay(self, rng):
        m = random_net(rng, d_in=3, activation="tanh")
        X, y = random_batch(rng, 3)
        _, g = structured_objective(X, y, y, 0.0, 5.0)(m)
        np.testing.assert_allclose(g.flat(), m.flat())

    def test_underperforms_dspade_on_skew(self):
        tr, te = skewed(n=2000, d=4, p=0.05, delta_mu=2.5, seed=1)
        net = NetworkConfig(4, (8, 1), "relu", 7)
        cfg = TrainConfig(eta=0.05, batch_size=32, iters=300, seed=3, eval_every=300)
        _, t_s = struct_ann_train(tr, net, MIN, cfg, te)
        _, t_d = dspade_train(tr, net, MIN, cfg, te)
        assert t_s.records[-1].test_metric < t_d.records[-1].test_metric


class TestPlugin:
    def test_two_scores(self):
        assert tune_threshold([-1.0, 1.0], [-1, 1], "accuracy") == 0.0

    def test_six_point_f1(self, six_points):
        s, y = six_points
        th = tune_threshold(s, y, fbeta_coeffs(1.0, 0.5))
        best = max(fbeta_from_counts(np.sum((s > c) & (y == 1)), np.sum((s <= c) & (y == 1)),
                                     np.sum((s > c) & (y == -1))) for c in np.append(s, -9))
        assert evaluate(fbeta_coeffs(1.0, 0.5), s, y, th) == pytest.approx(best)
        # cut below -0.5 recovers all positives with one false positive
        assert th == pytest.approx(-1.0)

    def test_accuracy_inside_margin(self, separable):
        m = Model([np.array([[1.0, 0.0]])], [np.array([0.3])], NetworkConfig(2, (1,), "relu", 0))
        th = plugin_tune(m, separable, "accuracy")
        s = scores(m, separable.X)
        assert s[separable.y == -1].max() < th < s[separable.y == 1].min()

    def test_empty_validation(self):
        m = nn_init(NetworkConfig(2, (1,), "relu", 0))
        with pytest.raises(ConfigurationError):
            plugin_tune(m, Dataset(np.zeros((0, 2)), np.zeros(0)), "accuracy")

    def test_kld_is_minimized(self):
        s = np.arange(10.0)
        y = np.array([-1.0] * 7 + [1.0] * 3)
        th = tune_threshold(s, y, neg_kld_nested(0.3))
        assert counts_metric(neg_kld_nested(0.3), 3, 0, 0, 7) == 0.0
        assert 6 < th < 7

    def test_ce_threshold_fn(self):
        tr, te = skewed(n=200)
        cfg = TrainConfig(eta=0.1, batch_size=32, iters=10, eval_every=10)
        net = NetworkConfig(4, (1,), "relu", 0)
        _, t0 = ce_train(tr, net, cfg, te)
        _, t1 = ce_train(tr, net, cfg, te, threshold_fn=lambda m: 1e9)
        # everything negative at a huge threshold
        assert t1.records[-1].test_metric == pytest.approx(1 - te.p_hat)
        assert t0.records[-1].iter == 10


class TestStability:
    def test_decreasing(self):
        rep = stability_report(np.linspace(1.0, 0.1, 100), 0.5)
        assert rep.first_hit == 56
        assert rep.decile_ratio == pytest.approx(0.1 / 0.918181818, rel=1e-6)
        assert rep.stabilizing

    def test_flat_is_not_stabilizing(self):
        rep = stability_report(np.ones(50), 0.5)
        assert rep.first_hit is None and rep.decile_ratio == 1.0 and not rep.stabilizing

    def test_zero_norms(self):
        rep = stability_report(np.zeros(10), 0.0)
        assert rep.first_hit == 1 and rep.stabilizing

    def test_running_min(self):
        rep = stability_report([3.0, 1.0, 2.0, 0.5], 0.1)
        np.testing.assert_array_equal(rep.running_min, [3, 1, 1, 0.5])

    def test_empty(self):
        with pytest.raises(ValueError):
            stability_report([], 0.1)
