"""Alternating maximization for pseudolinear measures such as F-beta."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from ..data import Dataset, minibatch_stream
from ..errors import ConfigurationError
from ..measures import pseudolinear_value
from ..netcore import NetworkConfig, features, forward, split, stack, step
from ..rewards import sample_averages
from .common import Recorder, TrainConfig, TrainingAborted, valuation_objective
from .baselines import ce_train

log = logging.getLogger(__name__)


@dataclass
class DampSplit:
    lower: object  # w2: d_in -> d_int, frozen after pretraining
    upper: object  # w1: d_int -> 1

    @property
    def d_int(self):
        return self.lower.config.output_dim

    @property
    def model(self):
        return stack(self.lower, self.upper)

    def scores(self, X):
        return forward(self.upper, features(self.lower, X))[0]


def batch_level(coeffs, kind, priors, upper, Z, y):
    """Measure on a batch with rewards in place of TPR/TNR; None if degenerate."""
    u, v = sample_averages(kind, priors, upper, Z, y)
    if coeffs.denominator(u, v) < coeffs.lower_bound_m:
        return None
    return pseudolinear_value(coeffs, u, v)


def damp_train(train, net, n_lower, coeffs, cfg, test=None, pretrained=None):
    """Pretrain the stacked net on cross-entropy, then fine-tune the upper part.

    ``net`` describes the whole stack; its first ``n_lower`` layers form the
    frozen feature extractor. Each outer step sets the level from a fresh
    batch, then runs ``cfg.inner_iters`` ascent steps on the surrogate
    valuation at that level. With ``cfg.full_batch`` every batch is the whole
    training set. Returns ``(DampSplit, trace)``.
    """
    if not 1 <= n_lower < len(net.layer_sizes):
        raise ConfigurationError("n_lower must leave at least one upper layer")
    priors = cfg.priors_for(train)
    pretrain_samples = 0
    if pretrained is None:
        epochs_iters = max(1, cfg.pretrain_epochs * (len(train) // cfg.batch_size))
        pre_cfg = TrainConfig(stepper=cfg.stepper, eta=cfg.eta, batch_size=cfg.batch_size,
                              iters=epochs_iters, seed=cfg.seed, eval_every=epochs_iters,
                              stratified=cfg.stratified)
        pretrained, _ = ce_train(train, net, pre_cfg)
        pretrain_samples = epochs_iters * cfg.batch_size
    lower, upper = split(pretrained, n_lower)
    Z = features(lower, train.X)
    feats = Dataset(Z, train.y, train.name + ":features")
    if cfg.full_batch:
        def batches():
            while True:
                yield feats.X, feats.y
        stream = batches()
        b = len(feats)
    else:
        stream = minibatch_stream(feats, cfg.batch_size, cfg.seed + 1, cfg.stratified)
        b = cfg.batch_size

    def score_fn(m, X):
        return forward(m, features(lower, X))[0]

    rec = Recorder("damp", coeffs, cfg, train.X, train.y, test, score_fn=score_fn)
    stepper = cfg.make_stepper()
    level = 0.0
    drawn = 0
    for t in range(1, cfg.iters + 1):
        Z0, y0 = next(stream)
        drawn += 1
        new_level = batch_level(coeffs, cfg.dual_reward, priors, upper, Z0, y0)
        if new_level is None:
            log.info("outer step %d: degenerate denominator, keeping level %.6g", t, level)
        else:
            level = new_level
        rec.trace.levels.append(level)
        for _ in range(cfg.inner_iters):
            Zb, yb = next(stream)
            drawn += 1
            _, grad = valuation_objective(Zb, yb, priors, coeffs, level)(upper)
            rec.grad(drawn, grad.norm())
            try:
                upper = step(stepper, upper, grad, "ascent")
            except FloatingPointError as exc:
                raise TrainingAborted(str(exc), drawn, rec.trace) from exc
        if rec.due(t):
            rec.record(drawn, upper, drawn * b, level_v=level)
    rec.trace.meta.update(prior=priors.p, minibatches=drawn, d_int=lower.config.output_dim,
                          pretrain_samples=pretrain_samples)
    return DampSplit(lower, upper), rec.trace


def damp_net(input_dim, hidden, d_int, upper_hidden=(), activation="relu", seed=0):
    """Stacked config plus the split index: hidden... -> d_int | upper_hidden... -> 1."""
    sizes = tuple(hidden) + (d_int,) + tuple(upper_hidden) + (1,)
    return NetworkConfig(input_dim, sizes, activation, seed), len(hidden) + 1
