"""Primal-dual minibatch training for concave measures of (TPR, TNR)."""
from __future__ import annotations

import logging

from ..data import minibatch_stream
from ..measures import dual_step
from ..netcore import nn_init, scores, step
from ..rewards import RewardStats, accumulate, batch_statistics
from .common import Recorder, TrainingAborted, augmented_objective

log = logging.getLogger(__name__)


def dspade_train(train, net, link, cfg, test=None, init_model=None):
    """Train on the concave link ``link`` and return ``(model, trace)``.

    Each iteration takes an ascent step on alpha * P_hat + beta * N_hat over a
    minibatch, folds the batch rewards of the updated model into running
    totals, and sets (alpha, beta) to the link's supergradient at the running
    (TPR, TNR) estimates. Duals start at zero, so the first step is a no-op.
    """
    priors = cfg.priors_for(train)
    model = init_model.copy() if init_model is not None else nn_init(net)
    stepper = cfg.make_stepper()
    stream = minibatch_stream(train, cfg.batch_size, cfg.seed, cfg.stratified)
    rec = Recorder("dspade", link, cfg, train.X, train.y, test)
    alpha, beta = cfg.freeze_duals if cfg.freeze_duals is not None else (0.0, 0.0)
    stats = RewardStats()
    for t in range(1, cfg.iters + 1):
        X, y = next(stream)
        _, grad = augmented_objective(X, y, priors, alpha, beta)(model)
        try:
            model = step(stepper, model, grad, "ascent")
        except FloatingPointError as exc:
            raise TrainingAborted(str(exc), t, rec.trace) from exc
        s = scores(model, X)
        stats = accumulate(stats, *batch_statistics(cfg.dual_reward, priors, s, y))
        u, v = stats.rates()
        if cfg.freeze_duals is None:
            if u is None or v is None:
                log.debug("iteration %d: a class is still unseen, dual step skipped", t)
            else:
                alpha, beta = dual_step(link, u, v)
        # gradient at the new model and new duals
        _, g_now = augmented_objective(X, y, priors, alpha, beta)(model)
        rec.grad(t, g_now.norm())
        if rec.due(t):
            rec.record(t, model, t * cfg.batch_size, alpha=alpha, beta=beta)
    rec.trace.meta.update(prior=priors.p, final_stats=stats.__dict__.copy(),
                          final_duals=(float(alpha), float(beta)))
    return model, rec.trace
