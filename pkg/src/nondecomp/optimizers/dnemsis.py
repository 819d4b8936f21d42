"""Nested primal-dual training for Psi(zeta1, zeta2) measures such as -KLD."""
from __future__ import annotations

import numpy as np

from ..data import minibatch_stream
from ..measures import nested_dual_steps
from ..netcore import nn_init, scores, step
from ..rewards import normalized_rewards
from .common import Recorder, TrainingAborted, nested_objective, nested_weights


def dnemsis_train(train, net, measure, cfg, test=None, init_model=None):
    """Train on a nested concave measure and return ``(model, trace)``.

    Batch reward sums are divided by the batch size, so ``r`` is a running
    mean of (P_hat, N_hat) and ``q`` a running mean of the inner dual
    objectives. The conjugate correction in ``q`` uses the Fenchel-Young
    identity at the point where the previous duals were taken.
    """
    priors = cfg.priors_for(train)
    model = init_model.copy() if init_model is not None else nn_init(net)
    stepper = cfg.make_stepper()
    stream = minibatch_stream(train, cfg.batch_size, cfg.seed, cfg.stratified)
    rec = Recorder("dnemsis", measure, cfg, train.X, train.y, test)
    r = np.zeros(2)
    q = np.zeros(2)
    alpha, beta, gamma = np.zeros(2), np.zeros(2), np.zeros(2)
    r_prev = None
    for t in range(1, cfg.iters + 1):
        X, y = next(stream)
        _, grad = nested_objective(X, y, priors, alpha, beta, gamma)(model)
        try:
            model = step(stepper, model, grad, "ascent")
        except FloatingPointError as exc:
            raise TrainingAborted(str(exc), t, rec.trace) from exc
        rp, rn = normalized_rewards(cfg.dual_reward, priors, scores(model, X), y)
        batch_r = np.array([rp.mean(), rn.mean()])
        if r_prev is None:
            conj = np.zeros(2)
        else:
            conj = np.array([alpha @ r_prev - measure.zeta1(*r_prev),
                             beta @ r_prev - measure.zeta2(*r_prev)])
        q = ((t - 1) * q + np.array([alpha @ batch_r, beta @ batch_r]) - conj) / t
        r = ((t - 1) * r + batch_r) / t
        alpha, beta, gamma = nested_dual_steps(measure, r, q)
        r_prev = r.copy()
        _, g_now = nested_objective(X, y, priors, alpha, beta, gamma)(model)
        rec.grad(t, g_now.norm())
        if rec.due(t):
            wp, wn = nested_weights(alpha, beta, gamma)
            rec.record(t, model, t * cfg.batch_size, alpha=wp, beta=wn,
                       gamma1=gamma[0], gamma2=gamma[1])
    rec.trace.meta.update(prior=priors.p, r=r.tolist(), q=q.tolist(),
                          alpha=alpha.tolist(), beta=beta.tolist(), gamma=gamma.tolist())
    return model, rec.trace
