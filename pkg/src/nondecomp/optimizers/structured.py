"""Structured-hinge baseline: loss-augmented inference over confusion counts."""
from __future__ import annotations

import numpy as np

from ..data import minibatch_stream
from ..measures import ConcaveLink, NestedMeasure, PseudolinearCoeffs
from ..netcore import GradientBuffer, backward, forward, nn_init, step
from .common import Recorder, TrainingAborted, counts_metric


def delta_from_measure(measure):
    """Loss Delta(tp, fn, fp, tn) for a measure: 1 - value, or the KLD itself."""
    if isinstance(measure, NestedMeasure):
        return lambda tp, fn, fp, tn: counts_metric(measure, tp, fn, fp, tn)
    if isinstance(measure, (ConcaveLink, PseudolinearCoeffs)) or measure == "accuracy":
        return lambda tp, fn, fp, tn: 1.0 - counts_metric(measure, tp, fn, fp, tn)
    raise TypeError(f"unsupported measure {measure!r}")


def _delta_grid(delta, tp, fn, fp, tn):
    out = np.asarray(delta(tp, fn, fp, tn), dtype=np.float64)
    if out.shape != np.broadcast(tp, fp).shape:
        out = np.vectorize(lambda *a: float(delta(*a)))(tp, fn, fp, tn)
    return out


def most_violated_labeling(s, y, delta):
    """argmax over labelings of Delta(counts) + sum_i (yhat_i - y_i) s_i, labels in {-1, +1}.

    For fixed counts (i positives and j negatives predicted positive) the
    score term is maximized by the top-i positives and top-j negatives, so
    enumerating all (i, j) pairs is exact. Ties keep the earliest pair in
    (i, j) order, i.e. the fewest predicted positives.
    """
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y != 1)
    pos = pos[np.argsort(-s[pos], kind="stable")]
    neg = neg[np.argsort(-s[neg], kind="stable")]
    cp = np.concatenate([[0.0], np.cumsum(s[pos])])
    cn = np.concatenate([[0.0], np.cumsum(s[neg])])
    n_pos, n_neg = len(pos), len(neg)
    i, j = np.meshgrid(np.arange(n_pos + 1), np.arange(n_neg + 1), indexing="ij")
    total = s.sum()
    # sum_k yhat_k s_k with top-i / top-j positive = 2 * (chosen sum) - total
    linear = 2.0 * (cp[i] + cn[j]) - total - np.dot(y, s)
    obj = _delta_grid(delta, i, n_pos - i, j, n_neg - j) + linear
    k = int(np.argmax(obj))
    bi, bj = np.unravel_index(k, obj.shape)
    out = -np.ones(len(s))
    out[pos[:bi]] = 1.0
    out[neg[:bj]] = 1.0
    return out


def labeling_objective(s, y, labels, delta):
    """Delta(counts(labels)) + sum_i (labels_i - y_i) s_i."""
    y = np.asarray(y)
    labels = np.asarray(labels)
    tp = int(np.sum((y == 1) & (labels == 1)))
    fn = int(np.sum((y == 1) & (labels != 1)))
    fp = int(np.sum((y != 1) & (labels == 1)))
    tn = int(np.sum((y != 1) & (labels != 1)))
    return float(delta(tp, fn, fp, tn)) + float(np.dot(labels - y, s))


def structured_objective(X, y, y_tilde, delta_value, C):
    """0.5 * ||w||^2 + C * (Delta + sum_i (y~_i - y_i) f(x_i; w)) at a fixed labeling."""
    diff = np.asarray(y_tilde, dtype=np.float64) - np.asarray(y, dtype=np.float64)

    def objective(model):
        s, cache = forward(model, X)
        value = 0.5 * float(np.sum(model.flat() ** 2)) + C * (delta_value + float(diff @ s))
        g = backward(model, cache, C * diff)
        decay = GradientBuffer([W.copy() for W in model.weights], [b.copy() for b in model.biases])
        return value, g + decay

    return objective


def struct_ann_train(train, net, measure, cfg, test=None, init_model=None):
    """Minibatch subgradient descent on the structured hinge for ``measure``."""
    delta = delta_from_measure(measure)
    model = init_model.copy() if init_model is not None else nn_init(net)
    stepper = cfg.make_stepper()
    stream = minibatch_stream(train, cfg.batch_size, cfg.seed, cfg.stratified)
    rec = Recorder("structann", measure, cfg, train.X, train.y, test)
    for t in range(1, cfg.iters + 1):
        X, y = next(stream)
        s = forward(model, X)[0]
        y_tilde = most_violated_labeling(s, y, delta)
        d_val = labeling_objective(s, y, y_tilde, delta) - float(np.dot(y_tilde - y, s))
        _, grad = structured_objective(X, y, y_tilde, d_val, cfg.struct_C)(model)
        rec.grad(t, grad.norm())
        try:
            model = step(stepper, model, grad, "descent")
        except FloatingPointError as exc:
            raise TrainingAborted(str(exc), t, rec.trace) from exc
        if rec.due(t):
            rec.record(t, model, t * cfg.batch_size)
    return model, rec.trace
