"""Cross-entropy training and plug-in threshold tuning."""
from __future__ import annotations

import numpy as np

from ..data import minibatch_stream
from ..errors import ConfigurationError
from ..measures import ConcaveLink, NestedMeasure, PseudolinearCoeffs
from ..netcore import nn_init, scores, step
from ..rewards import counts_from_scores
from .common import Recorder, TrainingAborted, counts_metric, cross_entropy_objective


def ce_train(train, net, cfg, test=None, measure="accuracy", init_model=None, algorithm="ce",
             threshold_fn=None):
    """Minibatch descent on the logistic loss. ``measure`` only drives the trace.

    ``threshold_fn(model)`` sets the decision threshold used for trace
    metrics; the default is 0.
    """
    model = init_model.copy() if init_model is not None else nn_init(net)
    stepper = cfg.make_stepper()
    stream = minibatch_stream(train, cfg.batch_size, cfg.seed, cfg.stratified)
    rec = Recorder(algorithm, measure, cfg, train.X, train.y, test, threshold_fn=threshold_fn)
    for t in range(1, cfg.iters + 1):
        X, y = next(stream)
        loss, grad = cross_entropy_objective(X, y)(model)
        if not np.isfinite(loss):
            raise TrainingAborted("non-finite cross-entropy", t, rec.trace)
        rec.grad(t, grad.norm())
        try:
            model = step(stepper, model, grad, "descent")
        except FloatingPointError as exc:
            raise TrainingAborted(str(exc), t, rec.trace) from exc
        if rec.due(t):
            rec.record(t, model, t * cfg.batch_size)
    return model, rec.trace


def candidate_thresholds(s):
    """Midpoints between consecutive distinct scores, plus one cut below and one above all."""
    u = np.unique(np.asarray(s, dtype=np.float64))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.concatenate([[u[0] - 1.0], mids, [u[-1] + 1.0]])


def higher_is_better(measure, c):
    """Measure value on counts, negated for KLD so that larger is always better."""
    if callable(measure) and not isinstance(measure, (ConcaveLink, PseudolinearCoeffs, NestedMeasure)):
        return float(measure(c))
    val = float(counts_metric(measure, c.tp, c.fn, c.fp, c.tn))
    return -val if isinstance(measure, NestedMeasure) else val


def tune_threshold(s, y, measure):
    """Threshold on validation scores maximizing ``measure``; ties go to the smallest.

    ``measure`` is a measure object or a callable on ConfusionCounts. A point
    is predicted positive when its score exceeds the threshold.
    """
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y)
    if s.size == 0:
        raise ConfigurationError("plug-in tuning needs a non-empty validation set")
    best_th, best_val = None, -np.inf
    for th in candidate_thresholds(s):
        val = higher_is_better(measure, counts_from_scores(s, y, th))
        if val > best_val:
            best_th, best_val = float(th), val
    return best_th


def plugin_tune(model, val, measure):
    """Plug-in classifier: pick the measure-optimal threshold for a trained scorer."""
    if len(val) == 0:
        raise ConfigurationError("plug-in tuning needs a non-empty validation set")
    return tune_threshold(scores(model, val.X), val.y, measure)
