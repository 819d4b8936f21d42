"""Training configuration, traces, evaluation and the objectives the trainers ascend."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigurationError, NumericError
from ..measures import (ConcaveLink, NestedMeasure, PseudolinearCoeffs, fbeta_coeffs,
                        fbeta_from_counts, kld, link_value, pseudolinear_value)
from ..netcore import OptStepper, backward, backward_weighted_rewards, forward, sigmoid
from ..rewards import ClassPriors, RewardKind, counts_from_scores, tnr, tpr


@dataclass
class TrainConfig:
    stepper: str = "constant_sgd"
    eta: float = 0.1
    batch_size: int = 64
    iters: int = 500
    inner_iters: int = 5
    primal_reward: str = "sigmoid"
    dual_reward: str = "sigmoid"
    seed: int = 0
    eval_every: int = 10
    stratified: bool = False
    prior: float | None = None
    # DAMP
    pretrain_epochs: int = 5
    full_batch: bool = False
    # Struct-ANN
    struct_C: float = 1.0
    # fixes (alpha, beta) for the whole run when set
    freeze_duals: tuple | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch size must be >= 1")
        if self.iters < 1 or self.inner_iters < 1:
            raise ConfigurationError("iteration budgets must be >= 1")
        if RewardKind(self.primal_reward) is not RewardKind.sigmoid:
            raise ConfigurationError("the primal reward must be sigmoid")
        RewardKind(self.dual_reward)
        if self.eval_every < 1:
            raise ConfigurationError("eval_every must be >= 1")
        if not self.eta > 0:
            raise ConfigurationError("step size must be positive")

    def make_stepper(self):
        return OptStepper(self.stepper, self.eta)

    def priors_for(self, train):
        if self.prior is not None:
            return ClassPriors(self.prior, "user_supplied")
        return ClassPriors.from_labels(train.y)


CSV_COLUMNS = ("iter", "samples", "wall_ms", "train_metric", "test_metric", "grad_norm",
               "alpha", "beta", "gamma1", "gamma2", "level_v")


@dataclass
class TraceRecord:
    iter: int
    samples: int
    wall_ms: float
    train_metric: float | None = None
    test_metric: float | None = None
    grad_norm: float | None = None
    alpha: float | None = None
    beta: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    level_v: float | None = None

    def as_dict(self):
        return asdict(self)


@dataclass
class TrainTrace:
    """Evaluation records at the configured cadence plus per-iteration gradient norms."""

    algorithm: str
    metric_name: str
    records: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=object)


class TrainingAborted(NumericError):
    """Non-finite values mid-run. Carries the partial trace."""

    def __init__(self, message, iteration, trace):
        super().__init__(message, iteration)
        self.trace = trace


# evaluation


def metric_name(measure):
    if isinstance(measure, ConcaveLink):
        return measure.kind
    if isinstance(measure, PseudolinearCoeffs):
        return f"f{measure.fbeta:g}" if measure.fbeta is not None else "pseudolinear"
    if isinstance(measure, NestedMeasure):
        return "kld"
    if measure == "accuracy":
        return "accuracy"
    raise TypeError(f"unsupported measure {measure!r}")


def _safe_rate(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)


def counts_metric(measure, tp, fn, fp, tn):
    """Measure value from confusion counts; vectorized.

    KLD is returned as the divergence itself (lower is better), using the
    sample's own class proportion as the truth. Empty classes give rate 1.
    """
    tp, fn, fp, tn = (np.asarray(a, dtype=np.float64) for a in (tp, fn, fp, tn))
    if measure == "accuracy":
        return (tp + tn) / (tp + fn + fp + tn)
    if isinstance(measure, ConcaveLink):
        return measure.value(_safe_rate(tp, tp + fn), _safe_rate(tn, fp + tn))
    if isinstance(measure, PseudolinearCoeffs):
        if measure.fbeta is not None:
            return fbeta_from_counts(tp, fn, fp, measure.fbeta)
        return pseudolinear_value(measure, _safe_rate(tp, tp + fn), _safe_rate(tn, fp + tn))
    if isinstance(measure, NestedMeasure):
        n = tp + fn + fp + tn
        p = (tp + fn) / n
        q = (tp + fp) / n
        out = np.vectorize(lambda a, b: kld((a, 1 - a), (b, 1 - b)))(p, q)
        return float(out) if out.ndim == 0 else out
    raise TypeError(f"unsupported measure {measure!r}")


def evaluate(measure, s, y, threshold=0.0):
    """Measure on a labelled sample given its scores (zero-one decisions)."""
    c = counts_from_scores(s, y, threshold)
    if isinstance(measure, ConcaveLink):
        return link_value(measure, tpr(c), tnr(c))
    return float(counts_metric(measure, c.tp, c.fn, c.fp, c.tn))


class Recorder:
    """Collects trace records at the evaluation cadence."""

    def __init__(self, algorithm, measure, cfg, train_X, train_y, test=None, score_fn=None,
                 threshold_fn=None):
        self.trace = TrainTrace(algorithm, metric_name(measure))
        self.measure = measure
        self.cfg = cfg
        self.train = (train_X, train_y)
        self.test = test
        self.score_fn = score_fn
        self.threshold_fn = threshold_fn
        self.t0 = time.perf_counter()
        self.wall = []

    def grad(self, t, norm):
        if not np.isfinite(norm):
            raise TrainingAborted("non-finite gradient norm", t, self.trace)
        self.trace.grad_norms.append(float(norm))

    def due(self, t):
        return t % self.cfg.eval_every == 0

    def record(self, t, model, samples, **duals):
        score = self.score_fn or (lambda m, X: forward(m, X)[0])
        train_s = score(model, self.train[0])
        if not np.all(np.isfinite(train_s)):
            raise TrainingAborted("non-finite scores", t, self.trace)
        th = self.threshold_fn(model) if self.threshold_fn is not None else 0.0
        rec = TraceRecord(iter=t, samples=samples,
                          wall_ms=round(1000 * (time.perf_counter() - self.t0), 3),
                          train_metric=evaluate(self.measure, train_s, self.train[1], th),
                          grad_norm=self.trace.grad_norms[-1] if self.trace.grad_norms else None)
        if self.test is not None:
            rec.test_metric = evaluate(self.measure, score(model, self.test.X), self.test.y, th)
        for k, v in duals.items():
            setattr(rec, k, None if v is None else float(v))
        self.trace.records.append(rec)
        return rec


# objectives: each maps a model to (value, gradient) and matches what the trainers step on


def class_coefficients(y, priors, w_pos, w_neg):
    """Per-point weights so that sum_i c_i r_i = w_pos * P_hat + w_neg * N_hat."""
    y = np.asarray(y)
    b = len(y)
    return np.where(y == 1, w_pos / (priors.p * b), w_neg / ((1.0 - priors.p) * b))


def weighted_reward_objective(X, y, coef):
    y = np.asarray(y, dtype=np.float64)

    def objective(model):
        s = forward(model, X)[0]
        value = float(np.sum(coef * sigmoid(y * s)))
        return value, backward_weighted_rewards(model, X, y, coef)

    return objective


def augmented_objective(X, y, priors, alpha, beta):
    """g(w) = alpha * P_hat + beta * N_hat on the batch (X, y)."""
    return weighted_reward_objective(X, y, class_coefficients(y, priors, alpha, beta))


def nested_weights(alpha, beta, gamma):
    """Weights on (P_hat, N_hat) in the nested augmented objective."""
    return (gamma[0] * alpha[0] + gamma[1] * beta[0], gamma[0] * alpha[1] + gamma[1] * beta[1])


def nested_objective(X, y, priors, alpha, beta, gamma):
    """h(w) = (g1 a1 + g2 b1) P_hat + (g1 a2 + g2 b2) N_hat."""
    wp, wn = nested_weights(alpha, beta, gamma)
    return weighted_reward_objective(X, y, class_coefficients(y, priors, wp, wn))


def valuation_objective(Z, y, priors, coeffs, level):
    """Surrogate valuation P_a - level * P_b with rewards in place of TPR/TNR."""
    c0 = coeffs.a[0] - level * coeffs.b[0]
    wp = coeffs.a[1] - level * coeffs.b[1]
    wn = coeffs.a[2] - level * coeffs.b[2]
    inner = weighted_reward_objective(Z, y, class_coefficients(y, priors, wp, wn))

    def objective(model):
        v, g = inner(model)
        return c0 + v, g

    return objective


def cross_entropy_objective(X, y):
    """Mean logistic loss of sigmoid(score) against labels in {-1, +1}."""
    y = np.asarray(y, dtype=np.float64)

    def objective(model):
        s, cache = forward(model, X)
        value = float(np.mean(np.logaddexp(0.0, -y * s)))
        dscore = -y * sigmoid(-y * s) / len(y)
        return value, backward(model, cache, dscore)

    return objective


def fbeta_for(measure, p):
    """Rebuild F-beta coefficients for another class proportion."""
    if isinstance(measure, PseudolinearCoeffs) and measure.fbeta is not None:
        return fbeta_coeffs(measure.fbeta, p)
    return measure
