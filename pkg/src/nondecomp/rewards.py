"""Reward surrogates, class-normalized rewards and confusion statistics."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DegeneratePriorError, NumericError, UndefinedRateError
from .netcore import scores, sigmoid


class RewardKind(str, Enum):
    sigmoid = "sigmoid"
    zero_one = "zero_one"


def reward(kind, y_hat, y):
    """r(y_hat, y) in [0, 1]. Works elementwise on arrays.

    The zero-one reward treats y_hat == 0 as a mistake for either label.
    """
    kind = RewardKind(kind)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y_hat)):
        raise NumericError("non-finite score passed to reward")
    if kind is RewardKind.sigmoid:
        out = sigmoid(y * y_hat)
    else:
        out = (y * y_hat > 0).astype(np.float64)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClassPriors:
    p: float
    source: str = "empirical_train"

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DegeneratePriorError(f"class prior must lie in (0, 1), got {self.p}")
        if self.source not in ("empirical_train", "user_supplied"):
            raise ValueError(f"unknown prior source {self.source!r}")

    @classmethod
    def from_labels(cls, y):
        y = np.asarray(y)
        return cls(float(np.mean(y == 1)), "empirical_train")


def class_normalized_reward(kind, priors, model, x, y):
    """(r+, r-) for one point: the reward scaled by 1/p or 1/(1-p), on its own class."""
    r = reward(kind, scores(model, np.atleast_2d(x))[0], y)
    return _split_by_class(r, y, priors)


def _split_by_class(r, y, priors):
    p = priors.p
    if y == 1:
        return r / p, 0.0
    return 0.0, r / (1.0 - p)


def normalized_rewards(kind, priors, s, y):
    """Per-point r+ and r- arrays from precomputed scores."""
    y = np.asarray(y, dtype=np.float64)
    r = reward(kind, s, y)
    pos = y == 1
    return np.where(pos, r / priors.p, 0.0), np.where(pos, 0.0, r / (1.0 - priors.p))


def sample_averages(kind, priors, model, X, y):
    """(P_hat, N_hat): batch means of r+ and r-."""
    rp, rn = normalized_rewards(kind, priors, scores(model, X), y)
    return float(rp.mean()), float(rn.mean())


@dataclass(frozen=True)
class RewardStats:
    """Running totals for the dual step.

    ``r_plus`` sums per-batch means of r * 1{y=+1} (the class-normalized reward
    times the prior), so ``r_plus / n_plus`` is the mean reward on positives.
    """

    r_plus: float = 0.0
    r_minus: float = 0.0
    n_plus: float = 0.0
    n_minus: float = 0.0
    t: int = 0

    def rates(self):
        """(r+/n+, r-/n-); a component is None while its class is unseen."""
        u = self.r_plus / self.n_plus if self.n_plus > 0 else None
        v = self.r_minus / self.n_minus if self.n_minus > 0 else None
        return u, v


def accumulate(stats, r_plus_mean, r_minus_mean, pos_frac, neg_frac):
    """Add one batch's means to the running totals."""
    vals = (r_plus_mean, r_minus_mean, pos_frac, neg_frac)
    if not all(np.isfinite(v) for v in vals):
        raise NumericError("non-finite batch statistic", iteration=stats.t + 1)
    return replace(stats,
                   r_plus=stats.r_plus + r_plus_mean,
                   r_minus=stats.r_minus + r_minus_mean,
                   n_plus=stats.n_plus + pos_frac,
                   n_minus=stats.n_minus + neg_frac,
                   t=stats.t + 1)


def batch_statistics(kind, priors, s, y):
    """Arguments for :func:`accumulate` from scores and labels of one batch."""
    rp, rn = normalized_rewards(kind, priors, s, y)
    y = np.asarray(y)
    return (priors.p * float(rp.mean()), (1.0 - priors.p) * float(rn.mean()),
            float(np.mean(y == 1)), float(np.mean(y != 1)))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def n(self):
        return self.tp + self.fn + self.fp + self.tn


def counts_from_scores(s, y, threshold=0.0):
    """Confusion counts with the zero-one convention: a score equal to the
    threshold is wrong for both classes."""
    s = np.asarray(s, dtype=np.float64) - threshold
    y = np.asarray(y)
    pos = y == 1
    tp = int(np.sum(pos & (s > 0)))
    tn = int(np.sum(~pos & (s < 0)))
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    return ConfusionCounts(tp, n_pos - tp, n_neg - tn, tn)


def confusion(model, X, y, threshold=0.0):
    return counts_from_scores(scores(model, X), y, threshold)


def tpr(counts):
    if counts.tp + counts.fn == 0:
        raise UndefinedRateError("TPR undefined: no positives")
    return counts.tp / (counts.tp + counts.fn)


def tnr(counts):
    if counts.fp + counts.tn == 0:
        raise UndefinedRateError("TNR undefined: no negatives")
    return counts.tn / (counts.fp + counts.tn)
