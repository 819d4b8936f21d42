"""Performance measures as functions of (TPR, TNR).

Three families:

* concave links (min of TPR/TNR, Q-mean) with closed-form supergradients,
* pseudolinear ratios such as F-beta, with their valuation functions,
* the negative KL divergence written as a sum of two concave pieces.

The grid-search conjugate helpers here are slow brute-force references. The
training code never calls them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegeneracyError, DegeneratePriorError, DomainError

log = logging.getLogger(__name__)

_SOFT_TOL = 1e-9


def _check_unit(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    for name, a in (("u", u), ("v", v)):
        if np.any(a < -_SOFT_TOL) or np.any(a > 1 + _SOFT_TOL) or not np.all(np.isfinite(a)):
            raise DomainError(f"{name} must lie in [0, 1], got {a}")
    return np.clip(u, 0.0, 1.0), np.clip(v, 0.0, 1.0)


@dataclass(frozen=True)
class ConcaveLink:
    kind: str
    epsilon_clamp: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("min_tpr_tnr", "q_mean"):
            raise ValueError(f"unknown concave link {self.kind!r}")

    def value(self, u, v):
        if self.kind == "min_tpr_tnr":
            return np.minimum(u, v)
        return 1.0 - np.sqrt(((1.0 - u) ** 2 + (1.0 - v) ** 2) / 2.0)


def link_value(link, u, v):
    u, v = _check_unit(u, v)
    out = link.value(u, v)
    return float(out) if np.ndim(out) == 0 else out


def dual_step(link, u, v):
    """Closed-form dual update: a supergradient of the link at (u, v).

    For a concave link the argmin over (alpha, beta) of
    alpha*u + beta*v - conj(alpha, beta) is exactly its supergradient.
    """
    u, v = (float(a) for a in _check_unit(u, v))
    if link.kind == "min_tpr_tnr":
        if u < v:
            return 1.0, 0.0
        if u > v:
            return 0.0, 1.0
        return 0.5, 0.5
    root = np.sqrt(((1.0 - u) ** 2 + (1.0 - v) ** 2) / 2.0)
    if root < link.epsilon_clamp:
        return 0.0, 0.0
    return (1.0 - u) / (2.0 * root), (1.0 - v) / (2.0 * root)


def _as_fn(f):
    return f.value if hasattr(f, "value") else f


def _unit_grid(step):
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def fenchel_conjugate_value(link, alpha, beta, grid_step=0.01):
    """inf over the [0,1]^2 grid of alpha*u + beta*v - link(u, v)."""
    g = _unit_grid(grid_step)
    U, V = np.meshgrid(g, g, indexing="ij")
    return float(np.min(alpha * U + beta * V - _as_fn(link)(U, V)))


@lru_cache(maxsize=16)
def _conjugate_table(fn, grid_step, box, dual_step_size):
    g = _unit_grid(grid_step)
    U, V = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([U.ravel(), V.ravel()], axis=1)
    vals = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=np.float64)
    (alo, ahi), (blo, bhi) = box
    na = int(round((ahi - alo) / dual_step_size))
    nb = int(round((bhi - blo) / dual_step_size))
    A, B = np.meshgrid(np.linspace(alo, ahi, na + 1), np.linspace(blo, bhi, nb + 1), indexing="ij")
    duals = np.stack([A.ravel(), B.ravel()], axis=1)
    conj = np.empty(len(duals))
    chunk = max(1, 4_000_000 // len(pts))
    for i in range(0, len(duals), chunk):
        d = duals[i:i + chunk]
        conj[i:i + chunk] = np.min(d @ pts.T - vals[None, :], axis=1)
    return duals, conj


def fenchel_oracle(link, u, v, grid_step=0.01, dual_box=((0.0, 1.0), (0.0, 1.0)), dual_grid_step=None):
    """Brute-force dual step: grid argmin of alpha*u + beta*v - conj(alpha, beta).

    The conjugate is itself a grid infimum over [0,1]^2. Returns
    ``(alpha, beta, objective)``. ``link`` is a ConcaveLink or any vectorized
    concave ``f(u, v)``.
    """
    step = dual_grid_step or grid_step
    box = tuple(tuple(float(x) for x in b) for b in dual_box)
    duals, conj = _conjugate_table(_as_fn(link), float(grid_step), box, float(step))
    obj = duals @ np.array([u, v], dtype=np.float64) - conj
    k = int(np.argmin(obj))
    return float(duals[k, 0]), float(duals[k, 1]), float(obj[k])


def dual_objective(link, u, v, alpha, beta, grid_step=0.01):
    """alpha*u + beta*v - conj(alpha, beta), the conjugate taken on the grid."""
    return alpha * u + beta * v - fenchel_conjugate_value(link, alpha, beta, grid_step)


def supergradient_gap(link, u, v, grid_step=0.05):
    """Largest violation of link(u', v') <= link(u, v) + <dual_step(u, v), (u'-u, v'-v)>
    over the grid. Non-positive means the inequality holds everywhere."""
    a, b = dual_step(link, u, v)
    g = _unit_grid(grid_step)
    U, V = np.meshgrid(g, g, indexing="ij")
    lhs = link.value(U, V)
    rhs = link.value(u, v) + a * (U - u) + b * (V - v)
    return float(np.max(lhs - rhs))


# pseudolinear measures


@dataclass(frozen=True)
class PseudolinearCoeffs:
    """(a0 + a1*TPR + a2*TNR) / (b0 + b1*TPR + b2*TNR), numerator <= M, denominator >= m."""

    a: tuple
    b: tuple
    lower_bound_m: float
    upper_bound_M: float
    fbeta: float | None = None

    @property
    def kappa(self):
        return 1.0 + self.upper_bound_M / self.lower_bound_m

    def numerator(self, u, v):
        return self.a[0] + self.a[1] * u + self.a[2] * v

    def denominator(self, u, v):
        return self.b[0] + self.b[1] * u + self.b[2] * v


def pseudolinear_value(c, u, v):
    den = c.denominator(u, v)
    if np.any(den < c.lower_bound_m - 1e-12):
        raise DegeneracyError(f"denominator {den} below lower bound {c.lower_bound_m}")
    out = c.numerator(u, v) / den
    return float(out) if np.ndim(out) == 0 else out


def fbeta_coeffs(beta, p):
    """Coefficients of F-beta in terms of TPR/TNR for positive-class proportion p."""
    if not 0.0 < p < 1.0:
        raise DegeneratePriorError(f"class prior must lie in (0, 1), got {p}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    ratio = (1.0 - p) / p
    # denominator is smallest at TPR=0, TNR=1
    return PseudolinearCoeffs(a=(0.0, 1.0 + b2, 0.0), b=(b2 + ratio, 1.0, -ratio),
                              lower_bound_m=b2, upper_bound_M=1.0 + b2, fbeta=float(beta))


def valuation(c, u, v, level):
    """P_a - level * P_b: positive exactly when the measure exceeds ``level``."""
    if level < 0:
        raise ValueError("level must be non-negative")
    return c.numerator(u, v) - level * c.denominator(u, v)


def valuation_weights(c, level):
    """(constant, TPR weight, TNR weight) of the valuation at ``level``."""
    return (c.a[0] - level * c.b[0], c.a[1] - level * c.b[1], c.a[2] - level * c.b[2])


def fbeta_from_counts(tp, fn, fp, beta=1.0):
    """(1 + b^2) tp / ((1 + b^2) tp + b^2 fn + fp); 0 when that denominator is 0."""
    tp, fn, fp = (np.asarray(a, dtype=np.float64) for a in (tp, fn, fp))
    b2 = beta * beta
    den = (1 + b2) * tp + b2 * fn + fp
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, (1 + b2) * tp / np.where(den > 0, den, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


# KL divergence and its nested decomposition

EPSILON_LOG = 1e-12


def kld(p_true, p_est, epsilon_log=EPSILON_LOG, floor=True):
    """Natural-log KL divergence between two distributions on the 2-simplex."""
    p = np.asarray(p_true, dtype=np.float64)
    q = np.asarray(p_est, dtype=np.float64)
    if np.any(q <= 0) and not floor:
        raise DomainError("estimated prior has a zero component")
    q = np.maximum(q, epsilon_log)
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0) / q), 0.0)
    return float(np.sum(terms))


@dataclass(frozen=True)
class NestedMeasure:
    """-KLD(p, p_hat) = zeta1 + zeta2 with p_hat implied by (TPR, TNR).

    p_hat1 = p*u + (1-p)*(1-v) is the predicted-positive rate. Both pieces are
    concave in (u, v): each is a positive multiple of the log of an affine map.
    """

    p: float
    epsilon_log: float = EPSILON_LOG

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DegeneratePriorError(f"class prior must lie in (0, 1), got {self.p}")

    def estimated_priors(self, u, v):
        p = self.p
        return p * u + (1 - p) * (1 - v), p * (1 - u) + (1 - p) * v

    def floored(self, u, v):
        q1, q0 = self.estimated_priors(u, v)
        return bool(np.any(q1 < self.epsilon_log) or np.any(q0 < self.epsilon_log))

    def _q(self, u, v):
        q1, q0 = self.estimated_priors(u, v)
        if self.floored(u, v):
            log.debug("estimated prior below %g at (%s, %s); flooring", self.epsilon_log, u, v)
        return np.maximum(q1, self.epsilon_log), np.maximum(q0, self.epsilon_log)

    def zeta1(self, u, v):
        q1, _ = self._q(u, v)
        return self.p * np.log(q1 / self.p)

    def zeta2(self, u, v):
        _, q0 = self._q(u, v)
        return (1 - self.p) * np.log(q0 / (1 - self.p))

    def zeta1_grad(self, u, v):
        q1, _ = self._q(u, v)
        c = self.p / q1
        return c * self.p, -c * (1 - self.p)

    def zeta2_grad(self, u, v):
        _, q0 = self._q(u, v)
        c = (1 - self.p) / q0
        return -c * self.p, c * (1 - self.p)

    @staticmethod
    def psi(z1, z2):
        return z1 + z2

    @staticmethod
    def psi_grad(z1, z2):
        return 1.0, 1.0

    def value(self, u, v):
        return self.psi(self.zeta1(u, v), self.zeta2(u, v))


def neg_kld_nested(p):
    return NestedMeasure(float(p))


def nested_dual_steps(m, r, q):
    """Inner duals at the running rewards ``r`` and the outer dual at ``q``."""
    r = np.asarray(r, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    alpha = np.array(m.zeta1_grad(r[0], r[1]), dtype=np.float64)
    beta = np.array(m.zeta2_grad(r[0], r[1]), dtype=np.float64)
    gamma = np.array(m.psi_grad(q[0], q[1]), dtype=np.float64)
    return alpha, beta, gamma


# shared evaluation helpers


def measure_from_rates(measure, u, v):
    """Value of any supported measure at (TPR, TNR); KLD is reported as -KLD."""
    if isinstance(measure, ConcaveLink):
        return link_value(measure, u, v)
    if isinstance(measure, PseudolinearCoeffs):
        return pseudolinear_value(measure, u, v)
    if isinstance(measure, NestedMeasure):
        return float(measure.value(u, v))
    raise TypeError(f"unsupported measure {measure!r}")
