"""Dense feed-forward networks in plain numpy.

A network maps a feature vector to a single raw score. Hidden layers use one
activation; the output layer has none. Everything runs in float64.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NonDifferentiableError, NumericError, ShapeError

ACTIVATIONS = ("relu", "tanh", "sigmoid")


def _act(kind, z):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return sigmoid(z)


def _act_grad(kind, z, a):
    # derivative wrt pre-activation z, given a = act(z)
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    layer_sizes: tuple
    hidden_activation: str = "relu"
    init_seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if int(self.input_dim) < 1:
            raise ConfigurationError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.layer_sizes:
            raise ConfigurationError("layer_sizes must be non-empty")
        if any(s < 1 for s in self.layer_sizes):
            raise ConfigurationError(f"layer sizes must be >= 1, got {self.layer_sizes}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.hidden_activation!r}")
        if not self.init_scale > 0:
            raise ConfigurationError("init_scale must be positive")

    @property
    def output_dim(self):
        return self.layer_sizes[-1]


@dataclass
class Model:
    """Per-layer weights (out x in) and biases, plus the config they came from."""

    weights: list
    biases: list
    config: NetworkConfig

    def params(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def copy(self):
        return Model([W.copy() for W in self.weights], [b.copy() for b in self.biases], self.config)

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params()])

    def with_flat(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        ws, bs, pos = [], [], 0
        for W, b in zip(self.weights, self.biases):
            ws.append(vec[pos:pos + W.size].reshape(W.shape).copy())
            pos += W.size
            bs.append(vec[pos:pos + b.size].reshape(b.shape).copy())
            pos += b.size
        if pos != vec.size:
            raise ShapeError(f"flat vector has {vec.size} entries, model needs {pos}")
        return Model(ws, bs, self.config)

    @property
    def n_params(self):
        return sum(p.size for p in self.params())


@dataclass
class GradientBuffer:
    """Gradient with the same layout as a Model."""

    weights: list
    biases: list

    @classmethod
    def zeros_like(cls, model):
        return cls([np.zeros_like(W) for W in model.weights], [np.zeros_like(b) for b in model.biases])

    def params(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params()])

    def norm(self):
        return float(np.sqrt(sum(float(np.sum(p * p)) for p in self.params())))

    def scaled(self, c):
        return GradientBuffer([c * W for W in self.weights], [c * b for b in self.biases])

    def __add__(self, other):
        return GradientBuffer([a + b for a, b in zip(self.weights, other.weights)],
                              [a + b for a, b in zip(self.biases, other.biases)])

    def is_finite(self):
        return all(np.all(np.isfinite(p)) for p in self.params())


def nn_init(config):
    """Uniform(-s, s) weights with s = init_scale / sqrt(fan_in); zero biases."""
    rng = np.random.default_rng(config.init_seed)
    weights, biases = [], []
    fan_in = config.input_dim
    for width in config.layer_sizes:
        s = config.init_scale / np.sqrt(fan_in)
        weights.append(rng.uniform(-s, s, size=(width, fan_in)))
        biases.append(np.zeros(width))
        fan_in = width
    return Model(weights, biases, config)


def _as_batch(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.config.input_dim:
        raise ShapeError(f"expected inputs with {model.config.input_dim} features, got shape {X.shape}")
    return X


def forward(model, X):
    """Scores for a batch, plus the cache needed by :func:`backward`.

    Returns an (n,) array when the output dimension is 1, else (n, d_out).
    """
    X = _as_batch(model, X)
    kind = model.config.hidden_activation
    acts, pre = [X], []
    h = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W.T + b
        pre.append(z)
        h = z if i == last else _act(kind, z)
        acts.append(h)
    out = h[:, 0] if h.shape[1] == 1 else h
    return out, (acts, pre)


def scores(model, X):
    return forward(model, X)[0]


def score(model, x):
    """f(x; w) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"score expects one feature vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite feature value")
    out = scores(model, x)
    return float(out[0]) if out.ndim == 1 else out[0]


def backward(model, cache, dout):
    """Backpropagate d(objective)/d(score) through the network.

    The batch reduction happens inside the matrix products, in a fixed order.
    """
    acts, pre = cache
    kind = model.config.hidden_activation
    dz = np.asarray(dout, dtype=np.float64)
    if dz.ndim == 1:
        dz = dz[:, None]
    n_layers = len(model.weights)
    gw, gb = [None] * n_layers, [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        gw[i] = dz.T @ acts[i]
        gb[i] = dz.sum(axis=0)
        if i > 0:
            da = dz @ model.weights[i]
            dz = da * _act_grad(kind, pre[i - 1], acts[i])
    return GradientBuffer(gw, gb)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def backward_weighted_rewards(model, X, y, coef, reward_kind="sigmoid"):
    """Gradient of sum_i coef_i * r(f(x_i; w), y_i) for the sigmoid reward."""
    if getattr(reward_kind, "value", reward_kind) != "sigmoid":
        raise NonDifferentiableError(f"reward {reward_kind!s} has no gradient; use sigmoid")
    y = np.asarray(y, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    s, cache = forward(model, X)
    if len(s) == 0:
        raise ShapeError("empty batch")
    if y.shape != s.shape or coef.shape != s.shape:
        raise ShapeError("labels, coefficients and batch must have the same length")
    r = sigmoid(y * s)
    # d/ds sigmoid(y s) = y r (1 - r)
    g = backward(model, cache, coef * y * r * (1.0 - r))
    if not g.is_finite():
        raise NumericError("non-finite reward gradient")
    return g


def grad_check(model, objective, h=1e-5):
    """Max relative error between an analytic gradient and central differences.

    ``objective(model) -> (value, GradientBuffer)``. The error per coordinate is
    |analytic - numeric| / max(1, |analytic|).
    """
    if not h > 0:
        raise ConfigurationError("h must be positive")
    value, grad = objective(model)
    if not np.isfinite(value):
        raise NumericError("objective is not finite at the base point")
    w = model.flat()
    analytic = grad.flat()
    worst = 0.0
    for k in range(w.size):
        wp = w.copy()
        wp[k] += h
        fp = objective(model.with_flat(wp))[0]
        wp[k] -= 2 * h
        fm = objective(model.with_flat(wp))[0]
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"objective is not finite after perturbing coordinate {k}")
        numeric = (fp - fm) / (2 * h)
        err = abs(analytic[k] - numeric) / max(1.0, abs(analytic[k]))
        worst = max(worst, err)
    return worst


@dataclass
class OptStepper:
    kind: str = "constant_sgd"
    eta: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default=None, repr=False)
    v: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("constant_sgd", "adam"):
            raise ConfigurationError(f"unknown stepper {self.kind!r}")
        if not self.eta > 0:
            raise ConfigurationError("step size must be positive")


def step(stepper, model, grad, direction="ascent"):
    """One optimizer step; returns a new Model and advances the stepper's counter."""
    if direction not in ("ascent", "descent"):
        raise ConfigurationError(f"direction must be ascent or descent, got {direction!r}")
    gparams = grad.params()
    mparams = model.params()
    if len(gparams) != len(mparams) or any(g.shape != p.shape for g, p in zip(gparams, mparams)):
        raise ShapeError("gradient does not match model shapes")
    stepper.t += 1
    if not grad.is_finite():
        raise NumericError("non-finite gradient", iteration=stepper.t)
    sign = 1.0 if direction == "ascent" else -1.0
    if stepper.kind == "constant_sgd":
        new = [p + sign * stepper.eta * g for p, g in zip(mparams, gparams)]
    else:
        if stepper.m is None:
            stepper.m = [np.zeros_like(p) for p in mparams]
            stepper.v = [np.zeros_like(p) for p in mparams]
        b1, b2 = stepper.beta1, stepper.beta2
        c1 = 1.0 - b1 ** stepper.t
        c2 = 1.0 - b2 ** stepper.t
        new = []
        for i, (p, g) in enumerate(zip(mparams, gparams)):
            stepper.m[i] = b1 * stepper.m[i] + (1 - b1) * g
            stepper.v[i] = b2 * stepper.v[i] + (1 - b2) * g * g
            upd = (stepper.m[i] / c1) / (np.sqrt(stepper.v[i] / c2) + stepper.eps)
            new.append(p + sign * stepper.eta * upd)
    return Model(new[0::2], new[1::2], model.config)


def stack(lower, upper, config=None):
    """Concatenate two networks: the lower output goes through the hidden activation."""
    if lower.config.output_dim != upper.config.input_dim:
        raise ShapeError("lower output dim must equal upper input dim")
    if config is None:
        config = NetworkConfig(lower.config.input_dim,
                               lower.config.layer_sizes + upper.config.layer_sizes,
                               lower.config.hidden_activation,
                               lower.config.init_seed, lower.config.init_scale)
    return Model([W.copy() for W in lower.weights + upper.weights],
                 [b.copy() for b in lower.biases + upper.biases], config)


def split(model, n_lower):
    """Inverse of :func:`stack`: the first ``n_lower`` layers and the rest."""
    cfg = model.config
    sizes = cfg.layer_sizes
    if not 1 <= n_lower < len(sizes):
        raise ConfigurationError("split point must leave at least one layer on each side")
    lower_cfg = NetworkConfig(cfg.input_dim, sizes[:n_lower], cfg.hidden_activation,
                              cfg.init_seed, cfg.init_scale)
    upper_cfg = NetworkConfig(sizes[n_lower - 1], sizes[n_lower:], cfg.hidden_activation,
                              cfg.init_seed, cfg.init_scale)
    lower = Model([W.copy() for W in model.weights[:n_lower]],
                  [b.copy() for b in model.biases[:n_lower]], lower_cfg)
    upper = Model([W.copy() for W in model.weights[n_lower:]],
                  [b.copy() for b in model.biases[n_lower:]], upper_cfg)
    return lower, upper


def features(lower, X):
    """Activated output of a lower network, used as inputs to the upper one."""
    return _act(lower.config.hidden_activation, forward(lower, X)[0].reshape(len(np.atleast_2d(X)), -1))
