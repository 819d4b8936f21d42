import numpy as np
import pytest

from nondecomp.data import Dataset
from nondecomp.netcore import NetworkConfig, nn_init


def random_net(rng, d_in=None, depth=None, activation=None, output_dim=1):
    """Small random network: at most 3 layers and 16 units per layer."""
    d_in = d_in or int(rng.integers(1, 6))
    depth = depth or int(rng.integers(1, 4))
    hidden = tuple(int(rng.integers(1, 17)) for _ in range(depth - 1))
    act = activation or str(rng.choice(["relu", "tanh", "sigmoid"]))
    cfg = NetworkConfig(d_in, hidden + (output_dim,), act, int(rng.integers(0, 2**31)))
    model = nn_init(cfg)
    # non-zero biases so relu kinks are rarely hit exactly
    model = model.with_flat(model.flat() + 0.1 * rng.standard_normal(model.n_params))
    return model


def random_batch(rng, d, n=None, both_classes=True):
    n = n or int(rng.integers(2, 12))
    X = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.4, 1.0, -1.0)
    if both_classes:
        y[0], y[-1] = 1.0, -1.0
    return X, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def six_points():
    # scores and labels with two mistakes at threshold 0
    s = np.array([2.0, 1.0, -0.5, 0.7, -1.5, -2.0])
    y = np.array([1, 1, 1, -1, -1, -1], dtype=float)
    return s, y


@pytest.fixture
def separable():
    X = np.array([[2.0, 0.0], [1.5, 0.5], [3.0, 1.0], [-2.0, 0.0], [-1.0, -1.0], [-2.5, 0.5]])
    y = np.array([1, 1, 1, -1, -1, -1], dtype=float)
    return Dataset(X, y, "separable")
