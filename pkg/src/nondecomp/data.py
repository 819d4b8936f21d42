"""Datasets: LIBSVM parsing, synthetic generators, splits, minibatches, drift."""
from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError(f"feature matrix {self.X.shape} does not match {len(self.y)} labels")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    def __len__(self):
        return len(self.y)

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def p_hat(self):
        return float(np.mean(self.y == 1)) if len(self.y) else 0.0

    @property
    def n_pos(self):
        return int(np.sum(self.y == 1))

    def subset(self, idx, name=None):
        return Dataset(self.X[idx], self.y[idx], name or self.name)


def _map_label(tok, lineno, positive_class):
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"bad label {tok!r}", lineno) from None
    if positive_class is not None:
        return 1.0 if val == float(positive_class) else -1.0
    if val in (1.0,):
        return 1.0
    if val in (0.0, -1.0):
        return -1.0
    raise ParseError(f"label {tok!r} is not binary; pass positive_class to binarize", lineno)


def parse_libsvm(stream, expected_dim=None, positive_class=None, name="libsvm"):
    """Read LIBSVM text into a dense Dataset.

    ``stream`` may be a file object or a string. Labels 0/-1 map to -1 and
    +1/1 to +1; other labels need ``positive_class``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, rows, max_idx = [], [], 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        labels.append(_map_label(toks[0], lineno, positive_class))
        row, prev = {}, 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"bad feature index {idx_s!r}", lineno) from None
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric value {val_s!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"feature indices are 1-based, got {idx}", lineno)
            if idx <= prev:
                kind = "duplicate" if idx == prev else "non-ascending"
                raise ParseError(f"{kind} feature index {idx}", lineno)
            if not np.isfinite(val):
                raise ParseError(f"non-finite value {val_s!r}", lineno)
            row[idx] = val
            prev = idx
        max_idx = max(max_idx, prev)
        rows.append(row)
    d = expected_dim if expected_dim is not None else max_idx
    if max_idx > d:
        raise ParseError(f"feature index {max_idx} exceeds expected dimension {d}")
    X = np.zeros((len(rows), d))
    for i, row in enumerate(rows):
        for idx, val in row.items():
            X[i, idx - 1] = val
    return Dataset(X, np.array(labels), name)


def load_libsvm(path, expected_dim=None, positive_class=None):
    """Parse a LIBSVM file. Relative paths fall back to $NONDECOMP_DATA_DIR."""
    p = Path(path)
    if not p.exists() and not p.is_absolute() and os.environ.get("NONDECOMP_DATA_DIR"):
        p = Path(os.environ["NONDECOMP_DATA_DIR"]) / p
    with open(p, encoding="utf-8") as fh:
        return parse_libsvm(fh, expected_dim, positive_class, name=p.stem)


def to_libsvm(ds):
    """Serialize to LIBSVM text; zero entries are omitted."""
    lines = []
    for x, y in zip(ds.X, ds.y):
        feats = " ".join(f"{j + 1}:{float(x[j])!r}" for j in np.flatnonzero(x))
        lines.append(f"{int(y):+d}" + (" " + feats if feats else ""))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 1000
    d: int = 2
    p: float = 0.1
    delta_mu: float = 3.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ConfigurationError("p must lie in (0, 1)")
        if self.n < 10:
            raise ConfigurationError("n must be at least 10")
        if self.d < 1 or not self.sigma > 0:
            raise ConfigurationError("d must be >= 1 and sigma > 0")


def gen_two_gaussians(spec):
    """Positives around +delta_mu * 1/sqrt(d), negatives around the mirror image."""
    n_pos = int(round(spec.n * spec.p))
    if n_pos in (0, spec.n):
        raise ConfigurationError(f"n={spec.n}, p={spec.p} leaves a class empty")
    rng = np.random.default_rng(spec.seed)
    mu = spec.delta_mu * np.ones(spec.d) / np.sqrt(spec.d)
    X = spec.sigma * rng.standard_normal((spec.n, spec.d))
    y = -np.ones(spec.n)
    y[:n_pos] = 1.0
    X[:n_pos] += mu
    X[n_pos:] -= mu
    order = rng.permutation(spec.n)
    return Dataset(X[order], y[order], f"gauss(p={spec.p},dmu={spec.delta_mu})")


def split(ds, train_fraction, seed, stratified=True):
    """Seeded train/test split. Stratified splits keep each class's share."""
    if not 0 < train_fraction < 1:
        raise ConfigurationError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    if stratified:
        train_idx, test_idx = [], []
        for cls in (1.0, -1.0):
            idx = rng.permutation(np.flatnonzero(ds.y == cls))
            k = int(round(len(idx) * train_fraction))
            train_idx.append(idx[:k])
            test_idx.append(idx[k:])
        train_idx = np.sort(np.concatenate(train_idx))
        test_idx = np.sort(np.concatenate(test_idx))
    else:
        perm = rng.permutation(len(ds))
        k = int(round(len(ds) * train_fraction))
        train_idx, test_idx = perm[:k], perm[k:]
    train, test = ds.subset(train_idx, ds.name + ":train"), ds.subset(test_idx, ds.name + ":test")
    for part in (train, test):
        if len(part) and part.n_pos in (0, len(part)):
            log.warning("split %s has only one class", part.name)
    return train, test


def _stratified_order(y, rng):
    pos = rng.permutation(np.flatnonzero(y == 1))
    neg = rng.permutation(np.flatnonzero(y != 1))
    # spread each class evenly over the epoch, then merge by position
    key = np.concatenate([(np.arange(len(pos)) + 0.5) / max(len(pos), 1),
                          (np.arange(len(neg)) + 0.5) / max(len(neg), 1)])
    idx = np.concatenate([pos, neg])
    return idx[np.argsort(key, kind="stable")]


def minibatch_stream(ds, b, seed, stratified=False):
    """Endless iterator of (X, y) minibatches, one seeded permutation per epoch.

    The short chunk at the end of an epoch is dropped.
    """
    if not 1 <= b <= len(ds):
        raise ConfigurationError(f"batch size {b} must lie in [1, {len(ds)}]")
    rng = np.random.default_rng(seed)
    per_epoch = len(ds) // b
    while True:
        order = _stratified_order(ds.y, rng) if stratified else rng.permutation(len(ds))
        for k in range(per_epoch):
            idx = order[k * b:(k + 1) * b]
            yield ds.X[idx], ds.y[idx]


def batches_per_epoch(ds, b):
    return len(ds) // b


@dataclass(frozen=True)
class DriftSpec:
    p_prime: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p_prime < 1:
            raise ConfigurationError("target positive fraction must lie in (0, 1)")


def drift_resample(test, spec):
    """Same-size resample with round(n * p') positives, both classes drawn with replacement."""
    pos = np.flatnonzero(test.y == 1)
    neg = np.flatnonzero(test.y != 1)
    if len(pos) == 0 or len(neg) == 0:
        raise ConfigurationError("drift resampling needs both classes")
    rng = np.random.default_rng(spec.seed)
    n = len(test)
    k = int(round(n * spec.p_prime))
    idx = np.concatenate([rng.choice(pos, size=k, replace=True),
                          rng.choice(neg, size=n - k, replace=True)])
    idx = idx[rng.permutation(n)]
    return test.subset(idx, f"{test.name}:drift({spec.p_prime})")


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)

    def apply(self, ds):
        return Dataset((ds.X - self.mean) * self.scale, ds.y.copy(), ds.name)


def normalize(train, test):
    """Standardize features with train statistics; zero-variance features become 0."""
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    scale = np.where(std > 0, 1.0 / np.where(std > 0, std, 1.0), 0.0)
    stats = NormStats(mean, scale)
    return stats.apply(train), stats.apply(test), stats
