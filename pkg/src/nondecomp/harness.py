"""Experiment runner: configs, algorithm dispatch, trace CSV, summary JSON and SVG plots."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import jsonschema
import matplotlib
import numpy as np

from . import __version__
from .data import DriftSpec, Dataset, SyntheticSpec, drift_resample, gen_two_gaussians, load_libsvm
from .data import normalize as normalize_data
from .data import split as split_data
from .errors import ConfigurationError, UsageError
from .measures import ConcaveLink, NestedMeasure, fbeta_coeffs, neg_kld_nested
from .netcore import NetworkConfig, scores
from .optimizers import (CSV_COLUMNS, TrainConfig, TrainingAborted, ce_train, damp_net, damp_train,
                         dnemsis_train, dspade_train, evaluate, plugin_tune, struct_ann_train)

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)

ALGORITHMS = ("dspade", "dnemsis", "damp", "ce", "plugin", "structann")
MEASURES = {"min": "min_tpr_tnr", "min_tpr_tnr": "min_tpr_tnr", "q_mean": "q_mean",
            "qmean": "q_mean", "fbeta": "fbeta", "f1": "fbeta", "kld": "kld"}
# which measure families each algorithm accepts
COMPATIBLE = {
    "dspade": ("min_tpr_tnr", "q_mean"),
    "dnemsis": ("kld",),
    "damp": ("fbeta",),
    "plugin": ("fbeta",),
    "ce": ("min_tpr_tnr", "q_mean", "fbeta", "kld"),
    "structann": ("min_tpr_tnr", "q_mean", "fbeta", "kld"),
}
# keys that must agree for runs to share a dataset
DATA_KEYS = ("data", "test_data", "positive_class", "synth_n", "synth_d", "synth_p",
             "synth_delta_mu", "synth_sigma", "synth_seed", "train_fraction",
             "stratified_split", "normalize")
SCHEMA_VERSION = 1


def _num_or_null(minimum=None):
    s = {"type": "number"}
    if minimum is not None:
        s["minimum"] = minimum
    return {"anyOf": [s, {"type": "null"}]}


SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "nondecomp run summary",
    "type": "object",
    "required": ["schema_version", "version", "status", "algorithm", "measure", "metric",
                 "lower_is_better", "final_train_metric", "final_test_metric",
                 "best_test_metric", "best_iter", "samples", "wall_time_s", "epsilon",
                 "first_stable_iter", "rows", "threshold", "config"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "version": {"type": "string"},
        "status": {"enum": ["ok", "aborted"]},
        "error": {"type": ["string", "null"]},
        "algorithm": {"enum": list(ALGORITHMS)},
        "measure": {"type": "string"},
        "metric": {"type": "string"},
        "lower_is_better": {"type": "boolean"},
        "final_train_metric": _num_or_null(),
        "final_test_metric": _num_or_null(),
        "best_test_metric": _num_or_null(),
        "best_iter": {"type": ["integer", "null"]},
        "samples": {"type": "integer", "minimum": 0},
        "warm_start_samples": {"type": "integer", "minimum": 0},
        "wall_time_s": {"type": "number", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "first_stable_iter": {"type": ["integer", "null"]},
        "rows": {"type": "integer", "minimum": 0},
        "threshold": {"type": "number"},
        "config": {"type": "object"},
    },
    "additionalProperties": False,
}


def _float_list(v):
    if isinstance(v, str):
        v = [t for t in v.split(",") if t.strip()]
    return tuple(float(t) for t in v)


def _int_list(v):
    if isinstance(v, str):
        v = [t for t in v.split(",") if t.strip()]
    return tuple(int(t) for t in v)


def _opt(kind):
    def conv(v):
        if v is None or (isinstance(v, str) and v.lower() in ("", "none", "null")):
            return None
        return kind(v)
    return conv


def _bool(v):
    if isinstance(v, str):
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {v!r}")
    return bool(v)


def _key(conv, help_text, **kw):
    return field(metadata={"conv": conv, "help": help_text}, **kw)


@dataclass
class ExperimentConfig:
    """One experiment. Every key can come from TOML or a CLI flag of the same name."""

    seed: int | None = _key(_opt(int), "master seed (required)", default=None)
    algo: str = _key(str, "|".join(ALGORITHMS), default="dspade")
    measure: str = _key(str, "min | q_mean | fbeta | kld", default="min")
    beta: float = _key(float, "beta for fbeta", default=1.0)
    # data
    data: str | None = _key(_opt(str), "LIBSVM training file (else synthetic)", default=None)
    test_data: str | None = _key(_opt(str), "LIBSVM test file (else split)", default=None)
    positive_class: str | None = _key(_opt(str), "label mapped to +1", default=None)
    synth_n: int = _key(int, "synthetic sample count", default=4000)
    synth_d: int = _key(int, "synthetic dimension", default=2)
    synth_p: float = _key(float, "synthetic positive fraction", default=0.1)
    synth_delta_mu: float = _key(float, "synthetic mean separation", default=3.0)
    synth_sigma: float = _key(float, "synthetic noise scale", default=1.0)
    synth_seed: int = _key(int, "synthetic data seed", default=0)
    train_fraction: float = _key(float, "train share of the split", default=0.75)
    split_seed: int | None = _key(_opt(int), "split seed (default seed + 2)", default=None)
    stratified_split: bool = _key(_bool, "keep class shares in the split", default=True)
    normalize: bool = _key(_bool, "standardize with train statistics", default=False)
    # network
    hidden: tuple = _key(_int_list, "hidden layer sizes", default=(16,))
    activation: str = _key(str, "relu | tanh | sigmoid", default="relu")
    init_scale: float = _key(float, "uniform init scale", default=1.0)
    d_int: int = _key(int, "damp: width of the frozen feature layer", default=8)
    upper_hidden: tuple = _key(_int_list, "damp: hidden sizes above the split", default=())
    # training
    stepper: str = _key(str, "constant_sgd | adam", default="constant_sgd")
    eta: float = _key(float, "step size", default=0.1)
    batch: int = _key(int, "minibatch size", default=64)
    iters: int = _key(int, "iterations (outer iterations for damp)", default=500)
    inner_iters: int = _key(int, "damp inner steps per level", default=5)
    dual_reward: str = _key(str, "sigmoid | zero_one for dual statistics", default="sigmoid")
    eval_every: int = _key(int, "evaluation cadence", default=10)
    stratified: bool = _key(_bool, "class-balanced minibatch order", default=False)
    prior: float | None = _key(_opt(float), "fixed class prior (default: train share)", default=None)
    pretrain_epochs: int = _key(int, "damp cross-entropy pretraining epochs", default=5)
    full_batch: bool = _key(_bool, "damp: use the whole train set per step", default=False)
    struct_c: float = _key(float, "structann loss weight", default=1.0)
    warm_start_iters: int = _key(int, "cross-entropy steps before dspade/dnemsis/structann",
                                 default=0)
    val_fraction: float = _key(float, "plugin: validation share of train", default=0.2)
    # reporting
    epsilon: float = _key(float, "gradient norm for the stability report", default=0.1)
    x_axis: str = _key(str, "iter | samples", default="iter")
    wall_clock: bool = _key(_bool, "fill wall_ms in trace.csv (breaks byte-identity)",
                            default=False)
    drift_grid: tuple = _key(_float_list, "drift target priors",
                             default=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9))
    drift_seed: int | None = _key(_opt(int), "drift resampling seed (default seed + 3)",
                                  default=None)
    out: str = _key(str, "output directory", default="runs/experiment")

    @classmethod
    def from_mapping(cls, d):
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for k, v in d.items():
            name = k.replace("-", "_")
            if name not in known:
                raise UsageError(f"unknown config key {k!r}")
            try:
                kwargs[name] = known[name].metadata["conv"](v)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {k!r}: {exc}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def updated(self, **overrides):
        merged = {k: v for k, v in asdict(self).items()}
        merged.update(overrides)
        return ExperimentConfig.from_mapping(merged)

    @property
    def measure_id(self):
        return MEASURES.get(self.measure.lower())

    def validate(self):
        if self.seed is None:
            raise UsageError("a seed is required")
        if self.algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algo!r}; choose from {ALGORITHMS}")
        if self.measure_id is None:
            raise UsageError(f"unknown measure {self.measure!r}")
        if self.measure_id not in COMPATIBLE[self.algo]:
            raise UsageError(f"{self.algo} cannot optimize {self.measure}; it takes "
                             f"{', '.join(COMPATIBLE[self.algo])}")
        if self.x_axis not in ("iter", "samples"):
            raise UsageError("x_axis must be iter or samples")
        if not 0 < self.val_fraction < 1:
            raise UsageError("val_fraction must lie in (0, 1)")
        if self.warm_start_iters < 0:
            raise UsageError("warm_start_iters must be >= 0")
        if not self.epsilon > 0:
            raise UsageError("epsilon must be positive")
        if any(not 0 < p < 1 for p in self.drift_grid):
            raise UsageError("drift priors must lie in (0, 1)")
        try:
            self.train_config()
        except (ConfigurationError, ValueError) as exc:
            raise UsageError(str(exc)) from None

    def train_config(self):
        return TrainConfig(stepper=self.stepper, eta=self.eta, batch_size=self.batch,
                           iters=self.iters, inner_iters=self.inner_iters,
                           dual_reward=self.dual_reward, seed=self.seed + 1,
                           eval_every=self.eval_every, stratified=self.stratified,
                           prior=self.prior, pretrain_epochs=self.pretrain_epochs,
                           full_batch=self.full_batch, struct_C=self.struct_c)

    def resolved_split_seed(self):
        return self.seed + 2 if self.split_seed is None else self.split_seed

    def resolved_drift_seed(self):
        return self.seed + 3 if self.drift_seed is None else self.drift_seed

    def data_key(self):
        return tuple(getattr(self, k) for k in DATA_KEYS) + (self.resolved_split_seed(),)

    def echo(self):
        out = {}
        for k, v in asdict(self).items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def load_config(path, overrides=None):
    """TOML file plus flag overrides; keys are the ExperimentConfig field names."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    raw.update(overrides or {})
    return ExperimentConfig.from_mapping(raw)


# pipeline


def load_datasets(cfg):
    """(train, test) for a config: LIBSVM files or the synthetic generator, then split."""
    if cfg.data:
        full = load_libsvm(cfg.data, positive_class=cfg.positive_class)
        if cfg.test_data:
            test = load_libsvm(cfg.test_data, positive_class=cfg.positive_class)
            d = max(full.d, test.d)
            train, test = _pad(full, d), _pad(test, d)
        else:
            train, test = split_data(full, cfg.train_fraction, cfg.resolved_split_seed(),
                                     cfg.stratified_split)
    else:
        spec = SyntheticSpec(n=cfg.synth_n, d=cfg.synth_d, p=cfg.synth_p,
                             delta_mu=cfg.synth_delta_mu, sigma=cfg.synth_sigma,
                             seed=cfg.synth_seed)
        train, test = split_data(gen_two_gaussians(spec), cfg.train_fraction,
                                 cfg.resolved_split_seed(), cfg.stratified_split)
    if cfg.normalize:
        train, test, _ = normalize_data(train, test)
    if train.n_pos in (0, len(train)):
        raise UsageError("training data has a single class")
    return train, test


def _pad(ds, d):
    if ds.d == d:
        return ds
    X = np.zeros((len(ds), d))
    X[:, :ds.d] = ds.X
    return Dataset(X, ds.y, ds.name)


def build_measure(cfg, p):
    mid = cfg.measure_id
    if mid in ("min_tpr_tnr", "q_mean"):
        return ConcaveLink(mid)
    if mid == "fbeta":
        return fbeta_coeffs(cfg.beta, p)
    return neg_kld_nested(p)


def lower_is_better(measure):
    return isinstance(measure, NestedMeasure)


@dataclass
class TrainedScorer:
    """Scores plus the decision threshold of a trained classifier."""

    score_fn: object
    threshold: float = 0.0

    def __call__(self, X):
        return self.score_fn(X)


def train_algorithm(cfg, train, test, measure):
    """Dispatch to the trainer for ``cfg.algo``; returns (TrainedScorer, trace, warm samples)."""
    tc = cfg.train_config()
    net = NetworkConfig(train.d, tuple(cfg.hidden) + (1,), cfg.activation, cfg.seed,
                        cfg.init_scale)
    warm, warm_samples = None, 0
    if cfg.warm_start_iters and cfg.algo in ("dspade", "dnemsis", "structann"):
        wcfg = replace(tc, iters=cfg.warm_start_iters, eval_every=cfg.warm_start_iters)
        warm, _ = ce_train(train, net, wcfg)
        warm_samples = cfg.warm_start_iters * tc.batch_size
    if cfg.algo == "dspade":
        model, trace = dspade_train(train, net, measure, tc, test, init_model=warm)
    elif cfg.algo == "dnemsis":
        model, trace = dnemsis_train(train, net, measure, tc, test, init_model=warm)
    elif cfg.algo == "structann":
        model, trace = struct_ann_train(train, net, measure, tc, test, init_model=warm)
    elif cfg.algo == "ce":
        model, trace = ce_train(train, net, tc, test, measure=measure)
    elif cfg.algo == "plugin":
        fit, val = split_data(train, 1.0 - cfg.val_fraction, cfg.resolved_split_seed() + 1,
                              stratified=True)
        model, trace = ce_train(fit, net, tc, test, measure=measure, algorithm="plugin",
                                threshold_fn=lambda m: plugin_tune(m, val, measure))
        th = plugin_tune(model, val, measure)
        trace.meta.update(threshold=th)
        return TrainedScorer(lambda X: scores(model, X), th), trace, 0
    else:
        dnet, n_lower = damp_net(train.d, cfg.hidden, cfg.d_int, cfg.upper_hidden,
                                 cfg.activation, cfg.seed)
        dsplit, trace = damp_train(train, dnet, n_lower, measure, tc, test)
        warm_samples = trace.meta.get("pretrain_samples", 0)
        return TrainedScorer(dsplit.scores), trace, warm_samples
    return TrainedScorer(lambda X: scores(model, X)), trace, warm_samples


# files


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_csv(trace, wall_clock=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in trace.records:
        row = rec.as_dict()
        if not wall_clock:
            row["wall_ms"] = None
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_trace_csv(path):
    """Rows of a trace CSV as dicts of floats (None for blanks)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else None) for k, v in r.items()} for r in rows]


def write_atomic(path, data):
    """Write text or bytes to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    kw = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": ""}
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name + ".")
    try:
        with os.fdopen(fd, mode, **kw) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def plot_svg(series, xlabel, ylabel, title):
    """SVG text with one polyline per labelled (x, y) series. Fonts become paths."""
    with plt.rc_context({"svg.hashsalt": "nondecomp", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, (x, y) in series.items():
            x = np.asarray(x, dtype=float)
            y = np.asarray([np.nan if v is None else v for v in y], dtype=float)
            ax.plot(x, y, label=label, linewidth=1.5)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        if series:
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


# summaries


@dataclass
class RunSummary:
    status: str
    algorithm: str
    measure: str
    metric: str
    lower_is_better: bool
    final_train_metric: float | None
    final_test_metric: float | None
    best_test_metric: float | None
    best_iter: int | None
    samples: int
    wall_time_s: float
    epsilon: float
    first_stable_iter: int | None
    rows: int
    threshold: float
    config: dict
    warm_start_samples: int = 0
    error: str | None = None
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def as_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def summarize_rows(rows, lower, epsilon):
    """Summary quantities recomputed from trace rows."""
    out = {"final_train_metric": None, "final_test_metric": None, "best_test_metric": None,
           "best_iter": None, "samples": 0, "first_stable_iter": None, "rows": len(rows)}
    if not rows:
        return out
    last = rows[-1]
    out["final_train_metric"] = last["train_metric"]
    out["final_test_metric"] = last["test_metric"]
    out["samples"] = int(last["samples"])
    tested = [r for r in rows if r["test_metric"] is not None]
    if tested:
        pick = min if lower else max
        best = pick(tested, key=lambda r: r["test_metric"])
        out["best_test_metric"] = best["test_metric"]
        out["best_iter"] = int(best["iter"])
    for r in rows:
        if r["grad_norm"] is not None and r["grad_norm"] <= epsilon:
            out["first_stable_iter"] = int(r["iter"])
            break
    return out


def _rows_of(trace):
    return [{c: getattr(rec, c) for c in CSV_COLUMNS} for rec in trace.records]


def validate_summary(doc):
    jsonschema.validate(doc, SUMMARY_SCHEMA)


def run(cfg):
    """Train one configuration and write trace.csv, summary.json and plot.svg under cfg.out.

    A run that hits non-finite values still writes its partial trace and an
    "aborted" summary, then re-raises TrainingAborted.
    """
    return _execute(cfg)[0]


def _execute(cfg, data=None):
    cfg.validate()
    out = Path(cfg.out)
    train, test = data if data is not None else load_datasets(cfg)
    measure = build_measure(cfg, cfg.prior if cfg.prior is not None else train.p_hat)
    t0 = time.perf_counter()
    status, error, threshold, warm, scorer = "ok", None, 0.0, 0, None
    try:
        scorer, trace, warm = train_algorithm(cfg, train, test, measure)
        threshold = scorer.threshold
    except TrainingAborted as exc:
        status, error, trace = "aborted", str(exc), exc.trace
    wall = time.perf_counter() - t0
    summary = RunSummary(status=status, algorithm=cfg.algo, measure=cfg.measure_id,
                         metric=trace.metric_name, lower_is_better=lower_is_better(measure),
                         wall_time_s=round(wall, 6), epsilon=cfg.epsilon, threshold=threshold,
                         config=cfg.echo(), warm_start_samples=int(warm), error=error,
                         **summarize_rows(_rows_of(trace), lower_is_better(measure), cfg.epsilon))
    write_atomic(out / "trace.csv", trace_csv(trace, cfg.wall_clock))
    validate_summary(json.loads(summary.as_json()))
    write_atomic(out / "summary.json", summary.as_json())
    if status != "ok":
        log.error("run aborted: %s", error)
        raise TrainingAborted(error, None, trace)
    xs = [getattr(r, cfg.x_axis) for r in trace.records]
    series = {f"{cfg.algo} (test)": (xs, [r.test_metric for r in trace.records]),
              f"{cfg.algo} (train)": (xs, [r.train_metric for r in trace.records])}
    write_atomic(out / "plot.svg", plot_svg(series, _xlabel(cfg.x_axis), trace.metric_name,
                                            f"{cfg.algo} on {trace.metric_name}"))
    log.info("run %s/%s finished: test %s", cfg.algo, cfg.measure_id, summary.final_test_metric)
    return summary, scorer, measure


def _xlabel(axis):
    return "minibatch iterations" if axis == "iter" else "training samples"


def _labels(cfgs):
    names = [c.algo for c in cfgs]
    out = []
    for i, (c, n) in enumerate(zip(cfgs, names)):
        out.append(n if names.count(n) == 1 else f"{n}-{i + 1}")
    return out


def compare(cfgs, out):
    """Run several configs on one dataset; write per-run folders, plot.svg and table.csv."""
    cfgs = list(cfgs)
    if not cfgs:
        raise UsageError("compare needs at least one config")
    if len({c.data_key() for c in cfgs}) > 1:
        raise UsageError("compared configs must share the dataset, split and seed")
    if len({c.eval_every for c in cfgs}) > 1:
        raise UsageError("compared configs must share the evaluation cadence")
    if len({c.x_axis for c in cfgs}) > 1:
        raise UsageError("compared configs must share the x axis")
    out = Path(out)
    labels = _labels(cfgs)
    summaries, series = [], {}
    axis = cfgs[0].x_axis
    for label, c in zip(labels, cfgs):
        s = run(c.updated(out=str(out / label)))
        summaries.append(s)
        rows = read_trace_csv(out / label / "trace.csv")
        series[label] = ([r[axis] for r in rows], [r["test_metric"] for r in rows])
    xs = sorted({x for xv, _ in series.values() for x in xv})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis] + labels)
    lookup = {lab: dict(zip(*series[lab])) for lab in labels}
    for x in xs:
        w.writerow([_fmt(int(x))] + [_fmt(lookup[lab].get(x)) for lab in labels])
    write_atomic(out / "table.csv", buf.getvalue())
    metrics = sorted({s.metric for s in summaries})
    write_atomic(out / "plot.svg", plot_svg(series, _xlabel(axis), ", ".join(metrics) + " (test)",
                                            "comparison"))
    return summaries


def drift_study(cfgs, out, grid=None):
    """KLD of each trained model on test resamples with positive share p' for p' in ``grid``.

    Writes drift.csv (one row per p') and drift.svg. All configs must use kld.
    """
    if isinstance(cfgs, ExperimentConfig):
        cfgs = [cfgs]
    cfgs = list(cfgs)
    if not cfgs:
        raise UsageError("drift needs at least one config")
    for c in cfgs:
        if c.measure_id != "kld":
            raise UsageError("drift studies need measure = kld")
    if len({c.data_key() for c in cfgs}) > 1:
        raise UsageError("drift configs must share the dataset, split and seed")
    grid = tuple(grid if grid is not None else cfgs[0].drift_grid)
    if not grid or any(not 0 < p < 1 for p in grid):
        raise UsageError("drift priors must lie in (0, 1)")
    out = Path(out)
    labels = _labels(cfgs)
    train, test = load_datasets(cfgs[0])
    resamples = [drift_resample(test, DriftSpec(p, cfgs[0].resolved_drift_seed() + i))
                 for i, p in enumerate(grid)]
    table = {}
    for label, c in zip(labels, cfgs):
        s, scorer, measure = _execute(c.updated(out=str(out / label)), (train, test))
        table[label] = []
        for ds in resamples:
            sc = scorer(ds.X)
            table[label].append((evaluate(measure, sc, ds.y, scorer.threshold),
                                 float(np.mean(sc > scorer.threshold))))
        log.info("drift %s: trained test metric %s", label, s.final_test_metric)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p_prime", "true_p"] + [f"{lab}_{k}" for lab in labels for k in ("kld", "p_est")])
    for i, (p, ds) in enumerate(zip(grid, resamples)):
        row = [_fmt(p), _fmt(ds.p_hat)]
        for lab in labels:
            row += [_fmt(table[lab][i][0]), _fmt(table[lab][i][1])]
        w.writerow(row)
    write_atomic(out / "drift.csv", buf.getvalue())
    series = {lab: (grid, [v[0] for v in table[lab]]) for lab in labels}
    write_atomic(out / "drift.svg", plot_svg(series, "test positive share p'", "KLD",
                                             "quantification under prior drift"))
    return {lab: [v[0] for v in table[lab]] for lab in labels}
