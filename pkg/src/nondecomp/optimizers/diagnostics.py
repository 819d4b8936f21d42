"""Gradient-norm diagnostics for how quickly a run settles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class StabilityReport:
    epsilon: float
    first_hit: int | None  # 1-based iteration with norm <= epsilon
    running_min: np.ndarray
    first_decile_min: float
    last_decile_min: float
    decile_ratio: float
    stabilizing: bool


def stability_report(trace, epsilon):
    """Summarize the per-iteration gradient norms of a trace.

    ``trace`` is a TrainTrace or a plain sequence of norms. The decile ratio is
    (min over the last tenth) / (min over the first tenth); a run counts as
    stabilizing when that ratio is below 1 or the norms are already zero.
    """
    norms = np.asarray(getattr(trace, "grad_norms", trace), dtype=np.float64)
    if norms.size == 0:
        raise ValueError("trace has no gradient norms")
    hits = np.flatnonzero(norms <= epsilon)
    k = max(1, norms.size // 10)
    first, last = float(norms[:k].min()), float(norms[-k:].min())
    if first > 0:
        ratio = last / first
    else:
        ratio = 0.0 if last == 0 else np.inf
    return StabilityReport(
        epsilon=float(epsilon),
        first_hit=int(hits[0]) + 1 if hits.size else None,
        running_min=np.minimum.accumulate(norms),
        first_decile_min=first,
        last_decile_min=last,
        decile_ratio=float(ratio),
        stabilizing=bool(ratio < 1.0 or (first == 0 and last == 0)),
    )
