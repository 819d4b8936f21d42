"""Training algorithms for non-decomposable measures, baselines and diagnostics."""
from .baselines import candidate_thresholds, ce_train, plugin_tune, tune_threshold
from .common import (CSV_COLUMNS, TraceRecord, TrainConfig, TrainingAborted, TrainTrace,
                     augmented_objective, counts_metric, cross_entropy_objective, evaluate,
                     metric_name, nested_objective, valuation_objective)
from .damp import DampSplit, damp_net, damp_train
from .diagnostics import StabilityReport, stability_report
from .dnemsis import dnemsis_train
from .dspade import dspade_train
from .structured import (delta_from_measure, labeling_objective, most_violated_labeling,
                         struct_ann_train, structured_objective)

__all__ = [
    "candidate_thresholds",
    "ce_train",
    "plugin_tune",
    "tune_threshold",
    "CSV_COLUMNS",
    "TraceRecord",
    "TrainConfig",
    "TrainingAborted",
    "TrainTrace",
    "augmented_objective",
    "counts_metric",
    "cross_entropy_objective",
    "evaluate",
    "metric_name",
    "nested_objective",
    "valuation_objective",
    "DampSplit",
    "damp_net",
    "damp_train",
    "StabilityReport",
    "stability_report",
    "dnemsis_train",
    "dspade_train",
    "delta_from_measure",
    "labeling_objective",
    "most_violated_labeling",
    "struct_ann_train",
    "structured_objective",
]
