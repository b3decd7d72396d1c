"""Evaluation protocol: splits, metrics, cross-validation, statistics, temporal tests."""
from .metrics import (
    CVResult,
    EvalError,
    MetricsReport,
    SplitPlan,
    compute_metrics,
    cross_validate,
    fpr_at_full_tpr,
    make_splits,
    predict_labels,
    split_counts,
    stratified_folds,
)
from .stats import StatsError, TTestResult, betainc, t_two_sided_p, welch_ttest
from .temporal import (
    GapStats,
    TemporalResult,
    er_featurizer,
    temporal_harness,
    tfidf_featurizer,
    year_pairs,
)

__all__ = [
    "CVResult", "EvalError", "MetricsReport", "SplitPlan", "compute_metrics", "cross_validate",
    "fpr_at_full_tpr", "make_splits", "predict_labels", "split_counts", "stratified_folds",
    "StatsError", "TTestResult", "betainc", "t_two_sided_p", "welch_ttest", "GapStats",
    "TemporalResult", "er_featurizer", "temporal_harness", "tfidf_featurizer", "year_pairs",
]
