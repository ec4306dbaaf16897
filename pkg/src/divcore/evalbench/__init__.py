"""Offline oracles, composability evaluation and the timing bench."""

from .oracles import (
    EXHAUSTIVE_LIMIT,
    SeparationAudit,
    Selection,
    alpha_ratio,
    exhaustive_max_min,
    gmm_greedy,
    separation_audit,
)
from .report import EvalReport, evaluate_composability, write_bench_artifacts, write_eval_csv, write_svg
from .timing import (
    BUILD,
    DEFAULT_K_VALUES,
    DEFAULT_REPLACE_FRACTION,
    DEFAULT_STREAMS,
    REPLACEMENT,
    BenchAnalysis,
    MeasureResult,
    RegressionFit,
    TimingSample,
    analyze,
    best_fit,
    extrapolate_total,
    fit,
    mean_by_k,
    measure,
    try_fits,
)

__all__ = [
    "BUILD",
    "DEFAULT_K_VALUES",
    "DEFAULT_REPLACE_FRACTION",
    "DEFAULT_STREAMS",
    "EXHAUSTIVE_LIMIT",
    "REPLACEMENT",
    "BenchAnalysis",
    "EvalReport",
    "MeasureResult",
    "RegressionFit",
    "Selection",
    "SeparationAudit",
    "TimingSample",
    "alpha_ratio",
    "analyze",
    "best_fit",
    "evaluate_composability",
    "exhaustive_max_min",
    "extrapolate_total",
    "fit",
    "gmm_greedy",
    "mean_by_k",
    "measure",
    "separation_audit",
    "try_fits",
    "write_bench_artifacts",
    "write_eval_csv",
    "write_svg",
]
