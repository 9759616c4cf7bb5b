"""Eviction-free cluster sizing for iterative data-flow applications."""

from .logmodel import SampleRunLog, extract_features, parse_log
from .predictor import LinearModel, ModelSet, fit_models, fit_nnls, loo_cv, predict
from .sampler import SamplePlan, adaptive_extend, monitor_sample_run, plan_samples
from .selector import (
    MachineProfile,
    Recommendation,
    cluster_bounds,
    machines_bounds,
    select_cluster_size,
    skew_adjusted_check,
)
from .simulator import Placement, WorkloadSpec, computation_counts, recompute_counts, run, sweep

__all__ = [
    "LinearModel", "MachineProfile", "ModelSet", "Placement", "Recommendation",
    "SamplePlan", "SampleRunLog", "WorkloadSpec", "adaptive_extend", "cluster_bounds",
    "computation_counts", "extract_features", "fit_models", "fit_nnls", "loo_cv",
    "machines_bounds", "monitor_sample_run", "parse_log", "plan_samples", "predict",
    "recompute_counts", "run", "select_cluster_size", "skew_adjusted_check", "sweep",
]
