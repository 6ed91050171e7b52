"""Capability-matched training-data selection.

Turns per-sample model feedback (token log-likelihoods plus binary
correctness) into calibrated item difficulties on a logit scale,
estimates the model's latent ability by maximum likelihood, scores every
sample by how close its difficulty sits to that ability, and selects a
budget-constrained subset. A synthetic generator with known ground truth
backs verification end to end.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .curriculum import (
    CarryOver,
    RefreshState,
    Stage,
    StagePlan,
    load_plan,
    load_state,
    plan_stages,
    refresh,
    save_state,
)
from .difficulty import (
    DEFAULT_HALF_WIDTH,
    CalibratedItem,
    DatasetStats,
    calibrate,
    calibrate_dataset,
    compute_stats,
    normalize,
    raw_difficulty,
)
from .pipeline import PipelineResult, run as run_pipeline
from .rasch import (
    MAX_BISECT_ITER,
    SEARCH_MARGIN,
    THETA_TOL,
    AbilityEstimate,
    EstimationError,
    ResponseItem,
    estimate_ability,
    estimate_ability_grid,
    log_likelihood,
    score_gap,
    search_interval,
    sigmoid,
    success_probability,
)
from .records import (
    RECORD_SCHEMA,
    SELECTION_SCHEMA,
    RecordSet,
    SampleRecord,
    ValidationError,
    load_records,
    load_selection,
    parse_records,
    read_selection,
    save_records,
    save_selection,
    write_records,
    write_selection,
)
from .selection import (
    Mode,
    ScoredSample,
    Selection,
    budget_size,
    partition,
    rank_and_select,
    select_top_k,
    zpd_score,
)
from .synth import (
    Bimodal,
    Normal,
    SynthSpec,
    Uniform,
    empirical_accuracy,
    generate_population,
    parse_dist,
    save_truth,
)

__all__ = [
    "__version__",
    "RECORD_SCHEMA",
    "SELECTION_SCHEMA",
    "ValidationError",
    "SampleRecord",
    "RecordSet",
    "parse_records",
    "write_records",
    "write_selection",
    "read_selection",
    "load_records",
    "load_selection",
    "save_records",
    "save_selection",
    "raw_difficulty",
    "calibrate",
    "normalize",
    "compute_stats",
    "calibrate_dataset",
    "CalibratedItem",
    "DatasetStats",
    "DEFAULT_HALF_WIDTH",
    "EstimationError",
    "ResponseItem",
    "AbilityEstimate",
    "success_probability",
    "sigmoid",
    "log_likelihood",
    "score_gap",
    "search_interval",
    "estimate_ability",
    "estimate_ability_grid",
    "SEARCH_MARGIN",
    "THETA_TOL",
    "MAX_BISECT_ITER",
    "Mode",
    "ScoredSample",
    "Selection",
    "zpd_score",
    "budget_size",
    "rank_and_select",
    "partition",
    "select_top_k",
    "PipelineResult",
    "run_pipeline",
    "CarryOver",
    "Stage",
    "StagePlan",
    "RefreshState",
    "plan_stages",
    "refresh",
    "load_plan",
    "load_state",
    "save_state",
    "Uniform",
    "Normal",
    "Bimodal",
    "SynthSpec",
    "generate_population",
    "empirical_accuracy",
    "parse_dist",
    "save_truth",
]
