"""The composed flow: statistics, calibration, estimation, selection.

One call takes a validated record set to a finished Selection. The CLI
and the staged-refresh module both run through here so every entry point
agrees on ordering, defaults, and edge-case handling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .difficulty import (
    DEFAULT_HALF_WIDTH,
    CalibratedItem,
    DatasetStats,
    calibrate_dataset,
    compute_stats,
)
from .rasch import AbilityEstimate, ResponseItem, estimate_ability
from .records import RecordSet, ValidationError
from .selection import Mode, Selection, budget_size, select_top_k


@dataclass(frozen=True)
class PipelineResult:
    """Everything the composed flow produced, for inspection or reuse."""

    stats: DatasetStats
    items: tuple[CalibratedItem, ...]
    estimate: AbilityEstimate | None
    theta: float
    selection: Selection


def run(
    records: RecordSet,
    rho: float,
    *,
    half_width: float = DEFAULT_HALF_WIDTH,
    calibration_ids: Iterable[str] | None = None,
    mode: Mode = Mode.ZPD,
    theta: float | None = None,
    exclude_ids: Iterable[str] = (),
) -> PipelineResult:
    """Run stats -> calibrate -> normalize -> estimate -> score -> select.

    calibration_ids restricts both the dataset mean and the responses
    used for ability estimation; scoring and selection always cover the
    full set. theta, when given, replaces estimation entirely (what-if
    runs). exclude_ids removes items from the ranked pool while the
    budget k = ceil(rho * N) stays computed on the full N, so exclusion
    shrinks the pool, not the budget; fewer than k remaining items is an
    error.
    """
    if calibration_ids is None:
        calibration_ids = records.calibration_ids
    stats = compute_stats(records, calibration_ids)
    items, _ = calibrate_dataset(records, half_width, calibration_ids, stats=stats)

    estimate: AbilityEstimate | None = None
    if theta is None:
        if calibration_ids is None:
            response_items = [ResponseItem(it.b, it.correct) for it in items]
        else:
            ids = frozenset(calibration_ids)
            response_items = [ResponseItem(it.b, it.correct) for it in items if it.id in ids]
        estimate = estimate_ability(response_items)
        theta = estimate.theta
    else:
        theta = float(theta)
        if not math.isfinite(theta):
            raise ValidationError(f"theta must be finite, got {theta!r}")

    k = budget_size(len(items), rho)
    exclude = frozenset(exclude_ids)
    if exclude:
        pool = [it for it in items if it.id not in exclude]
    else:
        pool = list(items)
    if len(pool) < k:
        raise ValidationError(
            f"budget k={k} exceeds the {len(pool)} items remaining after exclusions"
        )
    selection = select_top_k(pool, theta, k, Mode(mode), rho=float(rho))
    return PipelineResult(
        stats=stats,
        items=tuple(items),
        estimate=estimate,
        theta=theta,
        selection=selection,
    )
