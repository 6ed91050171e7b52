"""Raw difficulty, error-aware calibration, and range normalization.

Raw difficulty is the average token-level negative log-likelihood (nats
per token). Calibration pushes items the model answered incorrectly up to
at least the dataset mean, so fluent-but-wrong samples are not mistaken
for easy ones:

    calibrated = raw + (1 - correct) * max(0, mu - raw)

Correct items pass through unchanged. Calibrated values are then min-max
normalized onto [-half_width, +half_width] to become item difficulties b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .records import RecordSet, ValidationError

DEFAULT_HALF_WIDTH = 3.0


def raw_difficulty(token_logprobs: Sequence[float]) -> float:
    """Average negative log-likelihood per token, nats.

    Input must be non-empty with every entry finite and <= 0.
    """
    if len(token_logprobs) == 0:
        raise ValidationError("token_logprobs must be non-empty")
    values = []
    for v in token_logprobs:
        v = float(v)
        if not math.isfinite(v):
            raise ValidationError(f"token_logprobs entries must be finite, got {v!r}")
        if v > 0.0:
            raise ValidationError(f"token_logprobs entries must be <= 0, got {v}")
        values.append(v)
    # fsum keeps the average independent of token order.
    return -math.fsum(values) / len(values)


def calibrate(raw: float, correct: int, mu: float) -> float:
    """Error-aware calibrated difficulty for one item.

    Incorrect items are raised to at least mu; correct items and items
    already above mu are unchanged. Monotone in raw for fixed (correct, mu).
    """
    if isinstance(correct, bool) or correct not in (0, 1):
        raise ValidationError(f"correct must be 0 or 1, got {correct!r}")
    raw = float(raw)
    mu = float(mu)
    if not math.isfinite(raw) or not math.isfinite(mu):
        raise ValidationError("raw and mu must be finite")
    # max(raw, mu) equals raw + max(0, mu - raw) and is exact in floats,
    # so mu itself (not mu plus rounding error) is the corrected value.
    if correct == 1:
        return raw
    return max(raw, mu)


def normalize(values: Sequence[float], half_width: float = DEFAULT_HALF_WIDTH) -> np.ndarray:
    """Min-max map values onto [-half_width, +half_width].

    The minimum maps to -half_width, the maximum to +half_width, and the
    map is affine in between. An all-equal input maps to all zeros (the
    midpoint) rather than dividing by zero.
    """
    half_width = float(half_width)
    if not math.isfinite(half_width) or half_width <= 0.0:
        raise ValidationError(f"half_width must be positive and finite, got {half_width}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("values must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("values must be finite")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo) * (2.0 * half_width) - half_width


@dataclass(frozen=True)
class DatasetStats:
    """Frozen calibration statistics for a dataset.

    mu is the mean raw difficulty over the calibration subset, computed
    before any calibration. The min/max are of calibrated values over the
    full dataset and define the normalization range.
    """

    mu: float
    min_calibrated: float
    max_calibrated: float
    n_records: int
    n_calibration: int


@dataclass(frozen=True)
class CalibratedItem:
    """One record's difficulty at every stage of the transform."""

    id: str
    raw: float
    calibrated: float
    b: float
    correct: int


def compute_stats(records: RecordSet, calibration_ids: Iterable[str] | None = None) -> DatasetStats:
    """Compute frozen calibration statistics for a record set.

    calibration_ids restricts which records contribute to mu; difficulty
    min/max always cover the full set. Defaults to the record set's own
    calibration subset, then to all records.
    """
    if calibration_ids is None:
        calibration_ids = records.calibration_ids
    raw = np.array([rec.nll for rec in records], dtype=np.float64)
    correct = np.array([rec.correct for rec in records], dtype=np.int64)
    if calibration_ids is None:
        mu = float(raw.mean())
        n_cal = len(records)
    else:
        ids = frozenset(calibration_ids)
        mask = np.array([rec.id in ids for rec in records], dtype=bool)
        if not mask.any():
            raise ValidationError("calibration_ids selects no records")
        missing = ids - set(rec.id for rec in records)
        if missing:
            raise ValidationError(
                f"calibration_ids not present in records: {sorted(missing)[:5]}"
            )
        mu = float(raw[mask].mean())
        n_cal = int(mask.sum())
    cal = np.where(correct == 1, raw, np.maximum(raw, mu))
    return DatasetStats(
        mu=mu,
        min_calibrated=float(cal.min()),
        max_calibrated=float(cal.max()),
        n_records=len(records),
        n_calibration=n_cal,
    )


def calibrate_dataset(
    records: RecordSet,
    half_width: float = DEFAULT_HALF_WIDTH,
    calibration_ids: Iterable[str] | None = None,
    stats: DatasetStats | None = None,
) -> tuple[list[CalibratedItem], DatasetStats]:
    """Calibrate and normalize a full record set.

    When stats is given it is used as-is (the frozen-statistics path for
    scoring new data against an earlier dataset); otherwise statistics are
    computed from this record set. Output order matches input order.
    """
    half_width = float(half_width)
    if not math.isfinite(half_width) or half_width <= 0.0:
        raise ValidationError(f"half_width must be positive and finite, got {half_width}")
    if stats is None:
        stats = compute_stats(records, calibration_ids)
    raw = np.array([rec.nll for rec in records], dtype=np.float64)
    correct = np.array([rec.correct for rec in records], dtype=np.int64)
    cal = np.where(correct == 1, raw, np.maximum(raw, stats.mu))
    lo = stats.min_calibrated
    hi = stats.max_calibrated
    if hi == lo:
        b = np.zeros_like(cal)
    else:
        b = (cal - lo) / (hi - lo) * (2.0 * half_width) - half_width
    items = [
        CalibratedItem(
            id=rec.id,
            raw=float(raw[i]),
            calibrated=float(cal[i]),
            b=float(b[i]),
            correct=int(correct[i]),
        )
        for i, rec in enumerate(records)
    ]
    return items, stats
