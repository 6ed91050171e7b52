"""Walk a tiny hand-built record set through difficulty calibration and
ability estimation, printing every intermediate quantity."""

import numpy as np

from zpdselect import (
    RecordSet,
    SampleRecord,
    ResponseItem,
    calibrate_dataset,
    estimate_ability,
)

# Eight samples with per-token logprobs or a precomputed average NLL.
# correct = 1 means the model solved the sample, 0 means it failed.
records = RecordSet(
    (
        SampleRecord(id="easy-1", token_count=3, correct=1, token_logprobs=(-0.1, -0.2, -0.3)),
        SampleRecord(id="easy-2", token_count=2, correct=1, token_logprobs=(-0.2, -0.4)),
        SampleRecord(id="mid-1", token_count=1, correct=1, raw_nll=0.9),
        SampleRecord(id="mid-2", token_count=1, correct=0, raw_nll=0.7),
        SampleRecord(id="mid-3", token_count=1, correct=0, raw_nll=1.1),
        SampleRecord(id="hard-1", token_count=1, correct=0, raw_nll=1.8),
        SampleRecord(id="hard-2", token_count=1, correct=1, raw_nll=2.2),
        SampleRecord(id="hard-3", token_count=1, correct=0, raw_nll=2.6),
    )
)

items, stats = calibrate_dataset(records)

print(f"dataset mean difficulty mu = {stats.mu:.4f}")
print(f"calibrated range = [{stats.min_calibrated:.4f}, {stats.max_calibrated:.4f}]")
print()
print(f"{'id':8} {'raw':>7} {'calibrated':>11} {'b':>7}  correct")
for it in items:
    moved = "  <- raised to mu" if it.calibrated > it.raw else ""
    print(f"{it.id:8} {it.raw:7.4f} {it.calibrated:11.4f} {it.b:7.3f}  {it.correct}{moved}")

# A wrong answer on a low-NLL sample means the model was confidently
# wrong; calibration lifts that sample's difficulty up to the mean.

est = estimate_ability([ResponseItem(it.b, it.correct) for it in items])
print()
print(f"ability estimate theta = {est.theta:.4f}")
print(f"bisection iterations   = {est.iterations}")
print(f"clamped                = {est.clamped}")
print(f"count gap              = {est.count_gap:.2e}")

# The count gap is |sum of predicted success probabilities - observed
# correct count| at the estimate; for an interior maximum it is near 0.
p = 1.0 / (1.0 + np.exp(-(est.theta - np.array([it.b for it in items]))))
print(f"expected successes     = {p.sum():.4f} (observed {sum(it.correct for it in items)})")
