"""Synthetic populations with known ground truth for verifying the pipeline.

Items get true difficulties b* from a chosen distribution, responses are
Bernoulli draws with success probability sigma(theta* - b*), and a
pseudo raw difficulty is an affine image of b* plus Gaussian noise,
shifted so its minimum is exactly 0. Because theta* and b* are known,
estimator error and selection behavior can be measured directly.

Draws use a counter-based generator (Philox), so output depends only on
the seed and the draw layout, never on iteration order. The layout is
fixed: difficulties, then response uniforms, then noise (always drawn,
even at noise_sd = 0, so populations with the same seed share b* and
responses across noise settings).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .rasch import sigmoid
from .records import RecordSet, SampleRecord, ValidationError, atomic_write_text

TRUTH_SCHEMA = "truth-v1"


def _check_finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Uniform:
    """Uniform difficulty on [low, high]; low == high is a point mass."""

    low: float
    high: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "low", _check_finite(self.low, "low"))
        object.__setattr__(self, "high", _check_finite(self.high, "high"))
        if self.low > self.high:
            raise ValidationError(f"uniform needs low <= high, got ({self.low}, {self.high})")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)


@dataclass(frozen=True)
class Normal:
    """Gaussian difficulty."""

    mean: float
    sd: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _check_finite(self.mean, "mean"))
        object.__setattr__(self, "sd", _check_finite(self.sd, "sd"))
        if self.sd <= 0.0:
            raise ValidationError(f"normal needs sd > 0, got {self.sd}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mean + self.sd * rng.standard_normal(n)


@dataclass(frozen=True)
class Bimodal:
    """Two-component Gaussian mixture; weight is the first component's share."""

    mean1: float
    sd1: float
    mean2: float
    sd2: float
    weight: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean1", _check_finite(self.mean1, "mean1"))
        object.__setattr__(self, "sd1", _check_finite(self.sd1, "sd1"))
        object.__setattr__(self, "mean2", _check_finite(self.mean2, "mean2"))
        object.__setattr__(self, "sd2", _check_finite(self.sd2, "sd2"))
        object.__setattr__(self, "weight", _check_finite(self.weight, "weight"))
        if self.sd1 <= 0.0 or self.sd2 <= 0.0:
            raise ValidationError(f"bimodal needs sd > 0, got ({self.sd1}, {self.sd2})")
        if not (0.0 <= self.weight <= 1.0):
            raise ValidationError(f"bimodal weight must lie in [0, 1], got {self.weight}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        first = rng.random(n) < self.weight
        z = rng.standard_normal(n)
        mean = np.where(first, self.mean1, self.mean2)
        sd = np.where(first, self.sd1, self.sd2)
        return mean + sd * z


Distribution = Union[Uniform, Normal, Bimodal]


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic population."""

    n_items: int
    theta_star: float
    difficulty_dist: Distribution
    nll_noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.n_items, bool) or not isinstance(self.n_items, int) or self.n_items < 1:
            raise ValidationError(f"n_items must be an integer >= 1, got {self.n_items!r}")
        object.__setattr__(self, "theta_star", _check_finite(self.theta_star, "theta_star"))
        if not isinstance(self.difficulty_dist, (Uniform, Normal, Bimodal)):
            raise ValidationError(
                f"difficulty_dist must be Uniform, Normal, or Bimodal, got {type(self.difficulty_dist).__name__}"
            )
        noise = _check_finite(self.nll_noise_sd, "nll_noise_sd")
        if noise < 0.0:
            raise ValidationError(f"nll_noise_sd must be >= 0, got {noise}")
        object.__setattr__(self, "nll_noise_sd", noise)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")


def generate_population(spec: SynthSpec) -> tuple[list[float], RecordSet]:
    """Draw a population: true difficulties plus a matching record set.

    Returns (b_star, records) in item-index order: b_star[i] is the true
    difficulty behind records.records[i]. The pseudo raw difficulty is
    b* + noise shifted so the minimum is exactly 0 (records require
    non-negative values); at nll_noise_sd = 0 it has the same ordering
    as b* exactly.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    n = spec.n_items
    b = spec.difficulty_dist.sample(rng, n)
    u = rng.random(n)
    correct = (u < sigmoid(spec.theta_star - b)).astype(np.int64)
    eps = spec.nll_noise_sd * rng.standard_normal(n)
    shifted = b + eps
    raw = shifted - shifted.min()
    records = tuple(
        SampleRecord(
            id=f"synth-{i:06d}",
            token_count=1,
            correct=int(correct[i]),
            raw_nll=float(raw[i]),
        )
        for i in range(n)
    )
    source = (
        f"synth(seed={spec.seed}, n={n}, theta_star={spec.theta_star}, "
        f"dist={spec.difficulty_dist}, noise_sd={spec.nll_noise_sd})"
    )
    return [float(v) for v in b], RecordSet(records, source=source)


def empirical_accuracy(records: RecordSet | Sequence[SampleRecord]) -> float:
    """Fraction of records with correct = 1."""
    recs = list(records)
    if not recs:
        raise ValidationError("empirical_accuracy needs a non-empty record set")
    return sum(rec.correct for rec in recs) / len(recs)


_DIST_ARITY = {"uniform": 2, "normal": 2, "bimodal": 5}


def parse_dist(text: str) -> Distribution:
    """Parse a distribution descriptor.

    Forms: "uniform:LOW,HIGH", "normal:MEAN,SD",
    "bimodal:MEAN1,SD1,MEAN2,SD2,WEIGHT".
    """
    if not isinstance(text, str) or ":" not in text:
        raise ValidationError(
            f"distribution must look like 'uniform:-3,3', 'normal:0,1', or "
            f"'bimodal:-2,0.5,2,0.5,0.5', got {text!r}"
        )
    name, _, arg_text = text.partition(":")
    name = name.strip().lower()
    if name not in _DIST_ARITY:
        raise ValidationError(f"unknown distribution {name!r}; expected uniform, normal, or bimodal")
    parts = [p.strip() for p in arg_text.split(",")]
    if len(parts) != _DIST_ARITY[name]:
        raise ValidationError(
            f"{name} takes {_DIST_ARITY[name]} parameters, got {len(parts)} in {text!r}"
        )
    try:
        args = [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"non-numeric distribution parameter in {text!r}") from None
    if name == "uniform":
        return Uniform(args[0], args[1])
    if name == "normal":
        return Normal(args[0], args[1])
    return Bimodal(args[0], args[1], args[2], args[3], args[4])


def save_truth(path: str | Path, records: RecordSet, b_star: Sequence[float], theta_star: float) -> None:
    """Write the ground-truth sidecar: one line of (id, b*, theta*) per record."""
    if len(b_star) != len(records):
        raise ValidationError(
            f"truth sidecar needs one b_star per record: {len(b_star)} vs {len(records)}"
        )
    lines = []
    for rec, b in zip(records, b_star):
        lines.append(
            json.dumps(
                {"id": rec.id, "b_star": float(b), "theta_star": float(theta_star)},
                separators=(",", ":"),
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
