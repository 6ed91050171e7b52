"""Proximity scoring, ranking, and budget-constrained subset selection.

Each item is scored by s = p(1-p) with p = sigma(theta - b): the score
peaks at 0.25 where predicted success is 50% and falls symmetrically as
the item gets much easier or much harder than the estimated ability. The
top k = ceil(rho * N) items by score form the selected subset. EASY and
HARD modes instead take the k lowest- and highest-difficulty items, for
ablation against the proximity criterion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .difficulty import CalibratedItem
from .rasch import sigmoid
from .records import ValidationError


class Mode(str, enum.Enum):
    """Subset construction rule."""

    EASY = "easy"
    ZPD = "zpd"
    HARD = "hard"


def zpd_score(p: float) -> float:
    """Proximity score p*(1-p): 0 at certainty, 0.25 at p = 0.5."""
    p = float(p)
    if not math.isfinite(p) or p < 0.0 or p > 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p!r}")
    return p * (1.0 - p)


def budget_size(n: int, rho: float) -> int:
    """k = ceil(rho * n), guarded against float excess in the product.

    ceil(0.07 * 100) must be 7, not 8; the epsilon snaps products that
    land a hair above an integer back down before rounding up. At least
    one item is always selected.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    rho = float(rho)
    if not (0.0 < rho <= 1.0):
        raise ValidationError(f"rho must lie in (0, 1], got {rho!r}")
    return max(1, math.ceil(rho * n - 1e-9))


@dataclass(frozen=True)
class ScoredSample:
    """One item's score, rank, and selection flag."""

    id: str
    b: float
    p: float
    zpd_score: float
    rank: int
    selected: bool


@dataclass(frozen=True)
class Selection:
    """Complete ranking of a dataset with the budgeted subset marked."""

    theta: float
    rho: float
    samples: tuple[ScoredSample, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))

    def selected_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.samples if s.selected)

    @property
    def k(self) -> int:
        return sum(1 for s in self.samples if s.selected)


def _order(mode: Mode, b: np.ndarray, scores: np.ndarray) -> np.ndarray:
    # Stable sorts keep input order among exact ties; items equally far
    # from theta on opposite sides score exactly equal (see _score).
    if mode is Mode.ZPD:
        return np.argsort(-scores, kind="stable")
    if mode is Mode.EASY:
        return np.argsort(b, kind="stable")
    return np.argsort(-b, kind="stable")


def _score(theta: float, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sigma(x)*sigma(-x) instead of p*(1-p): the expression is literally
    # symmetric in the sign of x, so mirrored items tie bit-for-bit.
    x = theta - b
    p = sigmoid(x)
    s = p * sigmoid(-x)
    return p, s


def select_top_k(
    items: Sequence[CalibratedItem],
    theta: float,
    k: int,
    mode: Mode = Mode.ZPD,
    rho: float | None = None,
) -> Selection:
    """Rank items under the given mode and mark the first k as selected.

    Lower-level entry for callers that fix k directly (the staged-refresh
    path computes k from a larger population than it ranks). rho is
    recorded on the result; it defaults to k/N.
    """
    items = list(items)
    if not items:
        raise ValidationError("cannot select from an empty item list")
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValidationError(f"theta must be finite, got {theta!r}")
    if isinstance(k, bool) or not isinstance(k, int) or not (1 <= k <= len(items)):
        raise ValidationError(f"k must be an integer in [1, {len(items)}], got {k!r}")
    mode = Mode(mode)
    b = np.array([it.b for it in items], dtype=np.float64)
    p, s = _score(theta, b)
    order = _order(mode, b, s)
    rank_of = np.empty(len(items), dtype=np.int64)
    rank_of[order] = np.arange(1, len(items) + 1)
    samples = tuple(
        ScoredSample(
            id=items[int(i)].id,
            b=float(b[i]),
            p=float(p[i]),
            zpd_score=float(s[i]),
            rank=int(rank_of[i]),
            selected=bool(rank_of[i] <= k),
        )
        for i in order
    )
    return Selection(theta=theta, rho=float(rho) if rho is not None else k / len(items), samples=samples)


def rank_and_select(items: Sequence[CalibratedItem], theta: float, rho: float) -> Selection:
    """Score every item at theta, rank by score descending, select top ceil(rho*N).

    Ties are broken by input order. The selected subset's minimum score
    is never below any unselected item's score.
    """
    items = list(items)
    if not items:
        raise ValidationError("cannot select from an empty item list")
    k = budget_size(len(items), rho)
    return select_top_k(items, theta, k, Mode.ZPD, rho=float(rho))


def partition(
    items: Sequence[CalibratedItem],
    theta: float,
    rho: float,
    mode: Mode,
) -> Selection:
    """Budgeted subset under an explicit construction rule.

    zpd ranks by proximity score (identical to rank_and_select); easy
    takes the k lowest-difficulty items; hard the k highest. Ties break
    by input order in every mode.
    """
    items = list(items)
    if not items:
        raise ValidationError("cannot select from an empty item list")
    mode = Mode(mode)
    k = budget_size(len(items), rho)
    return select_top_k(items, theta, k, mode, rho=float(rho))
