"""One-parameter logistic (Rasch) response model and ability estimation.

The probability of a correct response is sigma(theta - b) where theta is
learner ability and b is item difficulty, both on the same logit scale.
The maximum-likelihood ability given responses r_i on items b_i is the
root of the score equation

    g(theta) = sum_i r_i - sum_i sigma(theta - b_i) = 0

which is strictly decreasing in theta, so bisection on a bracketing
interval converges unconditionally. All-correct and all-incorrect
response patterns have no finite root; the estimate is then clamped to
the corresponding end of the search interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Search interval margin beyond the extreme item difficulties. At 30 logits
# past every item, success probabilities are within 1e-13 of 0 or 1, so no
# finite root can lie outside.
SEARCH_MARGIN = 30.0

# Bisection stops when the interval half-width falls below this.
THETA_TOL = 1e-6

MAX_BISECT_ITER = 200


class EstimationError(ValueError):
    """Ability estimation was called with unusable inputs."""


@dataclass(frozen=True)
class ResponseItem:
    """One graded response: item difficulty and a 0/1 outcome."""

    b: float
    correct: int

    def __post_init__(self) -> None:
        if isinstance(self.correct, bool) or self.correct not in (0, 1):
            raise EstimationError(f"correct must be 0 or 1, got {self.correct!r}")
        b = float(self.b)
        if not math.isfinite(b):
            raise EstimationError(f"item difficulty must be finite, got {self.b!r}")
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class AbilityEstimate:
    """Result of ability estimation.

    clamped is True when the response pattern admits no finite maximum
    and theta is the relevant search-interval endpoint. count_gap is
    |expected correct - observed correct| at theta.
    """

    theta: float
    iterations: int
    clamped: bool
    count_gap: float


def success_probability(theta: float, b: float) -> float:
    """P(correct) = sigma(theta - b), overflow-safe for any finite inputs."""
    x = float(theta) - float(b)
    if not math.isfinite(x):
        raise EstimationError("theta - b must be finite")
    if x >= 0.0:
        z = math.exp(-x)
        return 1.0 / (1.0 + z)
    z = math.exp(x)
    return z / (1.0 + z)


def sigmoid(x: np.ndarray | float) -> np.ndarray:
    """Vectorized stable logistic function."""
    arr = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(arr))
    return np.where(arr >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def _as_arrays(items: Sequence[ResponseItem]) -> tuple[np.ndarray, np.ndarray]:
    if len(items) == 0:
        raise EstimationError("at least one response item is required")
    b = np.array([it.b for it in items], dtype=np.float64)
    r = np.array([it.correct for it in items], dtype=np.float64)
    return b, r


def log_likelihood(theta: float, items: Sequence[ResponseItem]) -> float:
    """Log-likelihood of the responses at ability theta.

    Uses the identity r*x - log(1 + e^x) with x = theta - b, which avoids
    evaluating log of a probability that has underflowed to 0.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise EstimationError(f"theta must be finite, got {theta!r}")
    b, r = _as_arrays(items)
    x = theta - b
    return float(np.sum(r * x - np.logaddexp(0.0, x)))


def score_gap(theta: float, items: Sequence[ResponseItem]) -> float:
    """g(theta) = observed correct count minus expected correct count."""
    b, r = _as_arrays(items)
    return float(r.sum() - sigmoid(float(theta) - b).sum())


def search_interval(items: Sequence[ResponseItem]) -> tuple[float, float]:
    """Bracketing interval [min(b) - margin, max(b) + margin]."""
    b, _ = _as_arrays(items)
    return float(b.min()) - SEARCH_MARGIN, float(b.max()) + SEARCH_MARGIN


def estimate_ability(
    items: Sequence[ResponseItem],
    tol: float = THETA_TOL,
    max_iter: int = MAX_BISECT_ITER,
) -> AbilityEstimate:
    """Maximum-likelihood ability by bisection on the score equation.

    Stops when the bracketing interval's half-width falls below tol (the
    returned theta then moves less than tol if iterated further), or after
    max_iter halvings. All-correct and all-incorrect patterns return the
    upper or lower interval endpoint with clamped=True.
    """
    if tol <= 0.0 or not math.isfinite(tol):
        raise EstimationError(f"tol must be positive and finite, got {tol}")
    if max_iter < 1:
        raise EstimationError(f"max_iter must be >= 1, got {max_iter}")
    b, r = _as_arrays(items)
    lo, hi = float(b.min()) - SEARCH_MARGIN, float(b.max()) + SEARCH_MARGIN

    def g(theta: float) -> float:
        return float(r.sum() - sigmoid(theta - b).sum())

    g_lo = g(lo)
    g_hi = g(hi)
    # g is strictly decreasing. No sign change means the root lies outside
    # the interval (only possible for all-correct / all-incorrect patterns).
    if g_lo <= 0.0:
        theta = lo
        return AbilityEstimate(theta=theta, iterations=0, clamped=g_lo < 0.0, count_gap=abs(g(theta)))
    if g_hi >= 0.0:
        theta = hi
        return AbilityEstimate(theta=theta, iterations=0, clamped=g_hi > 0.0, count_gap=abs(g(theta)))

    iterations = 0
    while (hi - lo) / 2.0 >= tol and iterations < max_iter:
        mid = (lo + hi) / 2.0
        g_mid = g(mid)
        iterations += 1
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    theta = (lo + hi) / 2.0
    return AbilityEstimate(theta=theta, iterations=iterations, clamped=False, count_gap=abs(g(theta)))


# Memory ceiling for the grid search: at most ~4e6 likelihood cells per
# broadcast chunk.
_GRID_CELL_BUDGET = 4_000_000


def estimate_ability_grid(
    items: Sequence[ResponseItem],
    step: float = 1e-4,
) -> AbilityEstimate:
    """Ability by maximizing log-likelihood over a fixed grid.

    The grid covers the same interval as estimate_ability at the given
    step; the result is the grid point with the highest log-likelihood
    (first on ties). Exists as a slow, assumption-free cross-check of the
    root-finding estimator.

    The argmax is located by a stride-then-refine scan that evaluates the
    likelihood in bounded chunks; because the log-likelihood is strictly
    concave in theta, the coarse stride brackets the true argmax and the
    fine pass inside that bracket returns exactly the point full
    enumeration would.
    """
    step = float(step)
    if step <= 0.0 or not math.isfinite(step):
        raise EstimationError(f"step must be positive and finite, got {step}")
    b, r = _as_arrays(items)
    lo = float(b.min()) - SEARCH_MARGIN
    hi = float(b.max()) + SEARCH_MARGIN
    n_steps = int(math.floor((hi - lo) / step + 1e-9))

    def ll_at(indices: np.ndarray) -> np.ndarray:
        thetas = lo + indices.astype(np.float64) * step
        out = np.empty(thetas.shape[0], dtype=np.float64)
        rows = max(1, _GRID_CELL_BUDGET // max(1, b.size))
        for start in range(0, thetas.shape[0], rows):
            chunk = thetas[start : start + rows, None] - b[None, :]
            out[start : start + rows] = np.sum(
                r[None, :] * chunk - np.logaddexp(0.0, chunk), axis=1
            )
        return out

    evaluations = 0
    total = n_steps + 1
    if total <= 65536:
        idx = np.arange(total, dtype=np.int64)
        ll = ll_at(idx)
        evaluations += total
        best = int(np.argmax(ll))
    else:
        stride = max(2, math.ceil(total / 1024))
        coarse = np.arange(0, total, stride, dtype=np.int64)
        if coarse[-1] != n_steps:
            coarse = np.append(coarse, n_steps)
        ll_coarse = ll_at(coarse)
        evaluations += coarse.size
        j = int(np.argmax(ll_coarse))
        lo_idx = int(coarse[max(0, j - 1)])
        hi_idx = int(coarse[min(coarse.size - 1, j + 1)])
        fine = np.arange(lo_idx, hi_idx + 1, dtype=np.int64)
        ll_fine = ll_at(fine)
        evaluations += fine.size
        best = lo_idx + int(np.argmax(ll_fine))

    theta = lo + best * step
    clamped = best == 0 or best == n_steps
    gap = abs(float(r.sum() - sigmoid(theta - b).sum()))
    return AbilityEstimate(theta=theta, iterations=evaluations, clamped=clamped, count_gap=gap)
