"""Answer extraction and grading, testable from strings alone.

multiple_choice: the FIRST standalone option letter A-D in the
generation. "Standalone" means on word boundaries, so "The answer is
B." yields B but "BADGE" and "A1" yield nothing. Uppercase only:
option letters are capitalized, and lowercase 'a' would match the
article.

boxed_numeric: the number immediately after the FINAL '####' marker,
compared numerically (so "#### 8.0" matches gold 8). Thousands commas
are tolerated ("#### 1,234").
"""

from __future__ import annotations

import re
from typing import Optional

from .tasks import ProbeError, TaskFormat

_CHOICE = re.compile(r"\b([A-D])\b")
_NUMBER_AFTER_MARKER = re.compile(
    r"####\s*(-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][+-]?\d+)?)"
)


def extract_choice(text: str) -> Optional[str]:
    """First standalone A-D letter, or None."""
    match = _CHOICE.search(text)
    return match.group(1) if match else None


def extract_number(text: str) -> Optional[float]:
    """Number after the final '####' marker, or None."""
    matches = _NUMBER_AFTER_MARKER.findall(text)
    if not matches:
        return None
    return float(matches[-1].replace(",", ""))


def gold_choice(reference: str) -> str:
    letter = extract_choice(reference)
    if letter is None:
        raise ProbeError(f"reference answer has no standalone A-D letter: {reference!r}")
    return letter


def gold_number(reference: str) -> float:
    """Gold value: marker extraction first, else the whole string as a number."""
    value = extract_number(reference)
    if value is not None:
        return value
    try:
        return float(reference.strip().replace(",", ""))
    except ValueError:
        raise ProbeError(f"reference answer has no extractable number: {reference!r}") from None


def grade(task_format: TaskFormat, generation: str, reference: str) -> tuple[int, bool]:
    """Grade one generation against the reference.

    Returns (r, extracted): r = 1 on a match else 0; extracted = False
    when no answer could be pulled from the generation (r is then 0 and
    the caller records the failure, never drops the sample). A malformed
    reference raises: that is a dataset defect, not a model failure.
    """
    task_format = TaskFormat(task_format)
    if task_format is TaskFormat.MULTIPLE_CHOICE:
        gold = gold_choice(reference)
        answer = extract_choice(generation)
        if answer is None:
            return 0, False
        return int(answer == gold), True
    gold = gold_number(reference)
    value = extract_number(generation)
    if value is None:
        return 0, False
    return int(value == gold), True
