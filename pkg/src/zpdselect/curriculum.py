"""Staged re-selection: re-estimate ability and re-select between stages.

Each stage runs the full composed flow against a fresh record file (new
per-sample feedback from the current model checkpoint) and carries a
small state forward: which ids have already been selected and the ability
trajectory. The exclude_previous policy removes already-selected ids from
the ranked pool so each stage spends its budget on new data; allow_repeat
ranks the full set every time.

State checkpoint file format (line-delimited): a header line

    {"schema": "zpd-refresh-state-v1", "stage": <int>, "theta_history": [...]}

followed by one JSON string per previously selected id, sorted.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from . import pipeline
from .difficulty import DEFAULT_HALF_WIDTH
from .records import RecordSet, ValidationError, atomic_write_text
from .selection import Mode, Selection

STATE_SCHEMA = "zpd-refresh-state-v1"


class CarryOver(str, enum.Enum):
    """What a later stage does with ids selected by earlier stages."""

    EXCLUDE_PREVIOUS = "exclude_previous"
    ALLOW_REPEAT = "allow_repeat"


DEFAULT_CARRY_OVER = CarryOver.EXCLUDE_PREVIOUS


@dataclass(frozen=True)
class Stage:
    """One planned stage: its index, budget ratio, and record file."""

    index: int
    rho: float
    records: str

    def __post_init__(self) -> None:
        if isinstance(self.index, bool) or not isinstance(self.index, int):
            raise ValidationError(f"stage index must be an integer, got {self.index!r}")
        rho = float(self.rho)
        if not (0.0 < rho <= 1.0):
            raise ValidationError(f"stage {self.index}: rho must lie in (0, 1], got {self.rho!r}")
        object.__setattr__(self, "rho", rho)
        if not isinstance(self.records, str) or not self.records:
            raise ValidationError(f"stage {self.index}: records path must be a non-empty string")


@dataclass(frozen=True)
class StagePlan:
    """Validated ordered stage list plus the carry-over policy."""

    stages: tuple[Stage, ...]
    carry_over: CarryOver = DEFAULT_CARRY_OVER

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "carry_over", CarryOver(self.carry_over))
        if not self.stages:
            raise ValidationError("a stage plan needs at least one stage")
        indices = [s.index for s in self.stages]
        for prev, cur in zip(indices, indices[1:]):
            if cur == prev:
                raise ValidationError(f"duplicate stage index {cur}")
            if cur < prev:
                raise ValidationError(
                    f"stage indices must be strictly increasing, got {prev} then {cur}"
                )


@dataclass(frozen=True)
class RefreshState:
    """Progress across stages: completed count, selected ids, ability path."""

    stage: int = 0
    selected_history: frozenset[str] = frozenset()
    theta_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.stage < 0:
            raise ValidationError(f"stage must be >= 0, got {self.stage}")
        object.__setattr__(self, "selected_history", frozenset(self.selected_history))
        thetas = tuple(float(t) for t in self.theta_history)
        for t in thetas:
            if not math.isfinite(t):
                raise ValidationError(f"theta_history entries must be finite, got {t!r}")
        object.__setattr__(self, "theta_history", thetas)
        if len(thetas) != self.stage:
            raise ValidationError(
                f"theta_history length {len(thetas)} does not match completed stage count {self.stage}"
            )


def plan_stages(config: dict) -> StagePlan:
    """Build a validated StagePlan from a parsed configuration mapping.

    Expected shape: {"carry_over": "exclude_previous" | "allow_repeat",
    "stages": [{"index": 1, "rho": 0.05, "records": "stage1.jsonl"}, ...]}.
    carry_over defaults to exclude_previous.
    """
    if not isinstance(config, dict):
        raise ValidationError(f"stage config must be a mapping, got {type(config).__name__}")
    raw_stages = config.get("stages")
    if not isinstance(raw_stages, list) or not raw_stages:
        raise ValidationError("stage config needs a non-empty 'stages' list")
    stages = []
    for i, entry in enumerate(raw_stages):
        if not isinstance(entry, dict):
            raise ValidationError(f"stages[{i}]: must be a mapping")
        missing = [key for key in ("index", "rho", "records") if key not in entry]
        if missing:
            raise ValidationError(f"stages[{i}]: missing fields {missing}")
        stages.append(Stage(index=entry["index"], rho=entry["rho"], records=entry["records"]))
    carry = config.get("carry_over", DEFAULT_CARRY_OVER)
    try:
        carry = CarryOver(carry)
    except ValueError:
        raise ValidationError(
            f"carry_over must be one of {[c.value for c in CarryOver]}, got {carry!r}"
        ) from None
    return StagePlan(stages=tuple(stages), carry_over=carry)


def refresh(
    state: RefreshState,
    records: RecordSet,
    rho: float,
    policy: CarryOver = DEFAULT_CARRY_OVER,
    *,
    half_width: float = DEFAULT_HALF_WIDTH,
    calibration_ids: Iterable[str] | None = None,
) -> tuple[Selection, RefreshState]:
    """Run one stage against fresh records and advance the state.

    The full flow (stats, calibration, normalization, estimation,
    ranking) runs on the stage's records; under exclude_previous the
    already-selected ids are dropped from the ranked pool first, while
    the budget stays ceil(rho * N) of the full stage set. Newly selected
    ids join the history under either policy, and the stage's ability
    estimate is appended.
    """
    policy = CarryOver(policy)
    exclude = state.selected_history if policy is CarryOver.EXCLUDE_PREVIOUS else frozenset()
    result = pipeline.run(
        records,
        rho,
        half_width=half_width,
        calibration_ids=calibration_ids,
        mode=Mode.ZPD,
        exclude_ids=exclude,
    )
    selection = result.selection
    new_state = RefreshState(
        stage=state.stage + 1,
        selected_history=state.selected_history | frozenset(selection.selected_ids()),
        theta_history=state.theta_history + (result.theta,),
    )
    return selection, new_state


def write_state(state: RefreshState, stream: IO[str]) -> None:
    header = {
        "schema": STATE_SCHEMA,
        "stage": state.stage,
        "theta_history": list(state.theta_history),
    }
    stream.write(json.dumps(header, separators=(",", ":")) + "\n")
    for sample_id in sorted(state.selected_history):
        stream.write(json.dumps(sample_id) + "\n")


def read_state(stream: IO[str] | Iterable[str]) -> RefreshState:
    lines = [line for line in stream if line.strip()]
    if not lines:
        raise ValidationError("state file is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line 1: malformed state header ({exc.msg})") from None
    if not isinstance(header, dict) or header.get("schema") != STATE_SCHEMA:
        raise ValidationError(
            f"state file schema must be {STATE_SCHEMA!r}, got {header.get('schema')!r}"
            if isinstance(header, dict)
            else "state header must be an object"
        )
    if "stage" not in header or "theta_history" not in header:
        raise ValidationError("state header missing 'stage' or 'theta_history'")
    ids = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            value = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed id entry ({exc.msg})") from None
        if not isinstance(value, str):
            raise ValidationError(f"line {lineno}: id entries must be strings")
        ids.append(value)
    return RefreshState(
        stage=header["stage"],
        selected_history=frozenset(ids),
        theta_history=tuple(header["theta_history"]),
    )


def load_state(path: str | Path) -> RefreshState:
    with open(path, "r", encoding="utf-8") as fh:
        return read_state(fh)


def save_state(path: str | Path, state: RefreshState) -> None:
    import io

    buf = io.StringIO()
    write_state(state, buf)
    atomic_write_text(path, buf.getvalue())


def load_plan(path: str | Path) -> StagePlan:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"stage plan {path}: malformed JSON ({exc.msg})") from None
    return plan_stages(config)
