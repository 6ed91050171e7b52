"""Probe task definition and dataset loading.

A dataset is a line-delimited file of instruction/input/output objects.
The task format decides how a generation is graded: multiple_choice
extracts the first standalone option letter A-D, boxed_numeric extracts
the number after the final '#### ' marker.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union


class ProbeError(ValueError):
    """Unusable task, dataset, or model input."""


class TaskFormat(str, enum.Enum):
    MULTIPLE_CHOICE = "multiple_choice"
    BOXED_NUMERIC = "boxed_numeric"


@dataclass(frozen=True)
class Decoding:
    """Generation settings; greedy and temperature 0 unless overridden."""

    greedy: bool = True
    temperature: float = 0.0
    max_new_tokens: int = 48

    def __post_init__(self) -> None:
        if self.greedy and self.temperature != 0.0:
            raise ProbeError("greedy decoding ignores temperature; set greedy=False to sample")
        if not self.greedy and self.temperature <= 0.0:
            raise ProbeError(f"sampling needs temperature > 0, got {self.temperature}")
        if not isinstance(self.max_new_tokens, int) or self.max_new_tokens < 1:
            raise ProbeError(f"max_new_tokens must be a positive integer, got {self.max_new_tokens!r}")


@dataclass(frozen=True)
class Sample:
    """One dataset row: the prompt pieces and the reference output."""

    id: str
    instruction: str
    input: str
    output: str

    def prompt(self) -> str:
        if self.input:
            return f"{self.instruction}\n{self.input}\n"
        return f"{self.instruction}\n"


@dataclass(frozen=True)
class ProbeTask:
    """What to probe: dataset, grading rule, model, decoding, batching."""

    samples: tuple[Sample, ...]
    task_format: TaskFormat
    model: str
    decoding: Decoding = field(default_factory=Decoding)
    batch_size: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ProbeError("a probe task needs a non-empty dataset")
        object.__setattr__(self, "task_format", TaskFormat(self.task_format))
        if not isinstance(self.model, str) or not self.model:
            raise ProbeError("model identifier must be a non-empty string")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ProbeError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise ProbeError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)


def parse_dataset(stream: Union[IO[str], IO[bytes], Iterable[Union[str, bytes]]]) -> tuple[Sample, ...]:
    """Parse instruction/input/output lines into Samples.

    'instruction' and 'output' are required strings; 'input' defaults to
    the empty string; 'id' defaults to the zero-padded line index.
    Errors name the offending line.
    """
    samples: list[Sample] = []
    index = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProbeError(f"line {lineno}: malformed JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise ProbeError(f"line {lineno}: expected an object")
        for key in ("instruction", "output"):
            if not isinstance(obj.get(key), str) or not obj[key]:
                raise ProbeError(f"line {lineno}: {key!r} must be a non-empty string")
        input_text = obj.get("input", "")
        if not isinstance(input_text, str):
            raise ProbeError(f"line {lineno}: 'input' must be a string")
        sample_id = obj.get("id", f"sample-{index:06d}")
        if not isinstance(sample_id, str) or not sample_id:
            raise ProbeError(f"line {lineno}: 'id' must be a non-empty string")
        samples.append(
            Sample(id=sample_id, instruction=obj["instruction"], input=input_text, output=obj["output"])
        )
        index += 1
    if not samples:
        raise ProbeError("dataset contains no samples")
    return tuple(samples)


def load_dataset(path: Union[str, Path]) -> tuple[Sample, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh)


def load_task(
    dataset_path: Union[str, Path],
    task_format: Union[TaskFormat, str],
    model: str,
    decoding: Decoding | None = None,
    batch_size: int = 8,
) -> ProbeTask:
    return ProbeTask(
        samples=load_dataset(dataset_path),
        task_format=TaskFormat(task_format),
        model=model,
        decoding=decoding if decoding is not None else Decoding(),
        batch_size=batch_size,
    )
