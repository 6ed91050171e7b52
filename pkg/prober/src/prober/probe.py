"""Probe pipeline: score references, grade generations, emit records.

Output is a line-delimited records file (one object per line with id,
raw_nll, token_logprobs, token_count, correct) plus a sibling
``<out>.manifest.json`` recording the model, decoding settings, counts,
and the ids of skipped samples and extraction failures.

Every dataset sample is accounted for: it either becomes a record or a
skip (context overflow), never silently disappears. A generation whose
answer cannot be extracted still becomes a record with correct=0 and is
listed in the manifest as an extraction failure.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

from .backends import Backend, ContextOverflow, build_backend
from .extraction import grade
from .tasks import ProbeError, ProbeTask

MANIFEST_SCHEMA = "probe-manifest-v1"


@dataclass(frozen=True)
class NllRow:
    """Teacher-forced scores for one sample's reference output."""

    id: str
    token_logprobs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "token_logprobs", tuple(float(v) for v in self.token_logprobs))
        if not self.token_logprobs:
            raise ProbeError(f"sample {self.id!r}: backend returned no token logprobs")
        for v in self.token_logprobs:
            if not math.isfinite(v) or v > 0.0:
                raise ProbeError(f"sample {self.id!r}: bad token logprob {v!r}")

    @property
    def token_count(self) -> int:
        return len(self.token_logprobs)

    @property
    def raw_nll(self) -> float:
        return -math.fsum(self.token_logprobs) / len(self.token_logprobs)


@dataclass(frozen=True)
class CorrectnessResult:
    r: dict[str, int]
    generations: dict[str, str]
    extraction_failure_ids: tuple[str, ...]


@dataclass(frozen=True)
class ProbeResult:
    records_path: Path
    manifest_path: Path
    manifest: dict
    rows: tuple[NllRow, ...]
    r: dict[str, int] = field(default_factory=dict)


def _batches(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def probe_nll(task: ProbeTask, backend: Backend) -> tuple[tuple[NllRow, ...], tuple[str, ...]]:
    """Score every sample's reference under the model.

    Returns (rows, skipped_ids), both in dataset order. A sample whose
    prompt plus reference exceeds the context window is skipped, not
    scored. Samples are scored one at a time, so batch_size never
    changes the numbers, only how the loop is chunked.
    """
    rows: list[NllRow] = []
    skipped: list[str] = []
    for chunk in _batches(task.samples, task.batch_size):
        for sample in chunk:
            try:
                logprobs = backend.reference_logprobs(sample.prompt(), sample.output)
            except ContextOverflow:
                skipped.append(sample.id)
                continue
            rows.append(NllRow(id=sample.id, token_logprobs=tuple(logprobs)))
    return tuple(rows), tuple(skipped)


def probe_correctness(
    task: ProbeTask,
    backend: Backend,
    ids: set[str] | None = None,
) -> CorrectnessResult:
    """Generate an answer per sample and grade it against the reference.

    ``ids`` restricts grading to a subset (the pipeline passes the
    samples that were not skipped). An unextractable answer grades as
    r=0 and is reported, never dropped. A reference from which no gold
    answer can be pulled raises: that is a dataset defect.
    """
    r: dict[str, int] = {}
    generations: dict[str, str] = {}
    failures: list[str] = []
    for chunk in _batches(task.samples, task.batch_size):
        for sample in chunk:
            if ids is not None and sample.id not in ids:
                continue
            generation = backend.generate(sample.prompt(), task.decoding)
            try:
                score, extracted = grade(task.task_format, generation, sample.output)
            except ProbeError as exc:
                raise ProbeError(f"sample {sample.id!r}: {exc}") from None
            generations[sample.id] = generation
            r[sample.id] = score
            if not extracted:
                failures.append(sample.id)
    return CorrectnessResult(r=r, generations=generations, extraction_failure_ids=tuple(failures))


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path_for(records_path: Union[str, Path]) -> Path:
    return Path(str(records_path) + ".manifest.json")


def emit_records(
    path: Union[str, Path],
    rows: Sequence[NllRow],
    r_by_id: Mapping[str, int],
    task: ProbeTask,
    skipped_ids: Sequence[str] = (),
    extraction_failure_ids: Sequence[str] = (),
) -> dict:
    """Write the records file and its sibling manifest.

    ``rows`` must already be in dataset order; each row's id must have a
    grade in ``r_by_id`` and vice versa, or nothing is written.
    """
    path = Path(path)
    row_ids = {row.id for row in rows}
    graded_ids = set(r_by_id)
    if row_ids != graded_ids:
        ungraded = sorted(row_ids - graded_ids)[:5]
        unscored = sorted(graded_ids - row_ids)[:5]
        raise ProbeError(
            f"id mismatch between scores and grades: ungraded {ungraded}, unscored {unscored}"
        )
    if not rows:
        raise ProbeError("refusing to write an empty records file")
    for sample_id, score in r_by_id.items():
        if isinstance(score, bool) or score not in (0, 1):
            raise ProbeError(f"sample {sample_id!r}: grade must be 0 or 1, got {score!r}")

    lines = []
    for row in rows:
        obj = {
            "id": row.id,
            "raw_nll": row.raw_nll,
            "token_logprobs": list(row.token_logprobs),
            "token_count": row.token_count,
            "correct": int(r_by_id[row.id]),
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    _atomic_write_text(path, "\n".join(lines) + "\n")

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "model": task.model,
        "task_format": task.task_format.value,
        "decoding": {
            "greedy": task.decoding.greedy,
            "temperature": task.decoding.temperature,
            "max_new_tokens": task.decoding.max_new_tokens,
        },
        "counts": {
            "dataset": len(task.samples),
            "records": len(rows),
            "skipped": len(skipped_ids),
            "extraction_failures": len(extraction_failure_ids),
        },
        "skipped_ids": list(skipped_ids),
        "extraction_failure_ids": list(extraction_failure_ids),
    }
    _atomic_write_text(manifest_path_for(path), json.dumps(manifest, indent=2) + "\n")
    return manifest


def run_probe(
    task: ProbeTask,
    out_path: Union[str, Path],
    backend: Backend | None = None,
) -> ProbeResult:
    """Full probe: score, grade, and write records plus manifest."""
    if backend is None:
        backend = build_backend(task.model)
    rows, skipped = probe_nll(task, backend)
    if len(rows) + len(skipped) != len(task.samples):
        raise ProbeError(
            f"coverage broken: {len(rows)} records + {len(skipped)} skips != "
            f"{len(task.samples)} samples"
        )
    if not rows:
        raise ProbeError("every sample overflowed the context window; nothing to write")
    corr = probe_correctness(task, backend, ids={row.id for row in rows})
    manifest = emit_records(
        out_path,
        rows,
        corr.r,
        task=task,
        skipped_ids=skipped,
        extraction_failure_ids=corr.extraction_failure_ids,
    )
    return ProbeResult(
        records_path=Path(out_path),
        manifest_path=manifest_path_for(out_path),
        manifest=manifest,
        rows=rows,
        r=dict(corr.r),
    )
