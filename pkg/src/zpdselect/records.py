"""Sample-record data model and line-delimited file I/O.

A record file is UTF-8 JSON Lines: one object per line with the fields of
:class:`SampleRecord`. Unknown fields survive a read (kept in ``extra``)
but are never written to selection output. A selection file uses the same
framing with the fields ``id``, ``b``, ``p``, ``zpd_score``, ``rank``,
``selected``.
"""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, TYPE_CHECKING, Iterable, Iterator

if TYPE_CHECKING:
    from .selection import Selection

RECORD_SCHEMA = "records-v1"
SELECTION_SCHEMA = "selection-v1"

# Largest tolerated |raw_nll - recomputed| when a record carries both
# raw_nll and token_logprobs.
NLL_CONSISTENCY_TOL = 1e-6

_KNOWN_FIELDS = ("id", "raw_nll", "token_logprobs", "token_count", "correct", "tags")


class ValidationError(ValueError):
    """An input record, record file, or selection violates the schema."""


def _require_finite_number(value: object, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"field {name}: expected a number, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"field {name}: non-finite value {value!r}")
    return out


@dataclass(frozen=True)
class SampleRecord:
    """One training sample's model feedback.

    Difficulty may arrive pre-averaged (``raw_nll``, nats per token) or as
    per-token log-probabilities (``token_logprobs``, nats). At least one of
    the two must be present; when both are, they must agree to within
    ``NLL_CONSISTENCY_TOL`` or construction fails.
    """

    id: str
    token_count: int
    correct: int
    raw_nll: float | None = None
    token_logprobs: tuple[float, ...] | None = None
    tags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("field id: must be a non-empty string")
        if isinstance(self.token_count, bool) or not isinstance(self.token_count, int):
            raise ValidationError("field token_count: must be an integer")
        if self.token_count < 1:
            raise ValidationError(f"field token_count: must be >= 1, got {self.token_count}")
        if isinstance(self.correct, bool) or self.correct not in (0, 1):
            raise ValidationError(f"field correct: must be 0 or 1, got {self.correct!r}")

        if self.raw_nll is None and self.token_logprobs is None:
            raise ValidationError("one of raw_nll or token_logprobs is required")

        if self.raw_nll is not None:
            raw = _require_finite_number(self.raw_nll, "raw_nll")
            if raw < 0.0:
                raise ValidationError(f"field raw_nll: must be >= 0, got {raw}")
            object.__setattr__(self, "raw_nll", raw)

        if self.token_logprobs is not None:
            lps = tuple(
                _require_finite_number(v, "token_logprobs") for v in self.token_logprobs
            )
            if not lps:
                raise ValidationError("field token_logprobs: must be non-empty when present")
            for v in lps:
                if v > 0.0:
                    raise ValidationError(f"field token_logprobs: entries must be <= 0, got {v}")
            if len(lps) != self.token_count:
                raise ValidationError(
                    f"field token_logprobs: length {len(lps)} does not match "
                    f"token_count {self.token_count}"
                )
            object.__setattr__(self, "token_logprobs", lps)

        if self.raw_nll is not None and self.token_logprobs is not None:
            recomputed = -math.fsum(self.token_logprobs) / len(self.token_logprobs)
            if abs(self.raw_nll - recomputed) > NLL_CONSISTENCY_TOL:
                raise ValidationError(
                    f"raw_nll {self.raw_nll} inconsistent with token_logprobs "
                    f"(recomputed {recomputed}, tolerance {NLL_CONSISTENCY_TOL})"
                )

        object.__setattr__(self, "tags", tuple(self.tags))

    @property
    def nll(self) -> float:
        """Average negative log-likelihood per token, nats."""
        if self.raw_nll is not None:
            return self.raw_nll
        assert self.token_logprobs is not None
        return -math.fsum(self.token_logprobs) / len(self.token_logprobs)


@dataclass(frozen=True)
class RecordSet:
    """Ordered, validated collection of records with unique ids.

    ``calibration_ids`` optionally names the subset used for the dataset
    mean in difficulty calibration; ``None`` means every record.
    """

    records: tuple[SampleRecord, ...]
    source: str = ""
    calibration_ids: frozenset[str] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise ValidationError("a RecordSet must contain at least one record")
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
        if self.calibration_ids is not None:
            ids = frozenset(self.calibration_ids)
            if not ids:
                raise ValidationError("calibration_ids must be non-empty when given")
            missing = ids - seen
            if missing:
                raise ValidationError(
                    f"calibration_ids not present in records: {sorted(missing)[:5]}"
                )
            object.__setattr__(self, "calibration_ids", ids)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SampleRecord]:
        return iter(self.records)

    def ids(self) -> tuple[str, ...]:
        return tuple(rec.id for rec in self.records)


def _iter_decoded_lines(stream: IO[bytes] | IO[str] | Iterable[bytes | str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ValidationError(f"line {lineno}: not valid UTF-8 ({exc})") from None
        yield lineno, line


def _record_from_obj(obj: object) -> SampleRecord:
    if not isinstance(obj, dict):
        raise ValidationError(f"expected an object, got {type(obj).__name__}")
    if "id" not in obj:
        raise ValidationError("field id: missing")
    if "token_count" not in obj:
        raise ValidationError("field token_count: missing")
    if "correct" not in obj:
        raise ValidationError("field correct: missing")
    tags = obj.get("tags", ())
    if tags is None:
        tags = ()
    if not isinstance(tags, (list, tuple)) or any(not isinstance(t, str) for t in tags):
        raise ValidationError("field tags: must be a list of strings")
    extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}
    return SampleRecord(
        id=obj["id"],
        token_count=obj["token_count"],
        correct=obj["correct"],
        raw_nll=obj.get("raw_nll"),
        token_logprobs=obj.get("token_logprobs"),
        tags=tuple(tags),
        extra=extra,
    )


def parse_records(
    stream: IO[bytes] | IO[str] | Iterable[bytes | str],
    source: str = "",
) -> RecordSet:
    """Parse a line-delimited record stream into a validated RecordSet.

    Input order is preserved. The first offending line aborts the parse
    with a message naming the line number (and, for duplicate ids, both
    lines involved). Blank lines are ignored.
    """
    records: list[SampleRecord] = []
    first_line_of: dict[str, int] = {}
    for lineno, line in _iter_decoded_lines(stream):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed record ({exc.msg})") from None
        try:
            rec = _record_from_obj(obj)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if rec.id in first_line_of:
            raise ValidationError(
                f"duplicate id {rec.id!r} at lines {first_line_of[rec.id]} and {lineno}"
            )
        first_line_of[rec.id] = lineno
        records.append(rec)
    if not records:
        raise ValidationError("no records found in input")
    return RecordSet(tuple(records), source=source)


def _record_to_obj(rec: SampleRecord) -> dict:
    obj: dict = {"id": rec.id}
    if rec.raw_nll is not None:
        obj["raw_nll"] = rec.raw_nll
    if rec.token_logprobs is not None:
        obj["token_logprobs"] = list(rec.token_logprobs)
    obj["token_count"] = rec.token_count
    obj["correct"] = rec.correct
    if rec.tags:
        obj["tags"] = list(rec.tags)
    for key in sorted(rec.extra):
        obj[key] = rec.extra[key]
    return obj


def write_records(records: RecordSet, stream: IO[bytes] | IO[str]) -> None:
    """Write a record file, one JSON object per line, full float precision."""
    binary = _is_binary(stream)
    for rec in records:
        line = json.dumps(_record_to_obj(rec), separators=(",", ":")) + "\n"
        stream.write(line.encode("utf-8") if binary else line)  # type: ignore[arg-type]


def _g9(x: float, name: str) -> str:
    # 9 significant digits; enough for 1e-9 relative round-trip fidelity.
    if not math.isfinite(x):
        raise ValidationError(f"selection field {name}: non-finite value {x!r}")
    return f"{x:.9g}"


def _is_binary(stream: IO) -> bool:
    # Never probe with read(): output streams (pipes, process stdout) are
    # write-only. Classify by type, then mode, then an empty write.
    if isinstance(stream, io.TextIOBase):
        return False
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)):
        return True
    mode = getattr(stream, "mode", "")
    if isinstance(mode, str) and "b" in mode:
        return True
    try:
        stream.write("")
        return False
    except TypeError:
        return True


def write_selection(selection: "Selection", stream: IO[bytes] | IO[str]) -> None:
    """Write a complete selection, one line per sample, rank ascending.

    Floating-point fields are printed with 9 significant digits. Refuses
    to produce an empty file and refuses incomplete rankings.
    """
    samples = list(selection.samples)
    if not samples:
        raise ValidationError("refusing to write an empty selection")
    ranks = sorted(s.rank for s in samples)
    if ranks != list(range(1, len(samples) + 1)):
        raise ValidationError("selection is incomplete: ranks are not a permutation of 1..N")
    binary = _is_binary(stream)
    for s in sorted(samples, key=lambda s: s.rank):
        line = (
            "{"
            f'"id":{json.dumps(s.id)},'
            f'"b":{_g9(s.b, "b")},'
            f'"p":{_g9(s.p, "p")},'
            f'"zpd_score":{_g9(s.zpd_score, "zpd_score")},'
            f'"rank":{s.rank},'
            f'"selected":{"true" if s.selected else "false"}'
            "}\n"
        )
        stream.write(line.encode("utf-8") if binary else line)  # type: ignore[arg-type]


_SELECTION_FIELDS = ("id", "b", "p", "zpd_score", "rank", "selected")


def read_selection(stream: IO[bytes] | IO[str] | Iterable[bytes | str]) -> list[dict]:
    """Parse a selection file back into a list of per-sample dicts."""
    rows: list[dict] = []
    for lineno, line in _iter_decoded_lines(stream):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed selection row ({exc.msg})") from None
        missing = [f for f in _SELECTION_FIELDS if f not in obj]
        if missing:
            raise ValidationError(f"line {lineno}: selection row missing fields {missing}")
        rows.append(obj)
    if not rows:
        raise ValidationError("no selection rows found in input")
    return rows


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file via temp-file-then-rename so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_records(path: str | Path) -> RecordSet:
    with open(path, "rb") as fh:
        return parse_records(fh, source=str(path))


def save_records(path: str | Path, records: RecordSet) -> None:
    import io

    buf = io.StringIO()
    write_records(records, buf)
    atomic_write_text(path, buf.getvalue())


def save_selection(path: str | Path, selection: "Selection") -> None:
    import io

    buf = io.StringIO()
    write_selection(selection, buf)
    atomic_write_text(path, buf.getvalue())


def load_selection(path: str | Path) -> list[dict]:
    with open(path, "rb") as fh:
        return read_selection(fh)
