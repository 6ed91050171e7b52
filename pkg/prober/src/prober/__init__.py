"""Model probing: teacher-forced reference scoring and answer grading.

Feeds a dataset of instruction/input/output samples through a causal
language model twice: once teacher-forced to get per-token
log-probabilities of the reference output (prompt tokens conditioned
on, never scored), and once generatively to grade the model's own
answer. Results land in a line-delimited records file a selection
pipeline can consume directly, with a sibling manifest accounting for
every sample.
"""

from .backends import Backend, ContextOverflow, StaticBackend, TorchCausalBackend, build_backend
from .extraction import extract_choice, extract_number, gold_choice, gold_number, grade
from .probe import (
    MANIFEST_SCHEMA,
    CorrectnessResult,
    NllRow,
    ProbeResult,
    emit_records,
    manifest_path_for,
    probe_correctness,
    probe_nll,
    run_probe,
)
from .tasks import (
    Decoding,
    ProbeError,
    ProbeTask,
    Sample,
    TaskFormat,
    load_dataset,
    load_task,
    parse_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "ContextOverflow",
    "CorrectnessResult",
    "Decoding",
    "MANIFEST_SCHEMA",
    "NllRow",
    "ProbeError",
    "ProbeResult",
    "ProbeTask",
    "Sample",
    "StaticBackend",
    "TaskFormat",
    "TorchCausalBackend",
    "__version__",
    "build_backend",
    "emit_records",
    "extract_choice",
    "extract_number",
    "gold_choice",
    "gold_number",
    "grade",
    "load_dataset",
    "load_task",
    "manifest_path_for",
    "parse_dataset",
    "probe_correctness",
    "probe_nll",
    "run_probe",
]
