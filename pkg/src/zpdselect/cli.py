"""Command-line entry point.

Subcommands expose each stage of the flow (calibrate, estimate, select,
partition, refresh, simulate) plus an end-to-end `pipeline`. Diagnostics
go to standard error; a selection stream is the only artifact ever
written to standard output. File outputs are written atomically
(temp-file-then-rename), so an interrupted run never leaves a partial
artifact.

Exit codes: 0 success, 1 validation failure in input data, 2
configuration error (bad flag, missing file, malformed config).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__, curriculum, pipeline
from .difficulty import DEFAULT_HALF_WIDTH
from .rasch import EstimationError, ResponseItem, estimate_ability_grid
from .records import (
    RECORD_SCHEMA,
    SELECTION_SCHEMA,
    RecordSet,
    ValidationError,
    atomic_write_text,
    load_records,
    save_records,
    save_selection,
    write_selection,
)
from .selection import Mode
from .synth import SynthSpec, empirical_accuracy, generate_population, parse_dist, save_truth

logger = logging.getLogger("zpdselect")


class ConfigError(Exception):
    """A flag, config key, or referenced path is unusable."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one invocation (config file merged, flags winning)."""

    input: str | None = None
    output: str | None = None
    rho: float | None = None
    norm_half_width: float = DEFAULT_HALF_WIDTH
    calibration_ids: str | None = None
    mode: Mode = Mode.ZPD
    theta: float | None = None
    seed: int = 0
    verbosity: int = 0


_CONFIG_KEYS = {
    "input",
    "output",
    "rho",
    "norm_half_width",
    "calibration_ids",
    "mode",
    "theta",
    "seed",
    "verbosity",
}


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: malformed JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config file {path}: unknown keys {sorted(unknown)}")
    return obj


def _pick(flag_value, file_config: dict, key: str, default):
    # Flags win over the config file, which wins over defaults.
    if flag_value is not None:
        return flag_value
    if key in file_config and file_config[key] is not None:
        return file_config[key]
    return default


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_config = _load_config_file(getattr(args, "config", None))

    def pick(attr: str, key: str, default):
        return _pick(getattr(args, attr, None), file_config, key, default)

    rho = pick("ratio", "rho", None)
    if rho is not None:
        try:
            rho = float(rho)
        except (TypeError, ValueError):
            raise ConfigError(f"rho must be a number, got {rho!r}") from None
        if not (0.0 < rho <= 1.0):
            raise ConfigError(f"rho must lie in (0, 1], got {rho}")

    half_width = pick("norm_half_width", "norm_half_width", DEFAULT_HALF_WIDTH)
    try:
        half_width = float(half_width)
    except (TypeError, ValueError):
        raise ConfigError(f"norm_half_width must be a number, got {half_width!r}") from None
    if not math.isfinite(half_width) or half_width <= 0.0:
        raise ConfigError(f"norm_half_width must be positive, got {half_width}")

    theta = pick("theta", "theta", None)
    if theta is not None:
        try:
            theta = float(theta)
        except (TypeError, ValueError):
            raise ConfigError(f"theta must be a number, got {theta!r}") from None
        if not math.isfinite(theta):
            raise ConfigError(f"theta must be finite, got {theta}")

    mode = pick("mode", "mode", Mode.ZPD)
    try:
        mode = Mode(mode)
    except ValueError:
        raise ConfigError(f"mode must be one of easy, zpd, hard; got {mode!r}") from None

    seed = pick("seed", "seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    verbosity = getattr(args, "verbose", 0) or file_config.get("verbosity", 0) or 0
    if not isinstance(verbosity, int) or verbosity < 0:
        raise ConfigError(f"verbosity must be a non-negative integer, got {verbosity!r}")

    return RunConfig(
        input=pick("input", "input", None),
        output=pick("out", "output", None),
        rho=rho,
        norm_half_width=half_width,
        calibration_ids=pick("calibration_ids", "calibration_ids", None),
        mode=mode,
        theta=theta,
        seed=seed,
        verbosity=verbosity,
    )


def _require_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise ConfigError("an input record file is required (--input or config key 'input')")
    if not Path(cfg.input).is_file():
        raise ConfigError(f"input file not found: {cfg.input}")
    return cfg.input


def _require_rho(cfg: RunConfig) -> float:
    if cfg.rho is None:
        raise ConfigError("a budget ratio is required (--ratio or config key 'rho')")
    return cfg.rho


def _require_output(cfg: RunConfig, what: str) -> str:
    if not cfg.output:
        raise ConfigError(f"an output path is required for the {what} (--out or config key 'output')")
    return cfg.output


def _load_calibration_ids(path: str | None) -> frozenset[str] | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"calibration id file not found: {path}")
    ids = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    if not ids:
        raise ConfigError(f"calibration id file {path} contains no ids")
    return frozenset(ids)


def _emit_selection(selection, output: str | None) -> None:
    if output is None or output == "-":
        write_selection(selection, sys.stdout)
        sys.stdout.flush()
    else:
        save_selection(output, selection)


def _run_composed(cfg: RunConfig, records: RecordSet, mode: Mode) -> pipeline.PipelineResult:
    return pipeline.run(
        records,
        _require_rho(cfg),
        half_width=cfg.norm_half_width,
        calibration_ids=_load_calibration_ids(cfg.calibration_ids),
        mode=mode,
        theta=cfg.theta,
    )


def _summary_line(name: str, result: pipeline.PipelineResult) -> str:
    clamped = result.estimate.clamped if result.estimate is not None else False
    return (
        f"{name}: N={len(result.items)} mu={result.stats.mu:.9g} "
        f"theta={result.theta:.9g} clamped={str(clamped).lower()} k={result.selection.k}"
    )


def _cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    from .difficulty import calibrate_dataset

    records = load_records(_require_input(cfg))
    out = _require_output(cfg, "calibrated-difficulty file")
    items, stats = calibrate_dataset(
        records, cfg.norm_half_width, _load_calibration_ids(cfg.calibration_ids)
    )
    lines = [
        json.dumps(
            {"id": it.id, "raw": it.raw, "calibrated": it.calibrated, "b": it.b, "correct": it.correct},
            separators=(",", ":"),
        )
        for it in items
    ]
    atomic_write_text(out, "\n".join(lines) + "\n")
    print(
        f"calibrate: N={stats.n_records} mu={stats.mu:.9g} "
        f"range=[{stats.min_calibrated:.9g}, {stats.max_calibrated:.9g}]",
        file=sys.stderr,
    )
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    from .difficulty import calibrate_dataset
    from .rasch import estimate_ability

    records = load_records(_require_input(cfg))
    cal_ids = _load_calibration_ids(cfg.calibration_ids)
    items, stats = calibrate_dataset(records, cfg.norm_half_width, cal_ids)
    if cal_ids is None:
        responses = [ResponseItem(it.b, it.correct) for it in items]
    else:
        responses = [ResponseItem(it.b, it.correct) for it in items if it.id in cal_ids]
    est = estimate_ability(responses)
    artifact = {
        "theta": est.theta,
        "iterations": est.iterations,
        "clamped": est.clamped,
        "count_gap": est.count_gap,
        "n": len(items),
        "n_estimation": len(responses),
        "mu": stats.mu,
        "norm_half_width": cfg.norm_half_width,
    }
    print(
        f"estimate: N={len(items)} mu={stats.mu:.9g} theta={est.theta:.9g} "
        f"clamped={str(est.clamped).lower()} count_gap={est.count_gap:.3g} "
        f"iterations={est.iterations}",
        file=sys.stderr,
    )
    if args.grid_oracle:
        grid = estimate_ability_grid(responses, step=args.grid_step)
        discrepancy = abs(grid.theta - est.theta)
        artifact["grid"] = {
            "theta": grid.theta,
            "step": args.grid_step,
            "discrepancy": discrepancy,
        }
        print(
            f"estimate: grid theta={grid.theta:.9g} step={args.grid_step:g} "
            f"discrepancy={discrepancy:.3g}",
            file=sys.stderr,
        )
    if cfg.output:
        atomic_write_text(cfg.output, json.dumps(artifact, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_select(args: argparse.Namespace, name: str = "select") -> int:
    cfg = _resolve(args)
    records = load_records(_require_input(cfg))
    result = _run_composed(cfg, records, cfg.mode)
    _emit_selection(result.selection, cfg.output)
    print(_summary_line(name, result), file=sys.stderr)
    return 0


def _cmd_partition(args: argparse.Namespace) -> int:
    return _cmd_select(args, name="partition")


def _cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    records = load_records(_require_input(cfg))
    result = _run_composed(cfg, records, cfg.mode)
    _emit_selection(result.selection, cfg.output)
    print(_summary_line("pipeline", result), file=sys.stderr)
    if args.grid_oracle and result.estimate is not None:
        cal_ids = _load_calibration_ids(cfg.calibration_ids)
        if cal_ids is None:
            responses = [ResponseItem(it.b, it.correct) for it in result.items]
        else:
            responses = [ResponseItem(it.b, it.correct) for it in result.items if it.id in cal_ids]
        grid = estimate_ability_grid(responses, step=args.grid_step)
        print(
            f"pipeline: grid theta={grid.theta:.9g} step={args.grid_step:g} "
            f"discrepancy={abs(grid.theta - result.theta):.3g}",
            file=sys.stderr,
        )
    return 0


def _cmd_refresh(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if not args.plan:
        raise ConfigError("a stage plan is required (--plan)")
    if not Path(args.plan).is_file():
        raise ConfigError(f"stage plan not found: {args.plan}")
    if not args.state:
        raise ConfigError("a state file path is required (--state)")
    plan = curriculum.load_plan(args.plan)
    state_path = Path(args.state)
    state = curriculum.load_state(state_path) if state_path.is_file() else curriculum.RefreshState()
    if state.stage >= len(plan.stages):
        raise ConfigError(
            f"plan exhausted: {len(plan.stages)} stages, {state.stage} already completed"
        )
    stage = plan.stages[state.stage]
    records_path = cfg.input or stage.records
    if not Path(records_path).is_file():
        raise ConfigError(f"stage record file not found: {records_path}")
    records = load_records(records_path)
    selection, new_state = curriculum.refresh(
        state,
        records,
        stage.rho,
        plan.carry_over,
        half_width=cfg.norm_half_width,
        calibration_ids=_load_calibration_ids(cfg.calibration_ids),
    )
    _emit_selection(selection, cfg.output)
    curriculum.save_state(state_path, new_state)
    print(
        f"refresh: stage={stage.index} N={len(records)} theta={selection.theta:.9g} "
        f"k={selection.k} policy={plan.carry_over.value} "
        f"history={len(new_state.selected_history)}",
        file=sys.stderr,
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    out = _require_output(cfg, "record file")
    try:
        dist = parse_dist(args.dist)
        spec = SynthSpec(
            n_items=args.n,
            theta_star=args.theta_star,
            difficulty_dist=dist,
            nll_noise_sd=args.nll_noise_sd,
            seed=cfg.seed,
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    b_star, records = generate_population(spec)
    save_records(out, records)
    if args.truth_out:
        save_truth(args.truth_out, records, b_star, spec.theta_star)
    print(
        f"simulate: N={spec.n_items} theta_star={spec.theta_star:g} "
        f"accuracy={empirical_accuracy(records):.4f} seed={spec.seed}",
        file=sys.stderr,
    )
    return 0


def _add_common(sub: argparse.ArgumentParser, *, with_input: bool = True) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its keys")
    sub.add_argument(
        "-v", "--verbose", action="count", default=0, help="increase log verbosity (-v, -vv)"
    )
    if with_input:
        sub.add_argument("-i", "--input", help="input record file (line-delimited)")
    sub.add_argument("-o", "--out", help="output path ('-' or omitted: stdout where allowed)")


def _add_selection_flags(sub: argparse.ArgumentParser, *, mode_required: bool = False) -> None:
    sub.add_argument("--ratio", type=float, help="budget ratio rho in (0, 1]")
    sub.add_argument(
        "--mode",
        choices=[m.value for m in Mode],
        required=mode_required,
        help="subset rule: easy, zpd, or hard" + ("" if mode_required else " (default zpd)"),
    )
    sub.add_argument("--theta", type=float, help="override estimated ability (what-if runs)")
    sub.add_argument(
        "--norm-half-width",
        dest="norm_half_width",
        type=float,
        help=f"normalization half-width L (default {DEFAULT_HALF_WIDTH:g})",
    )
    sub.add_argument("--calibration-ids", dest="calibration_ids", help="file of ids, one per line")


def _add_grid_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--grid-oracle",
        action="store_true",
        help="also run the grid-search cross-check and report the discrepancy",
    )
    sub.add_argument("--grid-step", type=float, default=1e-4, help="grid step (default 1e-4)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zpdselect",
        description="Capability-matched training-data selection over line-delimited record files.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__} (schemas: {RECORD_SCHEMA}, {SELECTION_SCHEMA})",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("calibrate", help="write calibrated and normalized difficulties")
    _add_common(p)
    p.add_argument(
        "--norm-half-width",
        dest="norm_half_width",
        type=float,
        help=f"normalization half-width L (default {DEFAULT_HALF_WIDTH:g})",
    )
    p.add_argument("--calibration-ids", dest="calibration_ids", help="file of ids, one per line")
    p.set_defaults(func=_cmd_calibrate)

    p = subs.add_parser("estimate", help="estimate ability from a record file")
    _add_common(p)
    p.add_argument(
        "--norm-half-width",
        dest="norm_half_width",
        type=float,
        help=f"normalization half-width L (default {DEFAULT_HALF_WIDTH:g})",
    )
    p.add_argument("--calibration-ids", dest="calibration_ids", help="file of ids, one per line")
    _add_grid_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = subs.add_parser("select", help="rank by proximity score and select the budget")
    _add_common(p)
    _add_selection_flags(p)
    p.set_defaults(func=_cmd_select)

    p = subs.add_parser("partition", help="select under an explicit easy/zpd/hard rule")
    _add_common(p)
    _add_selection_flags(p, mode_required=True)
    p.set_defaults(func=_cmd_partition)

    p = subs.add_parser("refresh", help="run the next stage of a staged re-selection plan")
    _add_common(p)
    p.add_argument("--plan", help="stage plan JSON file")
    p.add_argument("--state", help="state checkpoint file (created if missing)")
    p.add_argument(
        "--norm-half-width",
        dest="norm_half_width",
        type=float,
        help=f"normalization half-width L (default {DEFAULT_HALF_WIDTH:g})",
    )
    p.add_argument("--calibration-ids", dest="calibration_ids", help="file of ids, one per line")
    p.set_defaults(func=_cmd_refresh)

    p = subs.add_parser("simulate", help="generate a synthetic record file with known truth")
    _add_common(p, with_input=False)
    p.add_argument("--n", type=int, required=True, help="number of items")
    p.add_argument("--theta-star", dest="theta_star", type=float, required=True, help="true ability")
    p.add_argument(
        "--dist",
        default="uniform:-3,3",
        help="difficulty distribution: uniform:a,b | normal:m,s | bimodal:m1,s1,m2,s2,w",
    )
    p.add_argument("--nll-noise-sd", dest="nll_noise_sd", type=float, default=0.0)
    p.add_argument("--seed", type=int, help="generator seed (default 0)")
    p.add_argument("--truth-out", dest="truth_out", help="sidecar path for (id, b*, theta*) truth")
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("pipeline", help="end-to-end: calibrate, estimate, score, select")
    _add_common(p)
    _add_selection_flags(p)
    _add_grid_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING
    verbose = getattr(args, "verbose", 0)
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"zpdselect: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, EstimationError) as exc:
        print(f"zpdselect: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"zpdselect: i/o error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
