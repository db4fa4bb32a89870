"""Command-line front end: curate, retarget, metrics, and the chained pipeline.

Batch semantics shared by every subcommand: each clip is processed
independently, failures are reported and skipped, and the exit status is zero
exactly when no processing error occurred (a clip rejected by curation is a
result, not an error).  Progress goes to stderr; machine-readable results go
to files only, so reruns with the same inputs, config, and seed are
byte-identical.

Settings come from a JSON config file (--config, or the PHYSINK_CONFIG
environment variable); --mode and --seed override the loaded config.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_pipeline_config, override_config
from .curation import contact_scores, curate
from .kinematics import adapt_source_shape, load_correspondence, rigid_scale
from .metrics import METRIC_NAMES, aggregate_reports, quality_report
from .motion import (
    MotionFormatError,
    load_retargeted_motion,
    load_source_motion,
    save_retargeted_motion,
    save_source_motion,
)
from .retarget import MODE_CHOICES, retarget
from .robot import load_robot_model
from .validation import RetargetError

CURATION_REPORT = "curation_report"
_SKIP_STEMS = {CURATION_REPORT, "metrics"}

_ERRORS = (MotionFormatError, RetargetError, ConfigError, ValueError, OSError)


class CliError(Exception):
    """Setup problem that prevents any processing (bad config, missing files)."""


# ---------------------------------------------------------------------------
# input enumeration and execution helpers


def _enumerate(path: Path) -> list[Path]:
    """Motion files under a directory (or the file itself), sorted by name."""
    if path.is_dir():
        files = sorted(
            p for p in path.glob("*.json") if p.stem not in _SKIP_STEMS
        )
        if not files:
            raise CliError(f"no motion files found in {path}")
        return files
    if path.is_file():
        return [path]
    raise CliError(f"input {path} does not exist")


def _run_jobs(jobs, worker, workers: int):
    """Run worker over jobs, inline or in a process pool; order preserved."""
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _report_failures(results) -> int:
    failures = [(stem, err) for stem, ok, err in results if not ok]
    for stem, err in failures:
        _progress(f"error: {stem}: {err}")
    if failures:
        _progress(f"{len(failures)} of {len(results)} clip(s) failed")
    return 1 if failures else 0


def _load_model_and_corr(cfg: PipelineConfig, joint_names):
    if cfg.robot_path is None:
        raise CliError("config has no robot model path (paths.robot)")
    if cfg.correspondence_path is None:
        raise CliError("config has no correspondence path (paths.correspondence)")
    model = load_robot_model(cfg.robot_path)
    corr = load_correspondence(cfg.correspondence_path, joint_names, model)
    return model, corr


# ---------------------------------------------------------------------------
# per-clip workers (module level so a process pool can pickle them)


def _curate_job(job):
    in_path, out_dir, cfg = job
    stem = in_path.stem
    try:
        motion = load_source_motion(in_path)
        kept, report = curate(
            motion,
            cfg.thresholds,
            cfg.filter,
            delta=cfg.ground_delta,
            ramp_top=cfg.ramp_top,
            root_joint=cfg.joints.root,
            spine_joint=cfg.joints.spine,
            support_joints=cfg.joints.support,
        )
        passing = [c for c in report.clips if c.passed]
        for clip_report, clip in zip(passing, kept):
            save_source_motion(
                clip, out_dir / f"{stem}_clip{clip_report.clip_index:02d}.json"
            )
        return stem, True, report
    except _ERRORS as exc:
        return stem, False, f"{type(exc).__name__}: {exc}"


def _retarget_job(job):
    in_path, out_dir, cfg = job
    stem = in_path.stem
    try:
        source = load_source_motion(in_path)
        model, corr = _load_model_and_corr(cfg, source.joint_names)
        result, trace = retarget(
            source,
            model,
            corr,
            cfg.optimizer,
            ramp_top=cfg.ramp_top,
            heading_joints=cfg.joints.heading,
        )
        save_retargeted_motion(result, out_dir / f"{stem}.json")
        trace.to_csv(out_dir / f"{stem}_trace.csv")
        return stem, True, float(trace.best[-1])
    except (CliError, *_ERRORS) as exc:
        return stem, False, f"{type(exc).__name__}: {exc}"


def _metrics_job(job):
    ret_path, src_path, cfg = job
    stem = ret_path.stem
    try:
        source = load_source_motion(src_path)
        retargeted = load_retargeted_motion(ret_path)
        model, corr = _load_model_and_corr(cfg, source.joint_names)
        # score against the same preprocessed source the optimizer tracked
        if cfg.optimizer.mode == "ik":
            work, _ = rigid_scale(source, corr, model)
        else:
            work = adapt_source_shape(source, corr, model)
        contacts = contact_scores(work, cfg.ramp_top)
        report = quality_report(
            retargeted,
            work,
            corr,
            model,
            contacts,
            source.fps,
            margin=cfg.optimizer.limit_margin,
        )
        return stem, True, report
    except (CliError, *_ERRORS) as exc:
        return stem, False, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# report writers


def _write_curation_reports(results, out_dir: Path) -> None:
    import csv
    import json

    from .curation import CSV_COLUMNS

    by_file = {stem: report.to_dict() for stem, ok, report in results if ok}
    with open(out_dir / f"{CURATION_REPORT}.json", "w") as fh:
        json.dump({"files": by_file}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out_dir / f"{CURATION_REPORT}.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=("file", *CSV_COLUMNS))
        writer.writeheader()
        for stem, ok, report in sorted(r for r in results if r[1]):
            for row in report.csv_rows():
                writer.writerow({"file": stem, **row})


def _write_metrics_reports(results, out_dir: Path) -> None:
    import csv
    import json

    rows = {stem: report for stem, ok, report in results if ok}
    aggregate = aggregate_reports(list(rows.values())) if rows else {}
    payload = {
        "clips": {stem: report.to_dict() for stem, report in rows.items()},
        "aggregate": aggregate,
    }
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("clip", *METRIC_NAMES))
        fmt = lambda v: "" if v is None else repr(float(v))
        for stem in sorted(rows):
            report = rows[stem].to_dict()
            writer.writerow(
                (stem, *(fmt(report[name]["percent"]) for name in METRIC_NAMES))
            )
        for stat in ("mean", "median"):
            writer.writerow(
                (
                    f"({stat})",
                    *(
                        fmt(aggregate[name][stat]) if name in aggregate else ""
                        for name in METRIC_NAMES
                    ),
                )
            )


# ---------------------------------------------------------------------------
# stages


def _stage_curate(input_path: Path, out_dir: Path, cfg, workers: int) -> int:
    files = _enumerate(input_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _run_jobs([(f, out_dir, cfg) for f in files], _curate_job, workers)
    for stem, ok, report in results:
        if ok:
            _progress(
                f"[curate] {stem}: kept {report.kept_count}/"
                f"{report.kept_count + report.discarded_count} clip(s)"
            )
    _write_curation_reports(results, out_dir)
    return _report_failures(results)


def _stage_retarget(input_path: Path, out_dir: Path, cfg, workers: int) -> int:
    files = _enumerate(input_path)
    # fail before processing when the model itself is unusable
    try:
        _load_model_and_corr(cfg, load_source_motion(files[0]).joint_names)
    except _ERRORS as exc:
        raise CliError(f"cannot set up retargeting: {exc}") from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _run_jobs([(f, out_dir, cfg) for f in files], _retarget_job, workers)
    for stem, ok, best in results:
        if ok:
            _progress(f"[retarget] {stem}: best loss {best:.6g}")
    return _report_failures(results)


def _pair_by_stem(ret_dir: Path, src_dir: Path) -> list[tuple[Path, Path]]:
    ret = {p.stem: p for p in _enumerate(ret_dir)}
    src = {p.stem: p for p in _enumerate(src_dir)}
    unpaired = sorted(set(ret) ^ set(src))
    if unpaired:
        raise CliError(
            "unpaired files (stem present on one side only): " + ", ".join(unpaired)
        )
    return [(ret[stem], src[stem]) for stem in sorted(ret)]


def _stage_metrics(ret_dir: Path, src_dir: Path, out_dir: Path, cfg, workers: int) -> int:
    pairs = _pair_by_stem(ret_dir, src_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _run_jobs([(r, s, cfg) for r, s in pairs], _metrics_job, workers)
    for stem, ok, report in results:
        if ok:
            _progress(f"[metrics] {stem}")
    _write_metrics_reports(results, out_dir)
    return _report_failures(results)


def _dry_run(args, cfg) -> int:
    """Validate config and inputs without writing anything."""
    status = 0
    if args.command in ("retarget", "metrics", "pipeline"):
        try:
            if cfg.robot_path is None or cfg.correspondence_path is None:
                raise CliError("config must name robot and correspondence paths")
            load_robot_model(cfg.robot_path)
        except (CliError, *_ERRORS) as exc:
            _progress(f"config problem: {exc}")
            status = 1
    if args.command == "metrics":
        inputs = [args.retargeted, args.sources]
    else:
        inputs = [args.input]
    for path in inputs:
        try:
            files = _enumerate(Path(path))
        except CliError as exc:
            _progress(str(exc))
            status = 1
            continue
        for f in files:
            try:
                if args.command == "metrics" and Path(path) == Path(args.retargeted):
                    load_retargeted_motion(f)
                else:
                    load_source_motion(f)
                _progress(f"would process {f}")
            except _ERRORS as exc:
                _progress(f"invalid input {f}: {type(exc).__name__}: {exc}")
                status = 1
    _progress("dry run: nothing written")
    return status


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, default=None, help="pipeline config JSON")
    shared.add_argument("--output", type=Path, default=Path("physink_out"), help="output directory")
    shared.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel clip workers (1 = inline)",
    )
    shared.add_argument("--seed", type=int, default=None, help="override optimizer seed")
    shared.add_argument(
        "--mode",
        choices=MODE_CHOICES,
        default=None,
        help="override retargeting mode",
    )
    shared.add_argument(
        "--dry-run",
        action="store_true",
        help="validate config and inputs, write nothing",
    )

    parser = argparse.ArgumentParser(
        prog="physink",
        description="Motion curation, physics-constrained retargeting, and reliability metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", parents=[shared], help="filter a motion into clean 4 s clips")
    p.add_argument("input", type=Path, help="motion file or directory")

    p = sub.add_parser("retarget", parents=[shared], help="optimize robot motions for curated clips")
    p.add_argument("input", type=Path, help="clip file or directory")

    p = sub.add_parser("metrics", parents=[shared], help="score retargeted motions against sources")
    p.add_argument("retargeted", type=Path, help="retargeted motion directory")
    p.add_argument("sources", type=Path, help="source clip directory")

    p = sub.add_parser("pipeline", parents=[shared], help="curate, retarget, and score in one run")
    p.add_argument("input", type=Path, help="motion file or directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_pipeline_config(args.config)
    except ConfigError as exc:
        _progress(str(exc))
        return 2
    cfg = override_config(cfg, mode=args.mode, seed=args.seed)
    workers = max(1, args.workers)

    if args.dry_run:
        return _dry_run(args, cfg)

    try:
        if args.command == "curate":
            return _stage_curate(args.input, args.output, cfg, workers)
        if args.command == "retarget":
            return _stage_retarget(args.input, args.output, cfg, workers)
        if args.command == "metrics":
            return _stage_metrics(args.retargeted, args.sources, args.output, cfg, workers)
        # pipeline: chain the stages under one output root
        out = args.output
        status = _stage_curate(args.input, out / "curated", cfg, workers)
        clip_dir = out / "curated"
        if not any(p.stem not in _SKIP_STEMS for p in clip_dir.glob("*.json")):
            _progress("pipeline: no clips survived curation")
            return status
        status |= _stage_retarget(clip_dir, out / "retargeted", cfg, workers)
        status |= _stage_metrics(
            out / "retargeted", clip_dir, out / "metrics", cfg, workers
        )
        return status
    except CliError as exc:
        _progress(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
