"""Command-line entry point: ``mmhar <verb> --config PATH ...``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .config import (
    BASELINE, RATIO_SWEEP, ZERO_SHOT, ConfigValidationError, ExperimentConfig, config_hash, config_to_dict,
    load_config,
)
from .data.types import IMU, VIDEO
from .evaluation import FUSED, SUMMARY_COLUMNS, evaluate
from .experiments import (
    load_datasets, run_baseline, run_data_ratio_sweep, run_zero_shot_experiment,
)
from .models.checkpoint import load_checkpoint, save_checkpoint

log = logging.getLogger("mmhar")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class RunConflict(RuntimeError):
    pass


def environment_fingerprint() -> dict:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "torch": torch.__version__,
        "numpy": np.__version__,
        "mmhar": __version__,
    }


def _format(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_summary(path: Path, reports) -> None:
    """Write one row per report in the fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in reports:
            writer.writerow([_format(r.summary_row()[c]) for c in SUMMARY_COLUMNS])


def read_summary(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for c in ("ratio", "top1", "top5", "macro_f1"):
            row[c] = float(row[c])
        for c in ("hidden_count", "seed"):
            row[c] = int(row[c])
    return rows


class RunWriter:
    """Owns one output directory; refuses to reuse it for a different config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.root = Path(cfg.output_dir)
        self.hash = config_hash(cfg)
        manifest = self.root / "manifest.json"
        if manifest.exists():
            previous = json.loads(manifest.read_text()).get("config_hash")
            if previous != self.hash:
                raise RunConflict(f"{manifest} belongs to config {previous}, not {self.hash}; "
                                  "choose another --output")
        self.root.mkdir(parents=True, exist_ok=True)
        manifest.write_text(json.dumps({
            "config": config_to_dict(cfg), "config_hash": self.hash,
            "environment": environment_fingerprint(),
        }, indent=2, sort_keys=True))
        self._log = open(self.root / "metrics.jsonl", "w")
        self._audit = open(self.root / "audit.jsonl", "w")

    def path(self, *parts) -> Path:
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def runs(self, runs, **tags) -> None:
        for run in runs:
            for rec in run.history:
                self._log.write(json.dumps({**tags, **rec}, sort_keys=True) + "\n")
            for stage, epoch, phase, sid, modality in run.audit:
                self._audit.write(json.dumps({**tags, "stage": stage, "epoch": epoch, "phase": phase,
                                              "sample_id": sid, "modality": modality}) + "\n")

    def report(self, name: str, report) -> None:
        self.path("metrics", f"{name}.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))

    def close(self, reports) -> None:
        self._log.close()
        self._audit.close()
        write_summary(self.root / "summary.csv", reports)


def _stage_checkpoints(writer: RunWriter, result, prefix: str = "", seed=None) -> None:
    names = {IMU: "stage1_imu", VIDEO: "stage1_video", FUSED: "stage2_fused"}
    for cond, model in result.models.items():
        save_checkpoint(writer.path("checkpoints", f"{prefix}{names[cond]}.npz"), model, seed=seed)


def execute(cfg: ExperimentConfig) -> list:
    """Run ``cfg.experiment.kind`` and write every artifact under ``output_dir``."""
    writer = RunWriter(cfg)
    reports = []
    try:
        train, test = load_datasets(cfg)
        kind = cfg.experiment.kind
        if kind == BASELINE:
            report, result = run_baseline(cfg, train, test)
            _stage_checkpoints(writer, result, seed=cfg.seed)
            writer.runs(result.runs, seed=cfg.seed)
            writer.report(f"{report.condition.lower()}", report)
            reports = [report]
        elif kind == RATIO_SWEEP:
            reports = run_data_ratio_sweep(cfg, cfg.experiment.ratios, cfg.experiment.seeds, train, test)
            for r in reports:
                writer.report(f"ratio{r.ratio}_seed{r.seed}_{r.condition.lower()}", r)
        elif kind == ZERO_SHOT:
            zs = run_zero_shot_experiment(cfg, cfg.experiment.hidden_counts, cfg.experiment.masked_modality,
                                          train, test)
            for cell in zs.cells:
                for modality, runs in cell.audits.items():
                    writer.runs(runs, hidden_count=cell.hidden_count, masked=modality)
                for label, r in cell.reports.items():
                    safe = label.replace("*", "star").replace("+", "_").lower()
                    writer.report(f"hidden{cell.hidden_count}_{safe}", r)
            writer.path("zero_shot.json").write_text(json.dumps({
                "masked_modality": zs.masked_modality,
                "cells": [{"hidden_count": c.hidden_count, "hidden_classes": list(c.hidden_classes),
                           "hidden_recall": c.hidden_recall,
                           "leaks": {m: [list(p) for p in v] for m, v in c.leaks.items()}} for c in zs.cells],
            }, indent=2, sort_keys=True))
            reports = zs.condition_reports()
    finally:
        writer.close(reports)
    return reports


def run_experiment(config_path, overrides=(), seed=None, output=None, kind=None) -> int:
    """Load, validate and execute a config file; returns the process exit code."""
    try:
        extra = list(overrides)
        if seed is not None:
            extra.append(f"seed={seed}")
        if output is not None:
            extra.append(f"output_dir={json.dumps(str(output))}")
        if kind is not None:
            extra.append(f"experiment.kind={kind}")
        cfg = load_config(config_path, extra)
    except ConfigValidationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        execute(cfg)
    except RunConflict as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        log.exception("run failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _evaluate(args) -> int:
    try:
        cfg = load_config(args.config, args.override)
    except ConfigValidationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        model = load_checkpoint(args.checkpoint)
        _, test = load_datasets(cfg)
        report = evaluate(model, test, args.condition, config_hash=config_hash(cfg), seed=cfg.seed,
                          dataset=cfg.data.dataset)
        out = Path(args.output or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = Path(args.checkpoint).stem
        (out / f"eval_{name}.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        write_summary(out / f"eval_{name}.csv", [report])
        print(json.dumps(report.summary_row()))
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _plot(args) -> int:
    from .reporting import emit_plots

    try:
        for path in emit_plots(args.results, args.output):
            print(path)
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _compare(args) -> int:
    from .reporting import compare_runs

    try:
        csv_path, text = compare_runs(args.results, args.output)
        print(text)
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmhar", description="Two-stage IMU + video activity recognition")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, repeatable")

    for verb, help_text in (("train", "train and evaluate one condition"),
                            ("sweep-ratio", "training-data ratio sweep"),
                            ("zero-shot", "hidden-class modality masking experiment")):
        common(sub.add_parser(verb, help=help_text))

    ev = sub.add_parser("evaluate", help="score a checkpoint on the configured test split")
    common(ev)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--condition", choices=[IMU, VIDEO, FUSED])

    pl = sub.add_parser("plot", help="render ratio-sweep and zero-shot figures")
    pl.add_argument("--results", required=True)
    pl.add_argument("--output", required=True)

    cmp = sub.add_parser("compare", help="side-by-side table of several runs")
    cmp.add_argument("results", nargs="+")
    cmp.add_argument("--output", required=True)
    return parser


VERB_KIND = {"train": BASELINE, "sweep-ratio": RATIO_SWEEP, "zero-shot": ZERO_SHOT}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.verb in VERB_KIND:
        return run_experiment(args.config, args.override, args.seed, args.output, VERB_KIND[args.verb])
    if args.verb == "evaluate":
        if args.seed is not None:
            args.override.append(f"seed={args.seed}")
        return _evaluate(args)
    if args.verb == "plot":
        return _plot(args)
    return _compare(args)


if __name__ == "__main__":
    sys.exit(main())
