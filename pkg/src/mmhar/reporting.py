"""Static figures and cross-run comparison tables built from ``summary.csv`` files."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .cli import read_summary
from .data.types import IMU, VIDEO
from .evaluation import FUSED
from .experiments import ZERO_SHOT_CONDITIONS

ROW_LABELS = {IMU: "IMU only", VIDEO: "Video only", FUSED: "IMU + Video"}


def _collect(results_dir) -> list:
    root = Path(results_dir)
    files = [root] if root.is_file() else sorted(root.rglob("summary.csv"))
    rows = []
    for f in files:
        for row in read_summary(f):
            row["source"] = str(f.parent)
            rows.append(row)
    return rows


def _mean_by(rows, keys, metric):
    acc = defaultdict(list)
    for r in rows:
        acc[tuple(r[k] for k in keys)].append(r[metric])
    return {k: float(np.mean(v)) for k, v in acc.items()}


def emit_plots(results_dir, out_dir) -> list:
    """Ratio-vs-top-1 line plot and zero-shot accuracy/F1 bar charts.

    Values are averaged over seeds. Raises if nothing plottable is found;
    no file is written in that case.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _collect(results_dir)
    if not rows:
        raise ValueError(f"no summary rows under {results_dir}")
    zero_shot = [r for r in rows if r["condition"] in ZERO_SHOT_CONDITIONS]
    plain = [r for r in rows if r["condition"] not in ZERO_SHOT_CONDITIONS]
    # only runs that vary the ratio feed the sweep curve
    ratios_by_source = defaultdict(set)
    for r in plain:
        ratios_by_source[r["source"]].add(r["ratio"])
    sweep = [r for r in plain if len(ratios_by_source[r["source"]]) > 1]
    if not zero_shot and not sweep:
        raise ValueError(f"{results_dir} holds neither a ratio sweep nor a zero-shot result set")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if sweep:
        datasets = sorted({r["dataset"] for r in sweep})
        fig, axes = plt.subplots(1, len(datasets), figsize=(5 * len(datasets), 4), squeeze=False)
        means = _mean_by(sweep, ("dataset", "condition", "ratio"), "top1")
        for ax, ds in zip(axes[0], datasets):
            for cond in sorted({r["condition"] for r in sweep if r["dataset"] == ds}):
                pts = sorted((k[2], v) for k, v in means.items() if k[0] == ds and k[1] == cond)
                ax.plot([p[0] * 100 for p in pts], [p[1] * 100 for p in pts], marker="o", label=cond)
            ax.set_title(ds)
            ax.set_xlabel("training data used (%)")
            ax.set_ylabel("top-1 accuracy (%)")
            ax.grid(alpha=0.3)
            ax.legend()
        fig.tight_layout()
        path = out / "ratio_sweep.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    if zero_shot:
        counts = sorted({r["hidden_count"] for r in zero_shot})
        conds = [c for c in ZERO_SHOT_CONDITIONS if any(r["condition"] == c for r in zero_shot)]
        width = 0.8 / len(conds)
        for metric, label, fname in (("top1", "accuracy (%)", "zero_shot_accuracy.png"),
                                     ("macro_f1", "F1 score (%)", "zero_shot_f1.png")):
            means = _mean_by(zero_shot, ("condition", "hidden_count"), metric)
            fig, ax = plt.subplots(figsize=(6, 4))
            x = np.arange(len(counts))
            for i, cond in enumerate(conds):
                ax.bar(x + i * width - 0.4 + width / 2, [means.get((cond, c), np.nan) * 100 for c in counts],
                       width, label=cond)
            ax.set_xticks(x, [f"num_classes={c}" for c in counts])
            ax.set_ylabel(label)
            ax.legend()
            fig.tight_layout()
            path = out / fname
            fig.savefig(path, dpi=120)
            plt.close(fig)
            written.append(path)
    return written


def compare_runs(results_dirs, out_dir) -> tuple:
    """Align baseline rows of several runs into one method x dataset table.

    Writes ``comparison.csv`` and ``comparison.txt`` into ``out_dir`` and
    returns ``(csv_path, text)``. A row lacking some dataset gets a note in
    the ``warning`` column.
    """
    if len(results_dirs) < 2:
        raise ValueError("compare needs at least two result sets")
    per_run = []
    for d in results_dirs:
        rows = [r for r in _collect(d) if r["condition"] not in ZERO_SHOT_CONDITIONS]
        if not rows:
            raise ValueError(f"no summary rows under {d}")
        per_run.append(rows)

    datasets = sorted({r["dataset"] for rows in per_run for r in rows})
    table = []  # each entry: {"condition": c, dataset: (top1, top5, f1)}
    for rows in per_run:
        # average seeds / ratios at full data within one run
        full = [r for r in rows if r["ratio"] == 1.0 and r["hidden_count"] == 0] or rows
        groups = defaultdict(list)
        for r in full:
            groups[(r["condition"], r["dataset"])].append(r)
        for (cond, ds), rs in sorted(groups.items()):
            vals = tuple(float(np.mean([r[m] for r in rs])) for m in ("top1", "top5", "macro_f1"))
            slot = next((t for t in table if t["condition"] == cond and ds not in t), None)
            if slot is None:
                slot = {"condition": cond}
                table.append(slot)
            slot[ds] = vals

    header = ["method"] + [f"{ds}_{m}" for ds in datasets for m in ("top1", "top5", "f1")] + ["warning"]
    lines = []
    for row in table:
        missing = [ds for ds in datasets if ds not in row]
        cells = [ROW_LABELS.get(row["condition"], row["condition"])]
        for ds in datasets:
            cells += [f"{v * 100:.2f}" for v in row[ds]] if ds in row else ["-", "-", "-"]
        cells.append(f"missing {','.join(missing)}" if missing else "")
        lines.append(cells)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "comparison.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(lines)
    widths = [max(len(str(r[i])) for r in [header] + lines) for i in range(len(header))]
    text = "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + lines)
    (out / "comparison.txt").write_text(text + "\n")
    return csv_path, text
