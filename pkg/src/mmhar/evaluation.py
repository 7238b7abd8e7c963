"""Top-k accuracy, macro-F1 and test-set evaluation reports."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
import torch

from .batching import predict_logits
from .data.types import IMU, MODALITIES, VIDEO, DatasetIndex
from .models.fusion import FusionModel, SingleModalityModel

FUSED = "FUSED"
CONDITIONS = (IMU, VIDEO, FUSED)
CONDITION_INPUTS = {IMU: (IMU,), VIDEO: (VIDEO,), FUSED: MODALITIES}

SUMMARY_COLUMNS = ("dataset", "condition", "ratio", "hidden_count", "seed", "top1", "top5", "macro_f1")


def _as_numpy(x) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().numpy()
    return np.asarray(x)


def label_ranks(logits, labels) -> np.ndarray:
    """Zero-based rank of each row's true class.

    Classes scoring strictly higher rank ahead; equal scores rank by
    smaller class index first.
    """
    z = _as_numpy(logits).astype(np.float64)
    y = _as_numpy(labels).astype(np.int64)
    true = z[np.arange(len(y)), y][:, None]
    cols = np.arange(z.shape[1])[None, :]
    ahead = (z > true) | ((z == true) & (cols < y[:, None]))
    return ahead.sum(axis=1)


def top_k_accuracy(logits, labels, k: int) -> float:
    z = _as_numpy(logits)
    if z.ndim != 2:
        raise ValueError(f"logits must be [batch, classes], got shape {z.shape}")
    if not 1 <= k <= z.shape[1]:
        raise ValueError(f"k must lie in [1, {z.shape[1]}], got {k}")
    if len(z) == 0:
        raise ValueError("no rows to score")
    return float((label_ranks(z, labels) < k).mean())


def predictions(logits) -> np.ndarray:
    """Arg-max with ties going to the smallest class index."""
    return _as_numpy(logits).argmax(axis=1)


def per_class_counts(preds, labels, num_classes: int) -> tuple:
    preds, labels = _as_numpy(preds).astype(np.int64), _as_numpy(labels).astype(np.int64)
    tp = np.bincount(labels[preds == labels], minlength=num_classes)[:num_classes]
    pred_count = np.bincount(preds, minlength=num_classes)[:num_classes]
    true_count = np.bincount(labels, minlength=num_classes)[:num_classes]
    return tp, pred_count - tp, true_count - tp


def macro_f1(preds, labels, num_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with P + R = 0 scores 0.

    Per-class F1 is ``2TP / (2TP + FP + FN)``; the mean is reduced in exact
    rationals so the result is the correctly rounded value.
    """
    preds, labels = _as_numpy(preds), _as_numpy(labels)
    if len(preds) != len(labels):
        raise ValueError(f"{len(preds)} predictions for {len(labels)} labels")
    tp, fp, fn = per_class_counts(preds, labels, num_classes)
    total = sum((Fraction(2 * int(t), 2 * int(t) + int(p) + int(n)) for t, p, n in zip(tp, fp, fn) if t),
                Fraction(0))
    return float(total / num_classes)


def per_class_recall(preds, labels, num_classes: int) -> list:
    tp, _, fn = per_class_counts(preds, labels, num_classes)
    return [float(t / (t + f)) if t + f else float("nan") for t, f in zip(tp, fn)]


@dataclass
class MetricsReport:
    top1: float
    top5: float
    macro_f1: float
    num_samples: int
    config_hash: str = ""
    seed: int = 0
    dataset: str = ""
    condition: str = FUSED
    ratio: float = 1.0
    hidden_count: int = 0
    per_class_recall: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("top1", "top5", "macro_f1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.top1 > self.top5:
            raise ValueError(f"top1 {self.top1} exceeds top5 {self.top5}")

    def to_dict(self) -> dict:
        return asdict(self)

    def summary_row(self) -> dict:
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}


def model_inputs(model, condition: str | None) -> tuple:
    if isinstance(model, SingleModalityModel):
        if condition not in (None, model.modality):
            raise ValueError(f"a {model.modality}-only model cannot be evaluated under {condition}")
        return (model.modality,)
    if isinstance(model, FusionModel):
        return CONDITION_INPUTS[condition or FUSED]
    raise TypeError(f"cannot evaluate {type(model).__name__}")


def metrics_from_logits(logits, labels, num_classes: int, **tags) -> MetricsReport:
    preds = predictions(logits)
    return MetricsReport(
        top1=top_k_accuracy(logits, labels, 1),
        top5=top_k_accuracy(logits, labels, min(5, num_classes)),
        macro_f1=macro_f1(preds, labels, num_classes),
        num_samples=len(labels),
        per_class_recall=per_class_recall(preds, labels, num_classes),
        **tags,
    )


def evaluate(model, test_index: DatasetIndex, condition: str | None = None, **tags) -> MetricsReport:
    """Deterministic eval-mode pass over the whole index.

    For a fused model, single-modality conditions feed zero features for the
    other modality. Extra keyword tags land on the report.
    """
    if len(test_index) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    use = model_inputs(model, condition)
    logits, labels, _ = predict_logits(model, list(test_index.samples), use)
    if condition is None:
        condition = model.modality if isinstance(model, SingleModalityModel) else FUSED
    tags.setdefault("dataset", test_index.name)
    return metrics_from_logits(logits, labels, test_index.num_classes, condition=condition, **tags)
