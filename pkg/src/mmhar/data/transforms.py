"""Index-level transformations used by the ratio sweep and zero-shot runs."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import replace
from typing import Iterable

import numpy as np

from .types import MODALITIES, DatasetError, DatasetIndex, MaskAudit


def _by_class(index: DatasetIndex) -> dict:
    groups = defaultdict(list)
    for pos, s in enumerate(index.samples):
        groups[s.class_id].append(pos)
    return groups


def subset_by_ratio(index: DatasetIndex, ratio: float, seed: int) -> DatasetIndex:
    """Stratified subsample keeping ``floor(ratio * n_c)`` (at least 1) per class.

    Surviving samples keep their original order.
    """
    if not 0 < ratio <= 1:
        raise DatasetError(f"ratio must lie in (0, 1], got {ratio}")
    if ratio == 1:
        return index
    rng = np.random.default_rng(seed)
    keep = []
    for cls in sorted(_by_class(index)):
        positions = _by_class(index)[cls]
        n_keep = max(1, math.floor(ratio * len(positions)))
        chosen = rng.permutation(len(positions))[:n_keep]
        keep.extend(positions[i] for i in chosen)
    return index.with_samples([index.samples[i] for i in sorted(keep)])


def stratified_split(index: DatasetIndex, fraction: float, seed: int) -> tuple:
    """Carve ``floor(fraction * n_c)`` samples per class into a second index.

    Returns ``(remaining, carved)``. Classes too small to spare a sample stay whole.
    """
    if not 0 <= fraction < 1:
        raise DatasetError(f"fraction must lie in [0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    carved = set()
    groups = _by_class(index)
    for cls in sorted(groups):
        positions = groups[cls]
        n_out = math.floor(fraction * len(positions))
        carved.update(positions[i] for i in rng.permutation(len(positions))[:n_out])
    rest = [s for i, s in enumerate(index.samples) if i not in carved]
    held = [s for i, s in enumerate(index.samples) if i in carved]
    return index.with_samples(rest), index.with_samples(held)


def mask_classes(index: DatasetIndex, modality: str, hidden_classes: Iterable[int]) -> tuple:
    """Withdraw ``modality`` from every sample whose class is hidden.

    No sample is removed; only its ``modality_mask`` shrinks. Returns the new
    index and a :class:`MaskAudit` listing the touched sample ids.
    """
    if modality not in MODALITIES:
        raise DatasetError(f"modality must be one of {MODALITIES}, got {modality!r}")
    hidden = frozenset(int(c) for c in hidden_classes)
    bad = [c for c in hidden if not 0 <= c < index.num_classes]
    if bad:
        raise DatasetError(f"hidden classes {sorted(bad)} outside [0, {index.num_classes})")
    if not hidden:
        return index, MaskAudit(modality, hidden, ())
    samples, affected = [], []
    for s in index.samples:
        if s.class_id in hidden:
            affected.append(s.sample_id)
            s = replace(s, modality_mask=s.modality_mask - {modality})
        samples.append(s)
    return index.with_samples(samples), MaskAudit(modality, hidden, tuple(affected))


def select_hidden_classes(num_classes: int, count: int, seed: int) -> tuple:
    """Uniform draw without replacement, sorted for stable reporting."""
    if not 0 <= count < num_classes:
        raise DatasetError(f"hidden count must lie in [0, {num_classes}), got {count}")
    rng = np.random.default_rng(seed)
    return tuple(sorted(int(c) for c in rng.choice(num_classes, size=count, replace=False)))
