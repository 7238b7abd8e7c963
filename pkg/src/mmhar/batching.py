"""Turn lists of samples into model-ready tensors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .data.types import IMU, MODALITIES, VIDEO


@dataclass
class Batch:
    sensor: torch.Tensor
    video: torch.Tensor
    present: dict
    labels: torch.Tensor
    sample_ids: list

    def consumed(self, modalities) -> list:
        """``(sample_id, modality)`` pairs this batch feeds to an encoder."""
        out = []
        for m in modalities:
            flags = self.present[m].tolist()
            out.extend((sid, m) for sid, on in zip(self.sample_ids, flags) if on)
        return out


def _placeholder(samples, attr, field_name):
    for s in samples:
        payload = getattr(s, attr)
        if payload is not None:
            return np.zeros_like(getattr(payload, field_name))
    return None


def collate(samples, use=MODALITIES, dtype=torch.float32) -> Batch:
    """Stack payloads; a modality is present for a row only if it is in the
    row's ``modality_mask`` and listed in ``use``. Absent rows hold zeros."""
    sensor_zero = _placeholder(samples, "sensor", "values")
    video_zero = _placeholder(samples, "video", "frames")
    sensors, videos = [], []
    for s in samples:
        sensors.append(s.sensor.values if s.sensor is not None and s.has(IMU) else sensor_zero)
        videos.append(s.video.frames if s.video is not None and s.has(VIDEO) else video_zero)
    present = {
        m: torch.tensor([m in use and s.has(m) for s in samples], dtype=torch.bool) for m in MODALITIES
    }
    return Batch(
        sensor=torch.from_numpy(np.stack(sensors)).to(dtype) if sensor_zero is not None else torch.zeros(len(samples), 1, 1),
        video=torch.from_numpy(np.stack(videos)).to(dtype) if video_zero is not None else torch.zeros(len(samples), 1, 1, 1, 3),
        present=present,
        labels=torch.tensor([s.class_id for s in samples], dtype=torch.long),
        sample_ids=[s.sample_id for s in samples],
    )


def iter_batches(samples, batch_size: int, order=None):
    order = range(len(samples)) if order is None else order
    order = list(order)
    for start in range(0, len(order), batch_size):
        yield [samples[i] for i in order[start:start + batch_size]]


@torch.no_grad()
def predict_logits(model, samples, use=MODALITIES, batch_size: int = 64) -> tuple:
    """Eval-mode logits for ``samples``; returns ``(logits, labels, consumed)``."""
    was = model.training
    model.eval()
    dtype = next(model.parameters()).dtype
    logits, labels, consumed = [], [], []
    try:
        for chunk in iter_batches(samples, batch_size):
            b = collate(chunk, use, dtype)
            logits.append(model(sensor=b.sensor, video=b.video, present=b.present))
            labels.append(b.labels)
            consumed.extend(b.consumed(use))
    finally:
        model.train(was)
    return torch.cat(logits), torch.cat(labels), consumed
