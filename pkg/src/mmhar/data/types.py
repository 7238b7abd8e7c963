"""Core sample containers shared by loaders, transforms and the training loop."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

IMU = "IMU"
VIDEO = "VIDEO"
MODALITIES = (IMU, VIDEO)

TRAIN = "TRAIN"
TEST = "TEST"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SensorSequence:
    """Multivariate IMU series stored as ``[channels, timesteps]``."""

    values: np.ndarray
    sample_rate_hz: float
    channel_names: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise DatasetError(f"sensor values must be 2-D [channels, timesteps], got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DatasetError(f"sensor sequence needs >=1 channel and >=1 step, got {values.shape}")
        if not self.sample_rate_hz > 0:
            raise DatasetError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        names = tuple(self.channel_names) or tuple(f"ch{i}" for i in range(values.shape[0]))
        if len(names) != values.shape[0]:
            raise DatasetError(f"{len(names)} channel names for {values.shape[0]} channels")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", names)

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class VideoClip:
    """RGB frames stored as ``[time, height, width, 3]`` with values in [0, 1]."""

    frames: np.ndarray
    frame_rate_hz: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise DatasetError(f"video frames must be [T, H, W, 3], got shape {frames.shape}")
        if frames.shape[0] < 1:
            raise DatasetError("video clip has no frames")
        if not self.frame_rate_hz > 0:
            raise DatasetError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        if frames.size and (frames.min() < 0.0 or frames.max() > 1.0):
            raise DatasetError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class LabeledSample:
    sample_id: str
    subject_id: int
    class_id: int
    sensor: Optional[SensorSequence] = None
    video: Optional[VideoClip] = None
    modality_mask: frozenset = frozenset(MODALITIES)

    def __post_init__(self):
        mask = frozenset(self.modality_mask)
        unknown = mask - set(MODALITIES)
        if unknown:
            raise DatasetError(f"unknown modalities in mask: {sorted(unknown)}")
        if self.sensor is None and self.video is None:
            raise DatasetError(f"sample {self.sample_id} carries no modality")
        # a modality can only be offered if its payload exists
        present = {m for m, x in ((IMU, self.sensor), (VIDEO, self.video)) if x is not None}
        object.__setattr__(self, "modality_mask", mask & present)

    def has(self, modality: str) -> bool:
        return modality in self.modality_mask


@dataclass(frozen=True)
class DatasetIndex:
    samples: tuple
    num_classes: int
    class_names: tuple = ()
    split_tag: str = TRAIN
    name: str = ""
    skipped: tuple = ()

    def __post_init__(self):
        samples = tuple(self.samples)
        if self.split_tag not in (TRAIN, TEST):
            raise DatasetError(f"split_tag must be TRAIN or TEST, got {self.split_tag!r}")
        seen = set()
        for s in samples:
            if not 0 <= s.class_id < self.num_classes:
                raise DatasetError(f"sample {s.sample_id}: class_id {s.class_id} outside [0, {self.num_classes})")
            if s.sample_id in seen:
                raise DatasetError(f"duplicate sample_id {s.sample_id}")
            seen.add(s.sample_id)
        names = tuple(self.class_names) or tuple(str(c) for c in range(self.num_classes))
        if len(names) != self.num_classes:
            raise DatasetError(f"{len(names)} class names for {self.num_classes} classes")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "class_names", names)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.class_id for s in self.samples], dtype=np.int64)

    @property
    def subjects(self) -> set:
        return {s.subject_id for s in self.samples}

    def eligible(self, modality: str) -> list:
        return [s for s in self.samples if s.has(modality)]

    def with_samples(self, samples: Sequence[LabeledSample]) -> "DatasetIndex":
        return replace(self, samples=tuple(samples))

    def by_id(self) -> dict:
        return {s.sample_id: s for s in self.samples}


@dataclass(frozen=True)
class MaskAudit:
    """Record of which samples lost a modality in :func:`mask_classes`."""

    modality: str
    hidden_classes: frozenset
    affected_sample_ids: tuple = field(default_factory=tuple)
