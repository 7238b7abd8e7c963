"""Synthetic bimodal dataset with analytically known single-modality ceilings.

Class ``(a, b)`` puts factor ``a`` only into the sensor stream (an integer
frequency sinusoid) and factor ``b`` only into the video stream (a square
translating in direction ``b``). A sensor-only classifier can therefore
never beat ``1/B`` and a video-only one ``1/A``; fusing both recovers the class.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .types import TEST, TRAIN, DatasetError, DatasetIndex, LabeledSample, SensorSequence, VideoClip

BACKGROUND = 0.25
FOREGROUND = 0.75


@dataclass(frozen=True)
class SyntheticSpec:
    num_imu_factors: int = 4
    num_video_factors: int = 4
    samples_per_class: int = 24
    noise_std: float = 0.35
    seq_len: int = 96
    clip_shape: tuple = (8, 16, 16)
    num_channels: int = 3
    test_samples_per_class: int | None = None
    sample_rate_hz: float = 50.0
    frame_rate_hz: float = 15.0

    def __post_init__(self):
        object.__setattr__(self, "clip_shape", tuple(int(v) for v in self.clip_shape))
        if self.num_imu_factors < 1 or self.num_video_factors < 1:
            raise DatasetError("factor counts must be >= 1")
        if self.samples_per_class < 1:
            raise DatasetError("samples_per_class must be >= 1")
        if self.noise_std < 0:
            raise DatasetError("noise_std must be nonnegative")
        if self.seq_len < 1 or len(self.clip_shape) != 3 or min(self.clip_shape) < 1:
            raise DatasetError("seq_len and clip_shape entries must be positive")

    @property
    def num_classes(self) -> int:
        return self.num_imu_factors * self.num_video_factors

    def factors(self, class_id: int) -> tuple:
        return divmod(class_id, self.num_video_factors)

    def class_id(self, a: int, b: int) -> int:
        return a * self.num_video_factors + b

    def class_names(self) -> tuple:
        return tuple(f"imu{a}_vid{b}" for a in range(self.num_imu_factors) for b in range(self.num_video_factors))


def sensor_template(spec: SyntheticSpec, a: int) -> np.ndarray:
    """Noise-free ``[channels, seq_len]`` waveform for sensor factor ``a``."""
    t = np.arange(spec.seq_len) / spec.seq_len
    phases = 2 * np.pi * np.arange(spec.num_channels)[:, None] / spec.num_channels
    return np.sin(2 * np.pi * (a + 1) * t[None, :] + phases).astype(np.float32)


def video_template(spec: SyntheticSpec, b: int) -> np.ndarray:
    """Noise-free ``[T, H, W, 3]`` clip of a square moving in direction ``b``."""
    T, H, W = spec.clip_shape
    side = max(1, min(H, W) // 4)
    angle = 2 * np.pi * b / spec.num_video_factors
    travel = 0.5 * min(H, W)
    frames = np.full((T, H, W, 3), BACKGROUND, dtype=np.float32)
    for t in range(T):
        frac = (t / (T - 1) - 0.5) if T > 1 else 0.0
        cy = (H - 1) / 2 + frac * travel * np.sin(angle)
        cx = (W - 1) / 2 + frac * travel * np.cos(angle)
        y0 = int(np.clip(round(cy - side / 2), 0, H - side))
        x0 = int(np.clip(round(cx - side / 2), 0, W - side))
        frames[t, y0:y0 + side, x0:x0 + side, :] = FOREGROUND
    return frames


def _make_split(spec, per_class, rng, split_tag, prefix):
    sensors = [sensor_template(spec, a) for a in range(spec.num_imu_factors)]
    videos = [video_template(spec, b) for b in range(spec.num_video_factors)]
    samples = []
    n = 0
    for _ in range(per_class):
        for cls in range(spec.num_classes):
            a, b = spec.factors(cls)
            sig = sensors[a] + spec.noise_std * rng.standard_normal(sensors[a].shape).astype(np.float32)
            vid = videos[b] + spec.noise_std * rng.standard_normal(videos[b].shape).astype(np.float32)
            samples.append(LabeledSample(
                sample_id=f"{prefix}-{n:05d}",
                subject_id=1 if split_tag == TRAIN else 2,
                class_id=cls,
                sensor=SensorSequence(sig, spec.sample_rate_hz),
                video=VideoClip(np.clip(vid, 0.0, 1.0), spec.frame_rate_hz),
            ))
            n += 1
    return DatasetIndex(samples, spec.num_classes, spec.class_names(), split_tag, name="SYNTHETIC")


def generate_synthetic_dataset(spec: SyntheticSpec, seed: int) -> tuple:
    """Return ``(train, test)``; the two splits draw noise from independent streams."""
    train_seq, test_seq = np.random.SeedSequence(seed).spawn(2)
    train = _make_split(spec, spec.samples_per_class, np.random.default_rng(train_seq), TRAIN, "syn-train")
    test_n = spec.test_samples_per_class or spec.samples_per_class
    test = _make_split(spec, test_n, np.random.default_rng(test_seq), TEST, "syn-test")
    return train, test


def _tie_set(dists: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    return np.flatnonzero(dists <= dists.min() + tol)


def nearest_template_accuracy(spec: SyntheticSpec, index: DatasetIndex, modalities=("IMU", "VIDEO")) -> float:
    """Expected top-1 of a nearest-template oracle under uniform tie-breaking.

    A modality left out contributes no evidence, so all its factor values
    are tied. Clipping of video pixels is ignored by the oracle.
    """
    sensors = np.stack([sensor_template(spec, a) for a in range(spec.num_imu_factors)])
    videos = np.stack([video_template(spec, b) for b in range(spec.num_video_factors)])
    credit = 0.0
    for s in index.samples:
        a_true, b_true = spec.factors(s.class_id)
        if "IMU" in modalities:
            a_set = _tie_set(((sensors - s.sensor.values[None]) ** 2).sum(axis=(1, 2)))
        else:
            a_set = np.arange(spec.num_imu_factors)
        if "VIDEO" in modalities:
            b_set = _tie_set(((videos - s.video.frames[None]) ** 2).sum(axis=(1, 2, 3, 4)))
        else:
            b_set = np.arange(spec.num_video_factors)
        if a_true in a_set and b_true in b_set:
            credit += 1.0 / (len(a_set) * len(b_set))
    return credit / len(index)


def save_synthetic(path, train: DatasetIndex, test: DatasetIndex, spec: SyntheticSpec, seed: int) -> None:
    """Write both splits and a JSON header into one ``.npz`` archive."""
    arrays = {}
    for tag, idx in (("train", train), ("test", test)):
        arrays[f"{tag}_sensor"] = np.stack([s.sensor.values for s in idx])
        arrays[f"{tag}_video"] = np.stack([s.video.frames for s in idx])
        arrays[f"{tag}_labels"] = idx.labels
        arrays[f"{tag}_ids"] = np.array([s.sample_id for s in idx])
    header = {"format": "mmhar-synthetic/1", "spec": asdict(spec), "seed": seed}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def load_synthetic(path) -> tuple:
    """Inverse of :func:`save_synthetic`; returns ``(train, test, spec, seed)``."""
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        spec = SyntheticSpec(**header["spec"])
        splits = []
        for tag, split_tag in (("train", TRAIN), ("test", TEST)):
            samples = [
                LabeledSample(
                    sample_id=str(sid), subject_id=1 if split_tag == TRAIN else 2, class_id=int(y),
                    sensor=SensorSequence(x, spec.sample_rate_hz), video=VideoClip(v, spec.frame_rate_hz),
                )
                for sid, y, x, v in zip(z[f"{tag}_ids"], z[f"{tag}_labels"], z[f"{tag}_sensor"], z[f"{tag}_video"])
            ]
            splits.append(DatasetIndex(samples, spec.num_classes, spec.class_names(), split_tag, name="SYNTHETIC"))
    return splits[0], splits[1], spec, header["seed"]
