"""Signal and frame preprocessing applied before samples enter an encoder."""
from __future__ import annotations

import numpy as np

from .types import DatasetError, SensorSequence, VideoClip


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def resample_sensor(seq: SensorSequence, target_rate_hz: float) -> SensorSequence:
    """Linearly interpolate ``seq`` onto a uniform grid at ``target_rate_hz``.

    Output step ``i`` sits at time ``i / target_rate_hz``; positions past the
    last input sample hold the final value.
    """
    if not target_rate_hz > 0:
        raise DatasetError(f"target_rate_hz must be positive, got {target_rate_hz}")
    if not np.all(np.isfinite(seq.values)):
        raise DatasetError("cannot resample a sequence containing non-finite values")
    if target_rate_hz == seq.sample_rate_hz:
        return seq
    n_in = len(seq)
    n_out = max(1, _round_half_up(n_in * target_rate_hz / seq.sample_rate_hz))
    src_pos = np.arange(n_out, dtype=np.float64) * (seq.sample_rate_hz / target_rate_hz)
    grid = np.arange(n_in, dtype=np.float64)
    values = np.stack([np.interp(src_pos, grid, ch.astype(np.float64)) for ch in seq.values])
    return SensorSequence(values, target_rate_hz, seq.channel_names)


def pad_or_crop(seq: SensorSequence, target_len: int) -> SensorSequence:
    """Zero-pad at the end or keep the first ``target_len`` steps."""
    if target_len < 1:
        raise DatasetError(f"target_len must be >= 1, got {target_len}")
    n = len(seq)
    if n == target_len:
        return seq
    if n > target_len:
        values = seq.values[:, :target_len]
    else:
        values = np.zeros((seq.num_channels, target_len), dtype=np.float32)
        values[:, :n] = seq.values
    return SensorSequence(values, seq.sample_rate_hz, seq.channel_names)


def stack_channels(seqs, target_len: int | None = None) -> SensorSequence:
    """Concatenate sequences sharing a sample rate along the channel axis.

    Lengths that disagree are zero-padded to the longest (or to ``target_len``).
    """
    rates = {s.sample_rate_hz for s in seqs}
    if len(rates) != 1:
        raise DatasetError(f"resample before stacking; got rates {sorted(rates)}")
    length = target_len or max(len(s) for s in seqs)
    padded = [pad_or_crop(s, length) for s in seqs]
    values = np.concatenate([p.values for p in padded], axis=0)
    names = sum((tuple(p.channel_names) for p in padded), ())
    return SensorSequence(values, rates.pop(), names)


def standardize(seq: SensorSequence, mean: np.ndarray, std: np.ndarray) -> SensorSequence:
    std = np.where(np.asarray(std) > 0, std, 1.0)
    values = (seq.values - np.asarray(mean)[:, None]) / np.asarray(std)[:, None]
    return SensorSequence(values, seq.sample_rate_hz, seq.channel_names)


def sample_video_frames(clip: VideoClip, target_fps: float, num_frames: int) -> VideoClip:
    """Pick frames at a uniform stride for ``target_fps``, then fix the length.

    Short results repeat the last selected frame; long results keep the prefix.
    """
    if num_frames < 1:
        raise DatasetError(f"num_frames must be >= 1, got {num_frames}")
    if not target_fps > 0:
        raise DatasetError(f"target_fps must be positive, got {target_fps}")
    stride = clip.frame_rate_hz / target_fps
    n_avail = len(clip)
    count = max(1, int(np.ceil(n_avail / stride - 1e-9)))
    idx = np.array([_round_half_up(i * stride) for i in range(count)])
    idx = idx[idx < n_avail]
    if len(idx) >= num_frames:
        idx = idx[:num_frames]
    else:
        idx = np.concatenate([idx, np.full(num_frames - len(idx), idx[-1])])
    return VideoClip(clip.frames[idx], target_fps)


def resize_frames(frames: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear spatial resize of a ``[T, H, W, 3]`` stack."""
    if frames.shape[1:3] == (height, width):
        return frames
    import cv2

    out = np.stack([cv2.resize(f, (width, height), interpolation=cv2.INTER_LINEAR) for f in frames])
    return np.clip(out, 0.0, 1.0).astype(np.float32)
