"""Video encoders: torchvision's S3D with Inception-style group names, and MINI3D.

Both take clips laid out as ``[batch, time, height, width, 3]`` in [0, 1]
and return globally average-pooled features.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .base import ConfigError, GroupedModule, ShapeError, as_tensor, fan_in_uniform_, seeded_generator, set_trainable_layers

log = logging.getLogger(__name__)

S3D = "S3D"
MINI3D = "MINI3D"

# torchvision ``s3d().features`` index order
S3D_GROUPS = (
    "Conv_1a", "MaxPool_2a", "Conv_2b", "Conv_2c", "MaxPool_3a", "Mixed_3b", "Mixed_3c",
    "MaxPool_4a", "Mixed_4b", "Mixed_4c", "Mixed_4d", "Mixed_4e", "Mixed_4f", "MaxPool_5a",
    "Mixed_5b", "Mixed_5c",
)
S3D_FEATURE_DIM = 1024
S3D_FINETUNE_GROUPS = ("Mixed_4c", "Mixed_5c")
# Kinetics-400 normalisation used by the distributed weights
KINETICS_MEAN = (0.43216, 0.394666, 0.37645)
KINETICS_STD = (0.22803, 0.22145, 0.216989)

MINI3D_GROUPS = ("Block_1", "Block_2", "Block_3")


class WeightsError(ValueError):
    pass


@dataclass(frozen=True)
class VideoEncoderConfig:
    backbone: str = MINI3D
    input_shape: tuple = (16, 32, 32)
    trainable_groups: tuple = field(default=None)
    mini_channels: tuple = (8, 16, 32)

    def __post_init__(self):
        if self.backbone not in (S3D, MINI3D):
            raise ConfigError(f"backbone must be S3D or MINI3D, got {self.backbone!r}")
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "mini_channels", tuple(int(v) for v in self.mini_channels))
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigError(f"input_shape must be (time, height, width), got {self.input_shape}")
        if self.backbone == MINI3D and len(self.mini_channels) != 3:
            raise ConfigError("MINI3D has exactly 3 blocks")
        groups = self.trainable_groups
        groups = self.group_names if groups is None else tuple(groups)
        unknown = set(groups) - set(self.group_names)
        if unknown:
            raise ConfigError(f"unknown groups {sorted(unknown)} for {self.backbone}; valid: {list(self.group_names)}")
        object.__setattr__(self, "trainable_groups", groups)

    @property
    def group_names(self) -> tuple:
        return S3D_GROUPS if self.backbone == S3D else MINI3D_GROUPS

    @property
    def feature_dim(self) -> int:
        return S3D_FEATURE_DIM if self.backbone == S3D else self.mini_channels[-1]


class VideoEncoder(GroupedModule):
    kind = "video_encoder"

    def __init__(self, config: VideoEncoderConfig):
        super().__init__()
        self.config = config
        if config.backbone == S3D:
            from torchvision.models.video import s3d

            features = s3d(weights=None).features
            self.groups = nn.ModuleDict(dict(zip(S3D_GROUPS, features)))
            self.register_buffer("mean", torch.tensor(KINETICS_MEAN).view(1, 3, 1, 1, 1), persistent=False)
            self.register_buffer("std", torch.tensor(KINETICS_STD).view(1, 3, 1, 1, 1), persistent=False)
        else:
            widths = (3,) + config.mini_channels
            self.groups = nn.ModuleDict({
                name: nn.Conv3d(widths[i], widths[i + 1], kernel_size=3, stride=(1, 2, 2), padding=1)
                for i, name in enumerate(MINI3D_GROUPS)
            })

    def forward(self, clips: torch.Tensor, generator=None) -> torch.Tensor:
        expected = self.config.input_shape
        if clips.ndim != 5 or tuple(clips.shape[1:4]) != expected or clips.shape[-1] != 3:
            raise ShapeError(f"expected clips [batch, {expected[0]}, {expected[1]}, {expected[2]}, 3], "
                             f"got {tuple(clips.shape)}")
        x = clips.permute(0, 4, 1, 2, 3)
        if self.config.backbone == S3D:
            x = (x - self.mean.to(x.dtype)) / self.std.to(x.dtype)
            for block in self.groups.values():
                x = block(x)
        else:
            for block in self.groups.values():
                x = F.relu(block(x))
        return x.mean(dim=(2, 3, 4))


def video_encoder_init(config: VideoEncoderConfig, seed: int) -> VideoEncoder:
    if config.backbone == MINI3D:
        enc = VideoEncoder(config)
        fan_in_uniform_(enc, seeded_generator(seed))
    else:
        # torchvision's own initialisation, drawn under a fixed seed
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            enc = VideoEncoder(config)
    set_trainable_layers(enc, config.trainable_groups)
    return enc


def _read_state(path: Path) -> dict:
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as z:
            return {k: torch.from_numpy(z[k]) for k in z.files if not k.startswith("__")}
    state = torch.load(path, map_location="cpu", weights_only=True)
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    return dict(state)


def _canonical_key(key: str, config: VideoEncoderConfig) -> str | None:
    """Map torchvision (``features.9.x``) or bundle (``video.groups.x``) keys onto ours."""
    for prefix in ("module.", "video."):
        if key.startswith(prefix):
            key = key[len(prefix):]
    parts = key.split(".")
    if parts[0] == "features" and config.backbone == S3D and parts[1].isdigit():
        idx = int(parts[1])
        if idx >= len(S3D_GROUPS):
            return None
        return ".".join(["groups", S3D_GROUPS[idx]] + parts[2:])
    if parts[0] == "groups":
        return key
    return None  # classifier heads and anything else are not part of the encoder


def load_pretrained_video_weights(path, config: VideoEncoderConfig, seed: int = 0) -> VideoEncoder:
    """Build an encoder and populate every declared group from ``path``.

    ``path=None`` is only allowed for MINI3D and falls back to a seeded
    random init. Accepts torchvision-style ``.pth`` state dicts or this
    package's ``.npz`` archives.
    """
    if path is None:
        if config.backbone != MINI3D:
            raise WeightsError(f"{config.backbone} needs a pretrained checkpoint path")
        return video_encoder_init(config, seed)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"video checkpoint {path} does not exist")
    enc = VideoEncoder(config)
    raw = _read_state(path)
    state = {}
    for key, value in raw.items():
        ck = _canonical_key(key, config)
        if ck is not None:
            state[ck] = value
    expected = enc.state_dict()
    for key, ref in expected.items():
        group = enc.group_of(key)
        if key not in state:
            raise WeightsError(f"group {group}: checkpoint lacks {key}")
        if tuple(state[key].shape) != tuple(ref.shape):
            raise WeightsError(f"group {group}: {key} has shape {tuple(state[key].shape)}, "
                               f"expected {tuple(ref.shape)}")
    enc.load_state_dict({k: state[k].to(expected[k].dtype) for k in expected})
    set_trainable_layers(enc, config.trainable_groups)
    return enc


def video_forward(encoder: VideoEncoder, batch, training_mode: bool = False, generator=None) -> torch.Tensor:
    was = encoder.training
    encoder.train(training_mode)
    try:
        x = as_tensor(batch, dtype=next(encoder.parameters()).dtype)
        return encoder(x, generator=generator)
    finally:
        encoder.train(was)
