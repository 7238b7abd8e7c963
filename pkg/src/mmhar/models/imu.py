"""Three-block 1D-CNN encoder for IMU windows."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .base import ConfigError, GroupedModule, ShapeError, as_tensor, dropout, fan_in_uniform_, seeded_generator


@dataclass(frozen=True)
class ImuEncoderConfig:
    in_channels: int = 6
    block_channels: tuple = (64, 128, 256)
    kernel_sizes: tuple = (24, 16, 8)
    dropout_rate: float = 0.2
    min_input_len: int = 46

    def __post_init__(self):
        object.__setattr__(self, "block_channels", tuple(int(c) for c in self.block_channels))
        object.__setattr__(self, "kernel_sizes", tuple(int(k) for k in self.kernel_sizes))
        if len(self.block_channels) != 3 or len(self.kernel_sizes) != 3:
            raise ConfigError("IMU encoder has exactly 3 blocks")
        if self.in_channels < 1 or min(self.block_channels) < 1 or min(self.kernel_sizes) < 1:
            raise ConfigError("channel counts and kernel sizes must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.min_input_len < self.required_len:
            raise ConfigError(
                f"kernels {self.kernel_sizes} need input length >= {self.required_len}, "
                f"configured minimum is {self.min_input_len}")

    @property
    def feature_dim(self) -> int:
        return self.block_channels[-1]

    @property
    def required_len(self) -> int:
        return sum(k - 1 for k in self.kernel_sizes) + 1

    def block_lengths(self, length: int) -> list:
        out = []
        for k in self.kernel_sizes:
            length = length - k + 1
            out.append(length)
        return out


class ImuEncoder(GroupedModule):
    """Valid conv (stride 1) -> dropout -> ReLU, three times, then mean over time."""

    kind = "imu_encoder"

    def __init__(self, config: ImuEncoderConfig):
        super().__init__()
        self.config = config
        widths = (config.in_channels,) + config.block_channels
        self.groups = nn.ModuleDict({
            f"Block_{i + 1}": nn.Conv1d(widths[i], widths[i + 1], kernel_size=k)
            for i, k in enumerate(config.kernel_sizes)
        })

    def forward(self, x: torch.Tensor, generator: torch.Generator | None = None, return_lengths: bool = False):
        if x.ndim != 3 or x.shape[1] != self.config.in_channels:
            raise ShapeError(f"expected [batch, {self.config.in_channels}, time], got {tuple(x.shape)}")
        lengths = []
        for name, conv in self.groups.items():
            if x.shape[-1] < conv.kernel_size[0]:
                raise ShapeError(
                    f"{name}: input length {x.shape[-1]} shorter than kernel {conv.kernel_size[0]} "
                    f"(sequences need >= {self.config.required_len} steps)")
            x = F.relu(dropout(conv(x), self.config.dropout_rate, self.training, generator))
            lengths.append(x.shape[-1])
        feats = x.mean(dim=-1)
        return (feats, lengths) if return_lengths else feats


def imu_encoder_init(config: ImuEncoderConfig, seed: int) -> ImuEncoder:
    enc = ImuEncoder(config)
    fan_in_uniform_(enc, seeded_generator(seed))
    return enc


def imu_forward(encoder: ImuEncoder, batch, training_mode: bool = False, generator=None) -> torch.Tensor:
    """Features ``[batch, feature_dim]`` for a ``[batch, channels, time]`` array."""
    was = encoder.training
    encoder.train(training_mode)
    try:
        x = as_tensor(batch, dtype=next(encoder.parameters()).dtype)
        return encoder(x, generator=generator)
    finally:
        encoder.train(was)
