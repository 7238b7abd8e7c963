"""Concatenation fusion, the two-layer MLP head, and the cross-entropy objective."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..data.types import IMU, VIDEO
from .base import ConfigError, GroupedModule, ShapeError, as_tensor, fan_in_uniform_, seeded_generator
from .imu import ImuEncoder
from .video import VideoEncoder


@dataclass(frozen=True)
class MlpHeadConfig:
    in_dim: int
    num_classes: int
    hidden_dim: int = 512

    def __post_init__(self):
        if min(self.in_dim, self.hidden_dim, self.num_classes) < 1:
            raise ConfigError("in_dim, hidden_dim and num_classes must be positive")


class MlpHead(GroupedModule):
    """Linear -> ReLU -> Linear."""

    kind = "mlp_head"

    def __init__(self, config: MlpHeadConfig):
        super().__init__()
        self.config = config
        self.groups = nn.ModuleDict({
            "Linear_1": nn.Linear(config.in_dim, config.hidden_dim),
            "Linear_2": nn.Linear(config.hidden_dim, config.num_classes),
        })

    def forward(self, feats: torch.Tensor) -> torch.Tensor:
        if feats.ndim != 2 or feats.shape[1] != self.config.in_dim:
            raise ShapeError(f"head expects [batch, {self.config.in_dim}] features, got {tuple(feats.shape)}")
        return self.groups["Linear_2"](F.relu(self.groups["Linear_1"](feats)))


def mlp_head_init(config: MlpHeadConfig, seed: int) -> MlpHead:
    head = MlpHead(config)
    fan_in_uniform_(head, seeded_generator(seed))
    return head


def mlp_forward(head: MlpHead, features, training_mode: bool = False) -> torch.Tensor:
    was = head.training
    head.train(training_mode)
    try:
        return head(as_tensor(features, dtype=next(head.parameters()).dtype))
    finally:
        head.train(was)


def fuse_features(imu_feat: torch.Tensor, video_feat: torch.Tensor) -> torch.Tensor:
    """Row-wise concatenation ``[imu | video]``."""
    imu_feat, video_feat = as_tensor(imu_feat), as_tensor(video_feat)
    if imu_feat.shape[0] != video_feat.shape[0]:
        raise ShapeError(f"batch sizes differ: {imu_feat.shape[0]} vs {video_feat.shape[0]}")
    return torch.cat([imu_feat, video_feat], dim=1)


def cross_entropy_loss(logits: torch.Tensor, labels) -> torch.Tensor:
    """Mean of ``logsumexp(z) - z[label]`` over the batch."""
    labels = torch.as_tensor(labels, dtype=torch.long)
    num_classes = logits.shape[1]
    if labels.numel() and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes}), got range "
                         f"[{int(labels.min())}, {int(labels.max())}]")
    picked = logits.gather(1, labels.view(-1, 1)).squeeze(1)
    return (torch.logsumexp(logits, dim=1) - picked).mean()


def encode_present(encoder, x: torch.Tensor, present: torch.Tensor | None, generator=None) -> torch.Tensor:
    """Encode only rows flagged present; other rows get zero features.

    Absent rows never reach the encoder, so they cannot influence its
    outputs, gradients or normalisation statistics.
    """
    if present is None:
        return encoder(x, generator=generator)
    present = present.bool()
    width = encoder.config.feature_dim
    dtype = next(encoder.parameters()).dtype
    out = torch.zeros(x.shape[0], width, dtype=dtype, device=x.device)
    rows = present.nonzero(as_tuple=True)[0]
    if rows.numel() == 0:
        return out
    if rows.numel() == x.shape[0]:
        return encoder(x, generator=generator)
    return out.index_copy(0, rows, encoder(x[rows], generator=generator))


class SingleModalityModel(nn.Module):
    """One encoder plus its own head, as trained in stage 1."""

    kind = "single_model"

    def __init__(self, encoder: nn.Module, head: MlpHead, modality: str):
        super().__init__()
        if modality not in (IMU, VIDEO):
            raise ConfigError(f"modality must be IMU or VIDEO, got {modality!r}")
        self.encoder = encoder
        self.head = head
        self.modality = modality

    def forward(self, sensor=None, video=None, present=None, generator=None) -> torch.Tensor:
        x = sensor if self.modality == IMU else video
        mask = None if present is None else present[self.modality]
        return self.head(encode_present(self.encoder, x, mask, generator))


class FusionModel(nn.Module):
    """Both encoders, concatenated features, and a shared MLP head.

    ``present`` maps each modality to a per-row 0/1 tensor; absent rows get
    a zero feature vector for that modality.
    """

    kind = "fusion_model"

    def __init__(self, imu: ImuEncoder, video: VideoEncoder, head: MlpHead):
        super().__init__()
        expected = imu.config.feature_dim + video.config.feature_dim
        if head.config.in_dim != expected:
            raise ConfigError(f"head in_dim {head.config.in_dim} != {expected} fused feature width")
        self.imu = imu
        self.video = video
        self.head = head

    def features(self, sensor, video, present=None, generator=None) -> torch.Tensor:
        present = present or {}
        f_imu = encode_present(self.imu, sensor, present.get(IMU), generator)
        f_vid = encode_present(self.video, video, present.get(VIDEO), generator)
        return fuse_features(f_imu, f_vid)

    def forward(self, sensor=None, video=None, present=None, generator=None) -> torch.Tensor:
        return self.head(self.features(sensor, video, present, generator))
