"""Named-array ``.npz`` checkpoints with a JSON header.

Every archive stores the module's ``state_dict`` under its own key names
plus ``__header__``: a UTF-8 JSON document recording the module kind, the
configs needed to rebuild it, the creation seed and the trainability mask.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .base import set_trainable_layers
from .fusion import FusionModel, MlpHead, MlpHeadConfig, SingleModalityModel
from .imu import ImuEncoder, ImuEncoderConfig
from .video import VideoEncoder, VideoEncoderConfig

FORMAT = "mmhar-params/1"


def _configs(module) -> dict:
    if isinstance(module, FusionModel):
        return {"imu": asdict(module.imu.config), "video": asdict(module.video.config),
                "head": asdict(module.head.config)}
    if isinstance(module, SingleModalityModel):
        return {"encoder_kind": module.encoder.kind, "encoder": asdict(module.encoder.config),
                "head": asdict(module.head.config), "modality": module.modality}
    return {"self": asdict(module.config)}


def _trainable(module) -> dict:
    if isinstance(module, FusionModel):
        return {"imu": module.imu.trainability(), "video": module.video.trainability(),
                "head": module.head.trainability()}
    if isinstance(module, SingleModalityModel):
        return {"encoder": module.encoder.trainability(), "head": module.head.trainability()}
    return {"self": module.trainability()}


def save_checkpoint(path, module, seed: int | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"format": FORMAT, "kind": module.kind, "configs": _configs(module), "seed": seed,
              "trainable": _trainable(module), "extra": extra or {}}
    arrays = {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_header(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        return json.loads(bytes(z["__header__"]).decode())


def _build(kind: str, cfg: dict):
    if kind == ImuEncoder.kind:
        return ImuEncoder(ImuEncoderConfig(**cfg))
    if kind == VideoEncoder.kind:
        return VideoEncoder(VideoEncoderConfig(**cfg))
    if kind == MlpHead.kind:
        return MlpHead(MlpHeadConfig(**cfg))
    raise ValueError(f"unknown module kind {kind!r}")


def _restore_mask(module, mask: dict) -> None:
    set_trainable_layers(module, [g for g, on in mask.items() if on])


def load_checkpoint(path):
    """Rebuild the saved module with identical parameters and trainability."""
    header = read_header(path)
    if header.get("format") != FORMAT:
        raise ValueError(f"{path}: not an {FORMAT} archive")
    kind, cfgs, masks = header["kind"], header["configs"], header["trainable"]
    if kind == FusionModel.kind:
        module = FusionModel(_build("imu_encoder", cfgs["imu"]), _build("video_encoder", cfgs["video"]),
                             _build("mlp_head", cfgs["head"]))
        parts = {"imu": module.imu, "video": module.video, "head": module.head}
    elif kind == SingleModalityModel.kind:
        module = SingleModalityModel(_build(cfgs["encoder_kind"], cfgs["encoder"]),
                                     _build("mlp_head", cfgs["head"]), cfgs["modality"])
        parts = {"encoder": module.encoder, "head": module.head}
    else:
        module = _build(kind, cfgs["self"])
        parts = {"self": module}
    with np.load(path, allow_pickle=False) as z:
        state = {k: torch.from_numpy(z[k].copy()) for k in z.files if k != "__header__"}
    module.load_state_dict(state)
    for name, part in parts.items():
        _restore_mask(part, masks[name])
    return module
