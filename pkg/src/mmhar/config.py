"""Experiment configuration: JSON files, presets and ``key=value`` overrides.

A config is resolved in three layers: the dataset preset (which carries
the per-stage learning rate / weight decay / batch size), the user's JSON
file, then command-line overrides. The resolved form round-trips through
:func:`config_to_dict` / :func:`config_from_dict` unchanged.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .data.types import IMU, VIDEO
from .evaluation import FUSED

SYNTHETIC = "SYNTHETIC"
UTD_MHAD = "UTD_MHAD"
MMACT = "MMACT"
DATASETS = (SYNTHETIC, UTD_MHAD, MMACT)

BASELINE = "BASELINE"
RATIO_SWEEP = "RATIO_SWEEP"
ZERO_SHOT = "ZERO_SHOT"
EXPERIMENTS = (BASELINE, RATIO_SWEEP, ZERO_SHOT)


class ConfigValidationError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# (learning rate, weight decay, batch size) per dataset and training stage
STAGE_HYPERPARAMS = {
    UTD_MHAD: {IMU: (1e-4, 1e-6, 128), VIDEO: (1e-3, 1e-5, 16), FUSED: (5e-4, 5e-6, 16)},
    MMACT: {IMU: (5e-3, 5e-5, 256), VIDEO: (1e-3, 1e-5, 20), FUSED: (1e-4, 1e-6, 18)},
    # desk-scale benchmark, tuned on the synthetic set
    SYNTHETIC: {IMU: (3e-3, 1e-5, 32), VIDEO: (3e-3, 1e-5, 32), FUSED: (3e-3, 1e-5, 32)},
}


@dataclass
class StageConfig:
    learning_rate: float
    weight_decay: float
    batch_size: int
    max_epochs: int = 50
    patience: int = 10
    val_fraction: float = 0.1


@dataclass
class SyntheticConfig:
    num_imu_factors: int = 4
    num_video_factors: int = 4
    samples_per_class: int = 24
    test_samples_per_class: int = 10
    noise_std: float = 0.35
    seq_len: int = 96
    clip_shape: list = field(default_factory=lambda: [8, 16, 16])
    num_channels: int = 3
    seed: int = 1234


@dataclass
class DataConfig:
    dataset: str = SYNTHETIC
    root: str | None = None
    cache_dir: str | None = None
    sensor_rate_hz: float = 50.0
    sensor_len: int = 160
    video_fps: float = 15.0
    num_frames: int = 32
    height: int = 224
    width: int = 224
    standardize_sensor: bool = True
    strict: bool = False
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)


@dataclass
class ImuConfig:
    in_channels: int = 6
    block_channels: list = field(default_factory=lambda: [64, 128, 256])
    kernel_sizes: list = field(default_factory=lambda: [24, 16, 8])
    dropout_rate: float = 0.2


@dataclass
class VideoConfig:
    backbone: str = "S3D"
    weights_path: str | None = None
    finetune_groups: list = field(default_factory=lambda: ["Mixed_4c", "Mixed_5c"])
    mini_channels: list = field(default_factory=lambda: [8, 16, 32])


@dataclass
class ModelConfig:
    imu: ImuConfig = field(default_factory=ImuConfig)
    video: VideoConfig = field(default_factory=VideoConfig)
    head_hidden_dim: int = 512


@dataclass
class TrainingConfig:
    stage1_imu: StageConfig
    stage1_video: StageConfig
    stage2: StageConfig


@dataclass
class ExperimentSection:
    kind: str = BASELINE
    ratios: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    hidden_counts: list = field(default_factory=lambda: [1, 3, 5])
    masked_modality: str = "BOTH"


@dataclass
class ExperimentConfig:
    data: DataConfig
    model: ModelConfig
    training: TrainingConfig
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    modality_condition: str = FUSED
    output_dir: str = "runs/default"
    seed: int = 0


def _stage(dataset: str, row: str, max_epochs: int) -> dict:
    lr, wd, batch = STAGE_HYPERPARAMS[dataset][row]
    return {"learning_rate": lr, "weight_decay": wd, "batch_size": batch, "max_epochs": max_epochs}


def preset(dataset: str) -> dict:
    """Default config dictionary for a dataset, hyperparameters included."""
    if dataset not in DATASETS:
        raise ConfigValidationError([f"data.dataset: must be one of {list(DATASETS)}, got {dataset!r}"])
    base = {
        "data": {"dataset": dataset},
        "training": {
            "stage1_imu": _stage(dataset, IMU, 50),
            "stage1_video": _stage(dataset, VIDEO, 50),
            "stage2": _stage(dataset, FUSED, 30),
        },
    }
    if dataset == SYNTHETIC:
        base["model"] = {
            "imu": {"in_channels": 3, "block_channels": [16, 32, 32]},
            "video": {"backbone": "MINI3D", "finetune_groups": ["Block_2", "Block_3"]},
            "head_hidden_dim": 64,
        }
        for stage in base["training"].values():
            stage["max_epochs"] = 40
    elif dataset == UTD_MHAD:
        base["model"] = {"imu": {"in_channels": 6}}
    else:
        base["data"].update({"sensor_len": 250, "video_fps": 30.0, "num_frames": 64})
        base["model"] = {"imu": {"in_channels": 12}}
    return base


def deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> dict:
    """``a.b.c=value`` -> nested dict; the value is read as JSON when possible."""
    if "=" not in text:
        raise ConfigValidationError([f"override {text!r}: expected key=value"])
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = node = {}
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


_SCALARS = {"float": (int, float), "int": (int,), "str": (str,), "bool": (bool,), "list": (list, tuple)}


def _check_scalar(path, annotation: str, value, problems):
    ann = annotation.replace(" ", "")
    optional = ann.endswith("|None")
    ann = ann.removesuffix("|None")
    if value is None:
        if not optional:
            problems.append(f"{path}: must not be null")
        return value
    allowed = _SCALARS.get(ann)
    if allowed is None:
        return value
    if isinstance(value, bool) and ann in ("int", "float"):
        problems.append(f"{path}: expected {ann}, got bool")
    elif not isinstance(value, allowed):
        problems.append(f"{path}: expected {ann}, got {type(value).__name__} ({value!r})")
    elif ann == "float":
        return float(value)
    elif ann == "list":
        return list(value)
    return value


def _build(cls, raw, path: str, problems: list):
    if not isinstance(raw, dict):
        problems.append(f"{path or 'config'}: expected an object, got {type(raw).__name__}")
        return None
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in fields:
            problems.append(f"{path + '.' if path else ''}{key}: unknown field")
    kwargs = {}
    for name, f in fields.items():
        sub = f"{path + '.' if path else ''}{name}"
        if name not in raw:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                problems.append(f"{sub}: required field missing")
            continue
        nested = _NESTED.get((cls, name))
        if nested is not None:
            kwargs[name] = _build(nested, raw[name], sub, problems)
        else:
            kwargs[name] = _check_scalar(sub, str(f.type), raw[name], problems)
    if problems:
        return None
    return cls(**kwargs)


_NESTED = {
    (ExperimentConfig, "data"): DataConfig,
    (ExperimentConfig, "model"): ModelConfig,
    (ExperimentConfig, "training"): TrainingConfig,
    (ExperimentConfig, "experiment"): ExperimentSection,
    (DataConfig, "synthetic"): SyntheticConfig,
    (ModelConfig, "imu"): ImuConfig,
    (ModelConfig, "video"): VideoConfig,
    (TrainingConfig, "stage1_imu"): StageConfig,
    (TrainingConfig, "stage1_video"): StageConfig,
    (TrainingConfig, "stage2"): StageConfig,
}


def _validate(cfg: ExperimentConfig) -> list:
    problems = []
    if cfg.data.dataset not in DATASETS:
        problems.append(f"data.dataset: must be one of {list(DATASETS)}")
    if cfg.modality_condition not in (IMU, VIDEO, FUSED):
        problems.append("modality_condition: must be IMU, VIDEO or FUSED")
    if cfg.experiment.kind not in EXPERIMENTS:
        problems.append(f"experiment.kind: must be one of {list(EXPERIMENTS)}")
    if cfg.experiment.masked_modality not in (IMU, VIDEO, "BOTH"):
        problems.append("experiment.masked_modality: must be IMU, VIDEO or BOTH")
    for r in cfg.experiment.ratios:
        if not (isinstance(r, (int, float)) and 0 < r <= 1):
            problems.append(f"experiment.ratios: {r!r} outside (0, 1]")
    for h in cfg.experiment.hidden_counts:
        if not (isinstance(h, int) and h >= 0):
            problems.append(f"experiment.hidden_counts: {h!r} is not a nonnegative integer")
    if cfg.model.video.backbone not in ("S3D", "MINI3D"):
        problems.append("model.video.backbone: must be S3D or MINI3D")
    for name in ("stage1_imu", "stage1_video", "stage2"):
        st = getattr(cfg.training, name)
        if not st.learning_rate > 0:
            problems.append(f"training.{name}.learning_rate: must be positive")
        if st.weight_decay < 0:
            problems.append(f"training.{name}.weight_decay: must be nonnegative")
        if st.batch_size < 1:
            problems.append(f"training.{name}.batch_size: must be >= 1")
        if st.max_epochs < 0:
            problems.append(f"training.{name}.max_epochs: must be >= 0")
        if not 0 <= st.val_fraction < 1:
            problems.append(f"training.{name}.val_fraction: must lie in [0, 1)")
    if cfg.data.synthetic.noise_std < 0:
        problems.append("data.synthetic.noise_std: must be nonnegative")
    return problems


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a fully resolved dictionary; raises with every field problem."""
    problems = []
    cfg = _build(ExperimentConfig, raw, "", problems)
    if problems:
        raise ConfigValidationError(problems)
    problems = _validate(cfg)
    if problems:
        raise ConfigValidationError(problems)
    return cfg


def resolve_config(raw: dict, overrides=()) -> ExperimentConfig:
    """Merge ``raw`` and ``overrides`` over the dataset preset and validate."""
    merged = copy.deepcopy(raw)
    for text in overrides:
        merged = deep_merge(merged, parse_override(text))
    dataset = merged.get("data", {}).get("dataset", SYNTHETIC)
    return config_from_dict(deep_merge(preset(dataset), merged))


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigValidationError([f"config file {path} not found"])
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"{path}: invalid JSON ({exc})"])
    return resolve_config(raw, overrides)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of everything that affects results (``output_dir`` excluded)."""
    d = config_to_dict(cfg)
    d.pop("output_dir")
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]
