"""Compose data, models and training into baseline, ratio-sweep and zero-shot runs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import SYNTHETIC, UTD_MHAD, ExperimentConfig, config_hash
from .data.loaders import PreprocessConfig, load_mmact, load_utd_mhad
from .data.synthetic import SyntheticSpec, generate_synthetic_dataset
from .data.transforms import mask_classes, select_hidden_classes, subset_by_ratio
from .data.types import IMU, VIDEO, DatasetError, DatasetIndex
from .evaluation import FUSED, MetricsReport, evaluate
from .models.fusion import SingleModalityModel
from .models.imu import ImuEncoderConfig, imu_encoder_init
from .models.video import VideoEncoderConfig, load_pretrained_video_weights
from .training import TrainHyperparams, TrainingError, train_stage1, train_stage2

log = logging.getLogger(__name__)

# zero-shot condition labels; "*" marks the modality the hidden classes were withheld from
IMU_ONLY = "IMU-only"
RGB_ONLY = "RGB-only"
IMU_STAR_RGB = "IMU*+RGB"
RGB_STAR_IMU = "RGB*+IMU"
ZERO_SHOT_CONDITIONS = (IMU_ONLY, RGB_ONLY, IMU_STAR_RGB, RGB_STAR_IMU)


def synthetic_spec(cfg: ExperimentConfig) -> SyntheticSpec:
    s = cfg.data.synthetic
    return SyntheticSpec(
        num_imu_factors=s.num_imu_factors, num_video_factors=s.num_video_factors,
        samples_per_class=s.samples_per_class, test_samples_per_class=s.test_samples_per_class,
        noise_std=s.noise_std, seq_len=s.seq_len, clip_shape=tuple(s.clip_shape), num_channels=s.num_channels,
    )


def preprocess_config(cfg: ExperimentConfig) -> PreprocessConfig:
    d = cfg.data
    return PreprocessConfig(d.sensor_rate_hz, d.sensor_len, d.video_fps, d.num_frames, d.height, d.width,
                            d.standardize_sensor)


def load_datasets(cfg: ExperimentConfig) -> tuple:
    d = cfg.data
    if d.dataset == SYNTHETIC:
        return generate_synthetic_dataset(synthetic_spec(cfg), d.synthetic.seed)
    loader = load_utd_mhad if d.dataset == UTD_MHAD else load_mmact
    return loader(d.root, preprocess_config(cfg), strict=d.strict, cache_dir=d.cache_dir)


def clip_shape(cfg: ExperimentConfig) -> tuple:
    if cfg.data.dataset == SYNTHETIC:
        return tuple(cfg.data.synthetic.clip_shape)
    return (cfg.data.num_frames, cfg.data.height, cfg.data.width)


def imu_config(cfg: ExperimentConfig) -> ImuEncoderConfig:
    m = cfg.model.imu
    length = cfg.data.synthetic.seq_len if cfg.data.dataset == SYNTHETIC else cfg.data.sensor_len
    return ImuEncoderConfig(m.in_channels, tuple(m.block_channels), tuple(m.kernel_sizes), m.dropout_rate,
                            min_input_len=length)


def video_config(cfg: ExperimentConfig) -> VideoEncoderConfig:
    v = cfg.model.video
    return VideoEncoderConfig(v.backbone, clip_shape(cfg), None, tuple(v.mini_channels))


def hyper(cfg: ExperimentConfig, stage: str, seed: int) -> TrainHyperparams:
    st = getattr(cfg.training, stage)
    return TrainHyperparams(st.learning_rate, st.weight_decay, st.batch_size, st.max_epochs, seed,
                            st.patience, st.val_fraction)


@dataclass
class PipelineResult:
    models: dict = field(default_factory=dict)  # condition -> trained model
    runs: list = field(default_factory=list)


class Pipeline:
    """Trains the models one condition needs, memoising stage-1 encoders.

    Stage-1 training for a modality depends only on the samples eligible for
    that modality and the seed, so runs sharing those reuse one result.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._stage1 = {}

    def stage1(self, modality: str, train: DatasetIndex, seed: int):
        eligible = tuple(s.sample_id for s in train.eligible(modality))
        key = (modality, eligible, seed)
        if key not in self._stage1:
            offset = 0 if modality == IMU else 1
            if modality == IMU:
                encoder = imu_encoder_init(imu_config(self.cfg), seed * 10 + offset)
                stage = "stage1_imu"
            else:
                encoder = load_pretrained_video_weights(self.cfg.model.video.weights_path, video_config(self.cfg),
                                                        seed * 10 + offset)
                stage = "stage1_video"
            encoder, head, run = train_stage1(modality, train, hyper(self.cfg, stage, seed * 10 + offset),
                                              encoder, self.cfg.model.head_hidden_dim)
            self._stage1[key] = (SingleModalityModel(encoder, head, modality), run)
        return self._stage1[key]

    def run(self, condition: str, train: DatasetIndex, seed: int) -> PipelineResult:
        out = PipelineResult()
        if condition in (IMU, FUSED):
            out.models[IMU], run = self.stage1(IMU, train, seed)
            out.runs.append(run)
        if condition in (VIDEO, FUSED):
            out.models[VIDEO], run = self.stage1(VIDEO, train, seed)
            out.runs.append(run)
        if condition == FUSED:
            fused, run = train_stage2(
                out.models[IMU].encoder, out.models[VIDEO].encoder, train,
                hyper(self.cfg, "stage2", seed * 10 + 2), self.cfg.model.video.finetune_groups,
                self.cfg.model.head_hidden_dim)
            out.models[FUSED] = fused
            out.runs.append(run)
        return out


def _tags(cfg: ExperimentConfig, seed: int, **extra) -> dict:
    return {"config_hash": config_hash(cfg), "seed": seed, "dataset": cfg.data.dataset, **extra}


def run_baseline(cfg: ExperimentConfig, train=None, test=None, pipeline=None) -> tuple:
    """Train for ``cfg.modality_condition`` and evaluate on the full test split."""
    if train is None:
        train, test = load_datasets(cfg)
    pipeline = pipeline or Pipeline(cfg)
    result = pipeline.run(cfg.modality_condition, train, cfg.seed)
    report = evaluate(result.models[cfg.modality_condition], test, **_tags(cfg, cfg.seed))
    return report, result


def run_data_ratio_sweep(cfg: ExperimentConfig, ratios, seeds, train=None, test=None) -> list:
    """Subsample training data per (ratio, seed), retrain, score on the untouched test set.

    With a FUSED condition the stage-1 models are scored too, giving one
    curve per modality condition. A failing cell is logged and skipped.
    """
    for r in ratios:
        if not 0 < r <= 1:
            raise DatasetError(f"ratio {r} outside (0, 1]")
    if train is None:
        train, test = load_datasets(cfg)
    pipeline = Pipeline(cfg)
    reports = []
    conditions = (IMU, VIDEO, FUSED) if cfg.modality_condition == FUSED else (cfg.modality_condition,)
    for seed in seeds:
        for ratio in ratios:
            subset = subset_by_ratio(train, ratio, seed)
            try:
                result = pipeline.run(cfg.modality_condition, subset, seed)
            except TrainingError as exc:
                log.error("ratio %s seed %s failed: %s", ratio, seed, exc)
                continue
            for cond in conditions:
                reports.append(evaluate(result.models[cond], test, condition=cond,
                                        **_tags(cfg, seed, ratio=float(ratio))))
    return reports


@dataclass
class ZeroShotCell:
    hidden_count: int
    hidden_classes: tuple
    reports: dict  # condition label -> MetricsReport
    hidden_recall: dict  # condition label -> mean recall over hidden classes
    leaks: dict  # masked modality -> leaked (sample_id, modality) pairs
    audits: dict = field(default_factory=dict)  # masked modality -> list of TrainingRun


@dataclass
class ZeroShotReport:
    masked_modality: str
    cells: list

    def condition_reports(self) -> list:
        return [r for cell in self.cells for r in cell.reports.values()]


def _hidden_recall(report: MetricsReport, hidden) -> float:
    vals = [report.per_class_recall[c] for c in hidden if not np.isnan(report.per_class_recall[c])]
    return float(np.mean(vals)) if vals else float("nan")


def run_zero_shot_experiment(cfg: ExperimentConfig, hidden_counts, masked_modality: str = "BOTH",
                             train=None, test=None) -> ZeroShotReport:
    """Withhold classes from one modality through both stages, test on all classes.

    Condition labels: single-modality models trained without the hidden
    classes (``IMU-only``, ``RGB-only``) and fused models where only the
    starred modality lost them (``IMU*+RGB``, ``RGB*+IMU``).
    """
    if masked_modality not in (IMU, VIDEO, "BOTH"):
        raise DatasetError(f"masked_modality must be IMU, VIDEO or BOTH, got {masked_modality!r}")
    if train is None:
        train, test = load_datasets(cfg)
    for count in hidden_counts:
        if not 0 <= count < train.num_classes:
            raise DatasetError(f"hidden count {count} must lie in [0, {train.num_classes})")
    pipeline = Pipeline(cfg)
    seed = cfg.seed
    masked = (IMU, VIDEO) if masked_modality == "BOTH" else (masked_modality,)
    cells = []
    for count in hidden_counts:
        hidden = select_hidden_classes(train.num_classes, count, seed)
        reports, recall, leaks, audits = {}, {}, {}, {}
        for modality in masked:
            masked_train, audit = mask_classes(train, modality, hidden)
            result = pipeline.run(FUSED, masked_train, seed)
            single_label, fused_label = (IMU_ONLY, IMU_STAR_RGB) if modality == IMU else (RGB_ONLY, RGB_STAR_IMU)
            tags = _tags(cfg, seed, hidden_count=count)
            reports[single_label] = evaluate(result.models[modality], test, **tags)
            reports[single_label].condition = single_label
            reports[fused_label] = evaluate(result.models[FUSED], test, **tags)
            reports[fused_label].condition = fused_label
            forbidden = {(sid, modality) for sid in audit.affected_sample_ids}
            leaks[modality] = sorted(set().union(*(r.consumed_pairs() for r in result.runs)) & forbidden)
            audits[modality] = result.runs
        for label, rep in reports.items():
            recall[label] = _hidden_recall(rep, hidden)
        cells.append(ZeroShotCell(count, hidden, reports, recall, leaks, audits))
    return ZeroShotReport(masked_modality, cells)
