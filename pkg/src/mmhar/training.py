"""Two-stage training: per-modality pre-training, then joint fine-tuning.

Every sample fed to an encoder is written to the run's audit log as
``(stage, epoch, phase, sample_id, modality)``. Rows whose
``modality_mask`` lacks a modality never reach that modality's encoder.
"""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .batching import collate, iter_batches, predict_logits
from .data.transforms import stratified_split
from .data.types import IMU, MODALITIES, VIDEO, DatasetIndex
from .models.base import seeded_generator, set_trainable_layers
from .models.fusion import FusionModel, MlpHeadConfig, SingleModalityModel, cross_entropy_loss, mlp_head_init

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainHyperparams:
    learning_rate: float
    weight_decay: float
    batch_size: int
    max_epochs: int = 50
    seed: int = 0
    patience: int = 10
    val_fraction: float = 0.1
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be >= 0, got {self.max_epochs}")


@dataclass
class AdamState:
    step: int = 0
    exp_avg: dict = field(default_factory=dict)
    exp_avg_sq: dict = field(default_factory=dict)


@torch.no_grad()
def optimizer_step(params: dict, grads: dict, state: AdamState, hyper: TrainHyperparams) -> tuple:
    """One Adam update with decoupled weight decay, applied in place.

    ``params`` maps names to tensors (``requires_grad`` marks trainable ones);
    ``grads`` may only name trainable entries.
    """
    for name, g in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter {name}")
        if not params[name].requires_grad:
            raise TrainingError(f"gradient supplied for frozen parameter {name}")
        if not torch.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for {name}")
    beta1, beta2 = hyper.betas
    lr, wd = hyper.learning_rate, hyper.weight_decay
    state.step += 1
    bias1 = 1 - beta1 ** state.step
    bias2 = 1 - beta2 ** state.step
    for name, g in grads.items():
        p = params[name]
        m = state.exp_avg.setdefault(name, torch.zeros_like(p))
        v = state.exp_avg_sq.setdefault(name, torch.zeros_like(p))
        p.mul_(1 - lr * wd)
        m.mul_(beta1).add_(g, alpha=1 - beta1)
        v.mul_(beta2).addcmul_(g, g, value=1 - beta2)
        denom = (v / bias2).sqrt_().add_(hyper.eps)
        p.addcdiv_(m, denom, value=-lr / bias1)
    return params, state


@dataclass
class TrainingRun:
    stage: str
    history: list = field(default_factory=list)
    audit: list = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False

    def consumed_pairs(self) -> set:
        return {(rec[3], rec[4]) for rec in self.audit}


def _eligible(dataset: DatasetIndex, modalities) -> list:
    return [s for s in dataset.samples if any(s.has(m) for m in modalities)]


def _fit(model, train_samples, val_samples, use, hyper: TrainHyperparams, stage: str, num_classes: int):
    run = TrainingRun(stage)
    named = {n: p for n, p in model.named_parameters() if p.requires_grad}
    state = AdamState()
    rng = np.random.default_rng(hyper.seed)
    drop_gen = seeded_generator(hyper.seed + 1)
    dtype = next(model.parameters()).dtype
    best_loss, best_state, stale = math.inf, None, 0

    for epoch in range(hyper.max_epochs):
        model.train()
        total, count = 0.0, 0
        for chunk in iter_batches(train_samples, hyper.batch_size, rng.permutation(len(train_samples))):
            b = collate(chunk, use, dtype)
            run.audit.extend((stage, epoch, "train", sid, m) for sid, m in b.consumed(use))
            logits = model(sensor=b.sensor, video=b.video, present=b.present, generator=drop_gen)
            loss = cross_entropy_loss(logits, b.labels)
            if not torch.isfinite(loss):
                raise TrainingError(f"{stage}: non-finite loss at epoch {epoch}")
            model.zero_grad(set_to_none=True)
            loss.backward()
            grads = {n: p.grad if p.grad is not None else torch.zeros_like(p) for n, p in named.items()}
            optimizer_step(named, grads, state, hyper)
            total += loss.item() * len(chunk)
            count += len(chunk)
        record = {"stage": stage, "epoch": epoch, "loss": total / count}

        if val_samples:
            logits, labels, consumed = predict_logits(model, val_samples, use)
            run.audit.extend((stage, epoch, "val", sid, m) for sid, m in consumed)
            val_loss = cross_entropy_loss(logits, labels).item()
            record["val_loss"] = val_loss
            record["val_top1"] = float((logits.argmax(1) == labels).float().mean())
            if val_loss < best_loss - 1e-12:
                best_loss, stale, run.best_epoch = val_loss, 0, epoch
                best_state = copy.deepcopy(model.state_dict())
            else:
                stale += 1
        run.history.append(record)
        log.debug("%s", record)
        if val_samples and stale >= hyper.patience:
            run.stopped_early = True
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return run


def _split_train_val(samples, dataset: DatasetIndex, hyper: TrainHyperparams):
    index = dataset.with_samples(samples)
    rest, held = stratified_split(index, hyper.val_fraction, hyper.seed)
    return list(rest.samples), list(held.samples)


def train_stage1(modality: str, dataset: DatasetIndex, hyper: TrainHyperparams, encoder,
                 head_hidden_dim: int = 512) -> tuple:
    """Supervised pre-training of one encoder with its own classification head.

    ``encoder`` is trained in place (all groups trainable). Returns
    ``(encoder, head, run)``.
    """
    if modality not in MODALITIES:
        raise ValueError(f"modality must be one of {MODALITIES}, got {modality!r}")
    eligible = dataset.eligible(modality)
    if not eligible:
        raise TrainingError(f"stage 1 ({modality}): no samples may supply {modality}")
    set_trainable_layers(encoder, encoder.group_names)
    head = mlp_head_init(MlpHeadConfig(encoder.config.feature_dim, dataset.num_classes, head_hidden_dim),
                         hyper.seed)
    model = SingleModalityModel(encoder, head, modality)
    train, val = _split_train_val(eligible, dataset, hyper)
    run = _fit(model, train, val, (modality,), hyper, f"stage1_{modality}", dataset.num_classes)
    return encoder, head, run


def train_stage2(imu_encoder, video_encoder, dataset: DatasetIndex, hyper: TrainHyperparams,
                 video_trainable_groups, head_hidden_dim: int = 512) -> tuple:
    """Joint fine-tuning of copies of both encoders under a fresh fusion head.

    All IMU groups and the named video groups train; the other video groups
    stay frozen. A row missing a modality contributes zero features for it.
    """
    imu = copy.deepcopy(imu_encoder)
    video = copy.deepcopy(video_encoder)
    set_trainable_layers(imu, imu.group_names)
    set_trainable_layers(video, video_trainable_groups)
    head = mlp_head_init(
        MlpHeadConfig(imu.config.feature_dim + video.config.feature_dim, dataset.num_classes, head_hidden_dim),
        hyper.seed)
    model = FusionModel(imu, video, head)
    eligible = _eligible(dataset, MODALITIES)
    if not eligible:
        raise TrainingError("stage 2: no sample supplies any modality")
    train, val = _split_train_val(eligible, dataset, hyper)
    run = _fit(model, train, val, MODALITIES, hyper, "stage2", dataset.num_classes)
    return model, run

