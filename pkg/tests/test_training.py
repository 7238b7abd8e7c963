import pytest
import torch

from mmhar.data import IMU, VIDEO, SyntheticSpec, generate_synthetic_dataset, mask_classes
from mmhar.evaluation import evaluate
from mmhar.models import ImuEncoderConfig, MlpHeadConfig, VideoEncoderConfig, imu_encoder_init, mlp_head_init
from mmhar.models.base import group_digests
from mmhar.models.fusion import SingleModalityModel
from mmhar.models.video import MINI3D, video_encoder_init
from mmhar.training import TrainHyperparams, TrainingError, train_stage1, train_stage2

IMU_CFG = ImuEncoderConfig(in_channels=3, block_channels=(8, 8, 8), min_input_len=64)
VID_CFG = VideoEncoderConfig(MINI3D, (4, 8, 8), mini_channels=(4, 8, 8))


def hyper(epochs=15, seed=0, **kw):
    return TrainHyperparams(3e-3, 1e-5, 8, epochs, seed, **kw)


def test_imu_stage1_learns_noiseless_imu_only_task():
    spec = SyntheticSpec(num_imu_factors=3, num_video_factors=1, samples_per_class=10, noise_std=0.0,
                         seq_len=64, clip_shape=(4, 8, 8), test_samples_per_class=4)
    train, test = generate_synthetic_dataset(spec, 0)
    enc, head, run = train_stage1(IMU, train, TrainHyperparams(1e-2, 0.0, 8, 60, 0, patience=60),
                                  imu_encoder_init(IMU_CFG, 0), head_hidden_dim=16)
    model = SingleModalityModel(enc, head, IMU)
    assert evaluate(model, train).top1 >= 0.99
    assert evaluate(model, test).top1 >= 0.99
    assert run.history[-1]["loss"] < 0.1 * run.history[0]["loss"]


def test_stage1_with_every_row_masked_raises(tiny_data):
    train, _ = tiny_data
    masked, _ = mask_classes(train, IMU, range(train.num_classes))
    with pytest.raises(TrainingError, match="IMU"):
        train_stage1(IMU, masked, hyper(), imu_encoder_init(IMU_CFG, 0))


def test_zero_epochs_leave_encoders_untouched(tiny_data):
    train, _ = tiny_data
    imu = imu_encoder_init(IMU_CFG, 0)
    before = group_digests(imu)
    enc, head, run = train_stage1(IMU, train, hyper(epochs=0), imu, head_hidden_dim=16)
    assert group_digests(enc) == before
    fresh = mlp_head_init(MlpHeadConfig(IMU_CFG.feature_dim, train.num_classes, 16), hyper().seed)
    assert group_digests(head) == group_digests(fresh)
    assert run.history == [] and run.audit == []


def test_stage1_is_deterministic(tiny_data):
    train, _ = tiny_data
    a = train_stage1(VIDEO, train, hyper(epochs=3), video_encoder_init(VID_CFG, 1), 16)
    b = train_stage1(VIDEO, train, hyper(epochs=3), video_encoder_init(VID_CFG, 1), 16)
    assert group_digests(a[0]) == group_digests(b[0])
    assert a[2].history == b[2].history


def test_stage2_freezes_unlisted_video_groups_and_leaves_inputs_alone(tiny_data):
    train, _ = tiny_data
    imu, vid = imu_encoder_init(IMU_CFG, 0), video_encoder_init(VID_CFG, 1)
    imu_before, vid_before = group_digests(imu), group_digests(vid)
    model, run = train_stage2(imu, vid, train, hyper(epochs=3), ["Block_3"], 16)
    assert group_digests(imu) == imu_before and group_digests(vid) == vid_before
    after = group_digests(model.video)
    assert after["Block_1"] == vid_before["Block_1"] and after["Block_2"] == vid_before["Block_2"]
    assert after["Block_3"] != vid_before["Block_3"]
    assert all(v != imu_before[k] for k, v in group_digests(model.imu).items())


def test_audit_skips_masked_pairs(tiny_data):
    train, _ = tiny_data
    masked, audit = mask_classes(train, IMU, {0})
    model, run = train_stage2(imu_encoder_init(IMU_CFG, 0), video_encoder_init(VID_CFG, 1), masked,
                              hyper(epochs=2, val_fraction=0.5), ["Block_3"], 16)
    consumed = run.consumed_pairs()
    assert not {(sid, IMU) for sid in audit.affected_sample_ids} & consumed
    assert {(sid, VIDEO) for sid in audit.affected_sample_ids} & consumed
    assert {rec[2] for rec in run.audit} == {"train", "val"}


def test_early_stopping_restores_best_epoch(tiny_data):
    train, _ = tiny_data
    _, _, run = train_stage1(IMU, train, TrainHyperparams(5e-2, 0.0, 8, 30, 0, patience=2, val_fraction=0.5),
                             imu_encoder_init(IMU_CFG, 0), 16)
    losses = [r["val_loss"] for r in run.history]
    assert run.best_epoch == losses.index(min(losses))
    if run.stopped_early:
        assert len(losses) == run.best_epoch + 3


def test_masked_rows_do_not_affect_training():
    # payload of a masked row is replaced by garbage; the trained weights must not change
    spec = SyntheticSpec(num_imu_factors=2, num_video_factors=2, samples_per_class=4, noise_std=0.3,
                         seq_len=64, clip_shape=(4, 8, 8))
    train, _ = generate_synthetic_dataset(spec, 2)
    masked, audit = mask_classes(train, IMU, {1})
    from dataclasses import replace

    from mmhar.data import SensorSequence
    poisoned = masked.with_samples([
        replace(s, sensor=SensorSequence(s.sensor.values * 0 + 1e3, s.sensor.sample_rate_hz))
        if s.sample_id in audit.affected_sample_ids else s for s in masked])
    runs = [train_stage2(imu_encoder_init(IMU_CFG, 0), video_encoder_init(VID_CFG, 1), idx,
                         hyper(epochs=2), ["Block_3"], 16)[0] for idx in (masked, poisoned)]
    for (_, a), (_, b) in zip(runs[0].state_dict().items(), runs[1].state_dict().items()):
        assert torch.equal(a, b)
