import json

import pytest
from hypothesis import given, strategies as st

from mmhar.config import (
    MMACT, SYNTHETIC, STAGE_HYPERPARAMS, UTD_MHAD, ConfigValidationError, config_from_dict, config_hash, config_to_dict,
    dump_config, load_config, parse_override, resolve_config,
)


def test_utd_preset_carries_hyperparameters():
    cfg = resolve_config({"data": {"dataset": UTD_MHAD}})
    assert (cfg.training.stage1_imu.learning_rate, cfg.training.stage1_imu.weight_decay,
            cfg.training.stage1_imu.batch_size) == (1e-4, 1e-6, 128)
    assert cfg.training.stage1_video.batch_size == 16
    assert (cfg.training.stage2.learning_rate, cfg.training.stage2.weight_decay) == (5e-4, 5e-6)
    assert cfg.model.video.finetune_groups == ["Mixed_4c", "Mixed_5c"]
    assert cfg.model.imu.kernel_sizes == [24, 16, 8]


def test_mmact_preset():
    cfg = resolve_config({"data": {"dataset": MMACT}})
    assert cfg.training.stage1_imu.batch_size == 256
    assert cfg.training.stage1_video.batch_size == 20
    assert cfg.training.stage2.batch_size == 18
    assert STAGE_HYPERPARAMS[MMACT]["FUSED"] == (1e-4, 1e-6, 18)


def test_round_trip_and_hash_ignores_output_dir():
    cfg = resolve_config({"data": {"dataset": SYNTHETIC}})
    again = config_from_dict(json.loads(dump_config(cfg)))
    assert config_to_dict(again) == config_to_dict(cfg)
    moved = resolve_config({"data": {"dataset": SYNTHETIC}, "output_dir": "elsewhere"})
    assert config_hash(moved) == config_hash(cfg)
    assert config_hash(resolve_config({"seed": 5})) != config_hash(cfg)


def test_overrides_apply_in_order():
    cfg = resolve_config({}, ["training.stage2.max_epochs=3", "data.synthetic.noise_std=0.1",
                              "model.video.finetune_groups=[\"Block_3\"]", "seed=9"])
    assert cfg.training.stage2.max_epochs == 3
    assert cfg.data.synthetic.noise_std == 0.1
    assert cfg.model.video.finetune_groups == ["Block_3"]
    assert cfg.seed == 9


@given(value=st.integers(0, 10**6))
def test_parse_override_nests(value):
    assert parse_override(f"a.b.c={value}") == {"a": {"b": {"c": value}}}


def test_unknown_and_mistyped_fields_are_reported_together():
    with pytest.raises(ConfigValidationError) as err:
        resolve_config({"seed": "zero", "data": {"bogus": 1}})
    assert any("seed" in p for p in err.value.problems)
    assert any("data.bogus" in p for p in err.value.problems)


def test_range_checks():
    for override in ("training.stage2.learning_rate=0", "experiment.ratios=[0.0]", "modality_condition=\"AUDIO\"",
                     "experiment.hidden_counts=[-1]", "data.dataset=\"KINETICS\""):
        with pytest.raises(ConfigValidationError):
            resolve_config({}, [override])


def test_missing_or_malformed_file(tmp_path):
    with pytest.raises(ConfigValidationError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigValidationError):
        load_config(bad)


def test_shipped_configs_resolve():
    from pathlib import Path

    for path in sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.json")):
        load_config(path)
