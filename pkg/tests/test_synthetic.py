import numpy as np
import pytest

from mmhar.data import SyntheticSpec, generate_synthetic_dataset
from mmhar.data.synthetic import (
    load_synthetic, nearest_template_accuracy, save_synthetic, sensor_template, video_template,
)
from mmhar.data.types import DatasetError


def test_shapes_and_class_balance(tiny_spec, tiny_data):
    train, test = tiny_data
    assert len(train) == tiny_spec.num_classes * 6
    assert len(test) == tiny_spec.num_classes * 3
    assert np.bincount(train.labels).tolist() == [6] * 4
    s = train.samples[0]
    assert s.sensor.values.shape == (3, 64)
    assert s.video.frames.shape == (4, 8, 8, 3)
    assert not {x.subject_id for x in train} & {x.subject_id for x in test}


def test_generation_is_seeded(tiny_spec):
    a, _ = generate_synthetic_dataset(tiny_spec, 3)
    b, _ = generate_synthetic_dataset(tiny_spec, 3)
    c, _ = generate_synthetic_dataset(tiny_spec, 4)
    np.testing.assert_array_equal(a.samples[5].sensor.values, b.samples[5].sensor.values)
    assert not np.array_equal(a.samples[5].sensor.values, c.samples[5].sensor.values)


def test_factor_encoding_round_trip():
    spec = SyntheticSpec(num_imu_factors=3, num_video_factors=5)
    for cls in range(spec.num_classes):
        assert spec.class_id(*spec.factors(cls)) == cls


def test_templates_are_distinct():
    spec = SyntheticSpec()
    s = [sensor_template(spec, a) for a in range(4)]
    v = [video_template(spec, b) for b in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.abs(s[i] - s[j]).sum() > 1
            assert np.abs(v[i] - v[j]).sum() > 1


def test_noiseless_oracle_bounds():
    spec = SyntheticSpec(noise_std=0.0, samples_per_class=2)
    _, test = generate_synthetic_dataset(spec, 0)
    assert nearest_template_accuracy(spec, test) == pytest.approx(1.0)
    assert nearest_template_accuracy(spec, test, ("IMU",)) == pytest.approx(0.25)
    assert nearest_template_accuracy(spec, test, ("VIDEO",)) == pytest.approx(0.25)


def test_single_imu_factor_makes_video_sufficient():
    spec = SyntheticSpec(num_imu_factors=1, num_video_factors=3, noise_std=0.2, samples_per_class=4)
    _, test = generate_synthetic_dataset(spec, 1)
    assert nearest_template_accuracy(spec, test, ("VIDEO",)) == pytest.approx(
        nearest_template_accuracy(spec, test))
    assert nearest_template_accuracy(spec, test, ("IMU",)) == pytest.approx(1 / 3)


def test_invalid_spec():
    with pytest.raises(DatasetError):
        SyntheticSpec(noise_std=-1)
    with pytest.raises(DatasetError):
        SyntheticSpec(num_imu_factors=0)


def test_save_load_round_trip(tmp_path, tiny_spec, tiny_data):
    train, test = tiny_data
    path = tmp_path / "syn.npz"
    save_synthetic(path, train, test, tiny_spec, 7)
    train2, test2, spec2, seed = load_synthetic(path)
    assert spec2 == tiny_spec and seed == 7
    assert [s.sample_id for s in test2] == [s.sample_id for s in test]
    np.testing.assert_array_equal(train2.samples[3].video.frames, train.samples[3].video.frames)
    np.testing.assert_array_equal(train2.labels, train.labels)
