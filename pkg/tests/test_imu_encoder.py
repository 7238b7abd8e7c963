import numpy as np
import pytest
import torch
from hypothesis import given, strategies as st

from mmhar.models import ImuEncoderConfig, imu_encoder_init, imu_forward
from mmhar.models.base import ConfigError, ShapeError, group_digests, seeded_generator


@pytest.fixture(scope="module")
def encoder():
    return imu_encoder_init(ImuEncoderConfig(), seed=0)


def test_valid_convolution_lengths(encoder):
    feats, lengths = encoder(torch.randn(2, 6, 160), return_lengths=True)
    assert lengths == [137, 122, 115]
    assert feats.shape == (2, 256)
    assert ImuEncoderConfig().block_lengths(160) == [137, 122, 115]


@given(length=st.integers(46, 300))
def test_length_formula(length):
    cfg = ImuEncoderConfig(block_channels=(2, 2, 2), in_channels=1)
    enc = imu_encoder_init(cfg, 0)
    _, lengths = enc(torch.zeros(1, 1, length), return_lengths=True)
    assert lengths == [length - 23, length - 38, length - 45]


def test_short_input_names_the_block(encoder):
    with pytest.raises(ShapeError, match="Block_3"):
        encoder(torch.zeros(1, 6, 45))
    with pytest.raises(ShapeError, match="Block_1"):
        encoder(torch.zeros(1, 6, 20))


def test_channel_mismatch(encoder):
    with pytest.raises(ShapeError):
        encoder(torch.zeros(1, 3, 160))


def test_config_rejects_short_minimum():
    with pytest.raises(ConfigError):
        ImuEncoderConfig(min_input_len=40)


def test_eval_is_deterministic_and_train_is_seeded(encoder):
    mode = encoder.training
    x = torch.randn(3, 6, 160)
    np.testing.assert_array_equal(imu_forward(encoder, x).detach(), imu_forward(encoder, x).detach())
    a = imu_forward(encoder, x, training_mode=True, generator=seeded_generator(5))
    b = imu_forward(encoder, x, training_mode=True, generator=seeded_generator(5))
    c = imu_forward(encoder, x, training_mode=False)
    torch.testing.assert_close(a, b, rtol=0, atol=0)
    assert not torch.equal(a, c)
    assert encoder.training == mode


def test_zero_input_with_zero_bias_gives_zero_features(encoder):
    # init zeroes the biases, so an all-zero window stays zero through every block
    out = imu_forward(encoder, torch.zeros(2, 6, 160))
    assert torch.count_nonzero(out) == 0


def test_features_are_nonnegative_after_relu_pooling(encoder):
    assert (imu_forward(encoder, torch.randn(4, 6, 200)) >= 0).all()


def test_seeded_init():
    a, b, c = (imu_encoder_init(ImuEncoderConfig(), s) for s in (1, 1, 2))
    assert group_digests(a) == group_digests(b)
    assert group_digests(a) != group_digests(c)
    assert a.group_names == ("Block_1", "Block_2", "Block_3")
