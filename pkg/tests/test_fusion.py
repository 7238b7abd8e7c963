import math

import pytest
import torch
from hypothesis import given, strategies as st

from mmhar.models import MlpHeadConfig, cross_entropy_loss, fuse_features, mlp_forward, mlp_head_init
from mmhar.models.base import ShapeError
from mmhar.models.fusion import MlpHead, encode_present
from mmhar.models.imu import ImuEncoderConfig, imu_encoder_init


def test_fuse_concatenates():
    out = fuse_features(torch.tensor([[1.0, 2.0]]), torch.tensor([[3.0]]))
    assert out.tolist() == [[1.0, 2.0, 3.0]]
    assert fuse_features(torch.zeros(4, 256), torch.zeros(4, 1024)).shape == (4, 1280)


def test_fuse_batch_mismatch():
    with pytest.raises(ShapeError):
        fuse_features(torch.zeros(2, 3), torch.zeros(3, 3))


def test_uniform_logits_give_log_num_classes():
    loss = cross_entropy_loss(torch.zeros(5, 27, dtype=torch.float64), torch.arange(5))
    assert abs(loss.item() - math.log(27)) < 1e-9


def test_two_class_by_hand():
    loss = cross_entropy_loss(torch.tensor([[1.0, 0.0]], dtype=torch.float64), [0])
    assert loss.item() == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)


@given(shift=st.floats(-50, 50))
def test_loss_is_shift_invariant(shift):
    z = torch.tensor([[0.3, -1.2, 2.0], [1.0, 1.0, 0.0]], dtype=torch.float64)
    y = [2, 0]
    assert cross_entropy_loss(z + shift, y).item() == pytest.approx(cross_entropy_loss(z, y).item(), abs=1e-9)


def test_loss_rejects_bad_labels():
    with pytest.raises(ValueError):
        cross_entropy_loss(torch.zeros(1, 3), [3])


def test_head_matches_hand_computation():
    head = MlpHead(MlpHeadConfig(2, 2, hidden_dim=2))
    with torch.no_grad():
        head.groups["Linear_1"].weight.copy_(torch.tensor([[1.0, 0.0], [0.0, -1.0]]))
        head.groups["Linear_1"].bias.copy_(torch.tensor([0.0, 0.5]))
        head.groups["Linear_2"].weight.copy_(torch.tensor([[1.0, 1.0], [2.0, 0.0]]))
        head.groups["Linear_2"].bias.copy_(torch.tensor([0.0, -1.0]))
    # hidden = relu([1, -3 + 0.5]) = [1, 0]; logits = [1, 2 - 1]
    assert mlp_forward(head, [[1.0, 3.0]]).tolist() == [[1.0, 1.0]]


def test_head_shape_check():
    head = mlp_head_init(MlpHeadConfig(8, 3, 4), 0)
    assert mlp_forward(head, torch.zeros(5, 8)).shape == (5, 3)
    with pytest.raises(ShapeError):
        head(torch.zeros(5, 7))


def test_encode_present_skips_absent_rows():
    enc = imu_encoder_init(ImuEncoderConfig(in_channels=2, block_channels=(4, 4, 4), min_input_len=64), 0).eval()
    x = torch.randn(3, 2, 64)
    out = encode_present(enc, x, torch.tensor([1, 0, 1]))
    assert torch.count_nonzero(out[1]) == 0
    torch.testing.assert_close(out[[0, 2]], enc(x[[0, 2]]))
    # garbage in an absent row has no effect
    x2 = x.clone()
    x2[1] = 1e6
    torch.testing.assert_close(encode_present(enc, x2, torch.tensor([1, 0, 1])), out)
