"""Autograd against central finite differences in float64."""
import torch

from fdcheck import agreement, central_differences, gradient_agreement
from mmhar.models import ImuEncoderConfig, MlpHeadConfig, VideoEncoderConfig, imu_encoder_init, mlp_head_init
from mmhar.models.fusion import cross_entropy_loss
from mmhar.models.video import MINI3D, video_encoder_init

THRESHOLD = 0.95


def scalar_loss(out, labels):
    return cross_entropy_loss(out, labels) if out.shape[1] > 1 else out.pow(2).sum()


def test_fd_oracle_on_known_function():
    w = torch.tensor([1.5, -2.0], dtype=torch.float64, requires_grad=True)
    numeric = central_differences(lambda: (w ** 3).sum(), [w])
    exact = 3 * w.detach() ** 2
    assert agreement([exact], numeric, rel_tol=1e-6) == 1.0


def test_imu_encoder_gradients():
    torch.manual_seed(0)
    enc = imu_encoder_init(ImuEncoderConfig(in_channels=2, block_channels=(4, 4, 4), min_input_len=64), 1)
    enc.double().eval()
    x = torch.randn(3, 2, 64, dtype=torch.float64)
    proj = torch.randn(4, 3, dtype=torch.float64)
    labels = torch.tensor([0, 1, 2])
    frac = gradient_agreement(enc.parameters(), lambda: cross_entropy_loss(enc(x) @ proj, labels), step=1e-5)
    assert frac >= THRESHOLD, frac


def test_mini3d_gradients():
    torch.manual_seed(0)
    enc = video_encoder_init(VideoEncoderConfig(MINI3D, (4, 8, 8), mini_channels=(2, 3, 2)), 2)
    enc.double().eval()
    x = torch.rand(2, 4, 8, 8, 3, dtype=torch.float64)
    labels = torch.tensor([0, 1])
    frac = gradient_agreement(enc.parameters(), lambda: cross_entropy_loss(enc(x), labels), step=1e-5)
    assert frac >= THRESHOLD, frac


def test_mlp_head_gradients():
    torch.manual_seed(0)
    head = mlp_head_init(MlpHeadConfig(6, 4, hidden_dim=5), 3).double()
    x = torch.randn(8, 6, dtype=torch.float64)
    labels = torch.randint(0, 4, (8,))
    frac = gradient_agreement(head.parameters(), lambda: cross_entropy_loss(head(x), labels), step=1e-5)
    assert frac >= THRESHOLD, frac


def test_fd_oracle_flags_a_wrong_gradient():
    w = torch.tensor([1.5, -2.0, 0.7], dtype=torch.float64)
    numeric = central_differences(lambda: (w ** 3).sum(), [w])
    wrong = 3 * w ** 2
    wrong[1] *= 1.01
    assert agreement([wrong], numeric) == 2 / 3
