import pytest
import torch
from hypothesis import given, strategies as st

from mmhar.training import AdamState, TrainHyperparams, TrainingError, optimizer_step


@given(lr=st.floats(1e-5, 1e-1), wd=st.floats(0, 1e-2), seed=st.integers(0, 1000))
def test_matches_torch_adamw(lr, wd, seed):
    gen = torch.Generator().manual_seed(seed)
    init = torch.randn(4, 3, generator=gen, dtype=torch.float64)
    grads = [torch.randn(4, 3, generator=gen, dtype=torch.float64) for _ in range(5)]

    ours = {"w": init.clone().requires_grad_(True)}
    state = AdamState()
    hyper = TrainHyperparams(lr, wd, 1)
    ref = init.clone().requires_grad_(True)
    opt = torch.optim.AdamW([ref], lr=lr, weight_decay=wd, betas=(0.9, 0.999), eps=1e-8)
    for g in grads:
        optimizer_step(ours, {"w": g}, state, hyper)
        ref.grad = g.clone()
        opt.step()
    torch.testing.assert_close(ours["w"].detach(), ref.detach(), rtol=1e-10, atol=1e-12)
    assert state.step == 5


def test_zero_gradient_without_decay_leaves_params():
    p = {"w": torch.ones(3, requires_grad=True)}
    optimizer_step(p, {"w": torch.zeros(3)}, AdamState(), TrainHyperparams(0.1, 0.0, 1))
    assert p["w"].tolist() == [1.0, 1.0, 1.0]


def test_zero_gradient_with_decay_only_shrinks():
    p = {"w": torch.full((2,), 2.0, dtype=torch.float64, requires_grad=True)}
    optimizer_step(p, {"w": torch.zeros(2, dtype=torch.float64)}, AdamState(), TrainHyperparams(0.1, 0.5, 1))
    assert p["w"].tolist() == pytest.approx([2.0 * (1 - 0.05)] * 2)


def test_first_step_moves_by_learning_rate():
    p = {"w": torch.zeros(3, dtype=torch.float64, requires_grad=True)}
    optimizer_step(p, {"w": torch.tensor([2.0, -0.5, 1e3], dtype=torch.float64)}, AdamState(),
                   TrainHyperparams(0.01, 0.0, 1))
    assert p["w"].tolist() == pytest.approx([-0.01, 0.01, -0.01], rel=1e-6)


def test_frozen_parameter_gradient_is_an_error():
    p = {"w": torch.ones(2, requires_grad=False)}
    with pytest.raises(TrainingError, match="frozen"):
        optimizer_step(p, {"w": torch.ones(2)}, AdamState(), TrainHyperparams(0.1, 0.0, 1))


def test_nonfinite_gradient_is_an_error_and_nothing_changes():
    p = {"a": torch.ones(2, requires_grad=True), "b": torch.ones(2, requires_grad=True)}
    state = AdamState()
    with pytest.raises(TrainingError, match="non-finite"):
        optimizer_step(p, {"a": torch.ones(2), "b": torch.tensor([float("nan"), 0.0])}, state,
                       TrainHyperparams(0.1, 0.0, 1))
    assert p["a"].tolist() == [1.0, 1.0] and state.step == 0


def test_hyperparameter_validation():
    with pytest.raises(ValueError):
        TrainHyperparams(0.0, 0.0, 1)
    with pytest.raises(ValueError):
        TrainHyperparams(0.1, -1.0, 1)
    with pytest.raises(ValueError):
        TrainHyperparams(0.1, 0.0, 0)
