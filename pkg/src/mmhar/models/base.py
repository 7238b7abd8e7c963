"""Named parameter groups, trainability masks and seeded initialisation."""
from __future__ import annotations

import hashlib
import math
from typing import Iterable

import torch
from torch import nn


class ShapeError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class GroupedModule(nn.Module):
    """A module whose parameters are partitioned into ordered, named groups.

    Subclasses put every learnable submodule into ``self.groups`` so that
    parameter names read ``groups.<group>.<...>``.
    """

    groups: nn.ModuleDict

    @property
    def group_names(self) -> tuple:
        return tuple(self.groups.keys())

    def group_of(self, param_name: str) -> str:
        parts = param_name.split(".")
        if parts[0] == "groups" and len(parts) > 1:
            return parts[1]
        raise KeyError(f"{param_name} does not belong to a named group")

    def trainability(self) -> dict:
        """Group name -> whether every parameter in it receives updates."""
        mask = {}
        for name, group in self.groups.items():
            params = list(group.parameters())
            mask[name] = bool(params) and all(p.requires_grad for p in params)
        return mask

    def train(self, mode: bool = True):
        super().train(mode)
        # frozen groups keep normalisation statistics fixed as well as weights
        if mode:
            for name, trainable in self.trainability().items():
                if not trainable:
                    self.groups[name].eval()
        return self


def set_trainable_layers(module: GroupedModule, group_names: Iterable[str]) -> dict:
    """Mark exactly ``group_names`` trainable and freeze every other group."""
    wanted = set(group_names)
    unknown = wanted - set(module.group_names)
    if unknown:
        raise ConfigError(f"unknown groups {sorted(unknown)}; valid names: {list(module.group_names)}")
    for name, group in module.groups.items():
        for p in group.parameters():
            p.requires_grad_(name in wanted)
    module.train(module.training)
    return {name: name in wanted for name in module.group_names}


def group_digests(module: GroupedModule) -> dict:
    """SHA-256 over each group's parameters and buffers, for freeze audits."""
    out = {}
    for name, group in module.groups.items():
        h = hashlib.sha256()
        for key, tensor in sorted(group.state_dict().items()):
            h.update(key.encode())
            h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
        out[name] = h.hexdigest()
    return out


@torch.no_grad()
def fan_in_uniform_(module: nn.Module, generator: torch.Generator) -> None:
    """He-uniform weights (bound ``sqrt(6 / fan_in)``), zero biases.

    Parameters are visited in registration order so results depend only on
    the generator's seed.
    """
    for m in module.modules():
        if isinstance(m, (nn.Conv1d, nn.Conv3d, nn.Linear)):
            fan_in = m.weight[0].numel()
            bound = math.sqrt(6.0 / fan_in)
            m.weight.uniform_(-bound, bound, generator=generator)
            if m.bias is not None:
                m.bias.zero_()


def seeded_generator(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(seed))
    return g


def dropout(x: torch.Tensor, p: float, training: bool, generator: torch.Generator | None) -> torch.Tensor:
    """Inverted dropout drawing its mask from ``generator``."""
    if not training or p == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype, device=x.device) >= p
    return x * keep / (1.0 - p)


def as_tensor(x, dtype=None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x if dtype is None else x.to(dtype)
    return torch.as_tensor(x, dtype=dtype or torch.float32)
