"""Convolutional backbones split into numbered stages.

Stage 0 is the stem; stages 1-4 are the residual blocks of a torchvision
ResNet. ``tiny`` is a small four-stage conv net for desk-scale runs.
"""

from __future__ import annotations

from typing import Callable, Dict, List

import torch
from torch import nn
from torchvision import models

RESNETS = ("resnet18", "resnet34", "resnet50", "resnet101", "resnet152")


class StagedBackbone(nn.Module):
    """Runs its stages in order and returns the last feature map."""

    def __init__(self, stages: List[nn.Module]) -> None:
        super().__init__()
        self.stages = nn.ModuleList(stages)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for stage in self.stages:
            x = stage(x)
        return x

    @torch.no_grad()
    def out_channels(self) -> int:
        was_training = self.training
        self.eval()
        device = next(self.parameters()).device
        sample = self(torch.zeros(1, 3, 64, 64, device=device))
        self.train(was_training)
        return int(sample.shape[1])


def _resnet_stages(name: str, pretrained: bool) -> List[nn.Module]:
    net = models.get_model(name, weights="DEFAULT" if pretrained else None)
    stem = nn.Sequential(net.conv1, net.bn1, net.relu, net.maxpool)
    return [stem, net.layer1, net.layer2, net.layer3, net.layer4]


def _conv_block(c_in: int, c_out: int, stride: int, dilation: int = 1) -> nn.Module:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel_size=3, stride=stride, padding=dilation, dilation=dilation, bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


def _tiny_stages(pretrained: bool) -> List[nn.Module]:
    # no published weights exist for this net; ``pretrained`` is ignored.
    # Stride stops at 8; the dilated tail widens the receptive field to ~110 px.
    return [
        _conv_block(3, 32, 2),
        _conv_block(32, 64, 2),
        _conv_block(64, 128, 2),
        _conv_block(128, 128, 1, dilation=2),
        _conv_block(128, 192, 1, dilation=4),
    ]


_BUILDERS: Dict[str, Callable[[bool], List[nn.Module]]] = {
    name: (lambda pretrained, _name=name: _resnet_stages(_name, pretrained)) for name in RESNETS
}
_BUILDERS["tiny"] = _tiny_stages


def available_backbones() -> List[str]:
    return sorted(_BUILDERS)


def backbone_stages(name: str, pretrained: bool = True) -> List[nn.Module]:
    try:
        builder = _BUILDERS[name]
    except KeyError as exc:
        raise ValueError(f"unknown backbone {name!r}; choose from {available_backbones()}") from exc
    return builder(pretrained)


def build_backbone(name: str, pretrained: bool = True, truncate_after: int = 4) -> StagedBackbone:
    """Stages ``0..truncate_after`` of backbone ``name``."""

    stages = backbone_stages(name, pretrained)
    if not 0 <= truncate_after < len(stages):
        raise ValueError(f"truncate_after must lie in [0, {len(stages) - 1}], got {truncate_after}")
    return StagedBackbone(stages[: truncate_after + 1])
