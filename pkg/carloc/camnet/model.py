"""CAM network: truncated backbone, global average pooling and one linear layer.

Training reads class scores from the pooled features; inference projects
every feature location through the same linear weights and applies a ReLU.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
import torch
from torch import nn

from carloc.camnet.backbones import StagedBackbone, build_backbone
from carloc.camnet.heatmap import Heatmap
from carloc.core.errors import IndexOutOfRange, InvalidConfig, ParseError
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

CHECKPOINT_FORMAT = "carloc-cam/1"


@dataclass(frozen=True)
class CamModelSpec:
    num_classes: int
    backbone: str = "resnet50"
    pretrained: bool = True
    truncate_after: int = 4
    frozen_stages: Tuple[int, ...] = (1,)
    include_bias: bool = True

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise InvalidConfig(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0 <= self.truncate_after <= 4:
            raise InvalidConfig(f"truncate_after must lie in [0, 4], got {self.truncate_after}")
        outside = [s for s in self.frozen_stages if not 0 <= s <= self.truncate_after]
        if outside:
            raise InvalidConfig(f"frozen stages {outside} are not retained (truncate_after={self.truncate_after})")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    crop_size: int = 512
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.crop_size < 64:
            raise InvalidConfig(f"crop_size must be >= 64, got {self.crop_size}")
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size must be >= 1, got {self.batch_size}")


class CamNetwork(nn.Module):
    def __init__(self, backbone: StagedBackbone, num_classes: int) -> None:
        super().__init__()
        self.backbone = backbone
        self.classifier = nn.Linear(backbone.out_channels(), num_classes)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.backbone(x)

    def logits_from_features(self, features: torch.Tensor) -> torch.Tensor:
        return self.classifier(features.mean(dim=(2, 3)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.logits_from_features(self.features(x))

    def freeze(self, stages: Tuple[int, ...]) -> None:
        for index in stages:
            self.backbone.stages[index].requires_grad_(False)

    def hold_frozen_in_eval(self, stages: Tuple[int, ...]) -> None:
        # BatchNorm running statistics of frozen stages stay put as well
        for index in stages:
            self.backbone.stages[index].eval()


def build_network(spec: CamModelSpec, seed: int = 0) -> CamNetwork:
    """Deterministic construction: same spec and seed give identical initial weights."""

    torch.manual_seed(seed)
    backbone = build_backbone(spec.backbone, pretrained=spec.pretrained, truncate_after=spec.truncate_after)
    return CamNetwork(backbone, spec.num_classes)


@dataclass(frozen=True)
class CamWeights:
    spec: CamModelSpec
    state_dict: Mapping[str, torch.Tensor]
    label_space: str
    vocab: Tuple[str, ...] = ()
    epochs: int = 0
    seed: int = 0
    history: Tuple[Dict[str, float], ...] = field(default_factory=tuple)
    # eval-mode accuracy on the un-augmented train images after the last epoch
    final_accuracy: float = 0.0

    def __post_init__(self) -> None:
        weight = self.state_dict["classifier.weight"]
        if weight.shape[0] != self.spec.num_classes:
            raise InvalidConfig(f"classifier has {weight.shape[0]} rows, spec says {self.spec.num_classes}")

    @property
    def W(self) -> torch.Tensor:
        return self.state_dict["classifier.weight"]

    @property
    def bias(self) -> torch.Tensor:
        return self.state_dict["classifier.bias"]

    def network(self) -> CamNetwork:
        net = build_network(_offline(self.spec), self.seed)
        net.load_state_dict(self.state_dict)
        if net.backbone.out_channels() != self.W.shape[1]:
            raise InvalidConfig("classifier width does not match the backbone channel count")
        return net.eval()


def _offline(spec: CamModelSpec) -> CamModelSpec:
    # weights come from the checkpoint; skip the pretrained download
    values = asdict(spec)
    values["pretrained"] = False
    return CamModelSpec(**values)


def cam_map(
    weights: CamWeights,
    features: torch.Tensor,
    class_index: int,
    include_bias: Optional[bool] = None,
    image_id: str = "",
    source_size: Optional[Tuple[int, int]] = None,
) -> Heatmap:
    """``max(0, W[c] . f[:, y, x] + b[c])`` at every feature location of a ``C x H x W`` map.

    ``source_size`` is the (height, width) of the image the features came from;
    it defaults to the feature grid itself.
    """

    if not 0 <= class_index < weights.spec.num_classes:
        raise IndexOutOfRange(f"class index {class_index} outside [0, {weights.spec.num_classes})")
    use_bias = weights.spec.include_bias if include_bias is None else include_bias
    values = project_cam(weights.W[class_index], weights.bias[class_index] if use_bias else None, features)
    array = values.detach().cpu().numpy().astype(np.float32)
    return Heatmap(array, image_id, class_index, source_size or (array.shape[0], array.shape[1]))


def project_cam(w: torch.Tensor, b: Optional[torch.Tensor], features: torch.Tensor) -> torch.Tensor:
    w = w.to(features.device, features.dtype)
    out = torch.einsum("k,khw->hw", w, features)
    if b is not None:
        out = out + b.to(features.device, features.dtype)
    return torch.relu(out)


def save_checkpoint(weights: CamWeights, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: Dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "spec": {**asdict(weights.spec), "frozen_stages": list(weights.spec.frozen_stages)},
        "label_space": weights.label_space,
        "vocab": list(weights.vocab),
        "epochs": weights.epochs,
        "seed": weights.seed,
        "history": [dict(h) for h in weights.history],
        "final_accuracy": weights.final_accuracy,
        "state_dict": {k: v.detach().cpu() for k, v in weights.state_dict.items()},
    }
    torch.save(payload, path)
    logger.info("Saved checkpoint for label space %s to %s", weights.label_space, path)
    return path


def load_checkpoint(path: str | Path) -> CamWeights:
    path = Path(path)
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise ParseError(f"not a {CHECKPOINT_FORMAT} checkpoint", path=str(path))
    spec_values = dict(payload["spec"])
    spec_values["frozen_stages"] = tuple(spec_values["frozen_stages"])
    return CamWeights(
        spec=CamModelSpec(**spec_values),
        state_dict=payload["state_dict"],
        label_space=payload["label_space"],
        vocab=tuple(payload["vocab"]),
        epochs=int(payload["epochs"]),
        seed=int(payload["seed"]),
        history=tuple(payload["history"]),
        final_accuracy=float(payload.get("final_accuracy", 0.0)),
    )
