"""Heatmap inference: original + mirrored half-scale branch, summed at image size."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import torch
import torch.nn.functional as F

from carloc.camnet.heatmap import Heatmap, save_heatmap
from carloc.camnet.model import CamNetwork, CamWeights, project_cam
from carloc.camnet.preprocess import load_image, preprocess_eval
from carloc.config import get_settings
from carloc.core.errors import UnreadableImage
from carloc.ingest.manifest import DatasetManifest
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


class CamInferencer:
    """Holds the eval network for one set of weights."""

    def __init__(self, weights: CamWeights, device: Optional[str] = None) -> None:
        self.weights = weights
        self.device = device or get_settings().torch_device()
        self.net: CamNetwork = weights.network().to(self.device)
        self.include_bias = weights.spec.include_bias

    def _map(self, features: torch.Tensor, class_index: int) -> torch.Tensor:
        bias = self.net.classifier.bias[class_index] if self.include_bias else None
        return project_cam(self.net.classifier.weight[class_index], bias, features)

    @torch.no_grad()
    def __call__(self, image: np.ndarray, image_id: str = "") -> Heatmap:
        height, width = int(image.shape[0]), int(image.shape[1])
        original, mirrored = preprocess_eval(image)

        features = self.net.features(original[None].to(self.device))
        class_index = int(self.net.logits_from_features(features)[0].argmax())
        base = self._map(features[0], class_index)

        mirrored_features = self.net.features(mirrored[None].to(self.device))
        flipped = torch.flip(self._map(mirrored_features[0], class_index), dims=[-1])

        # the branches live on different grids; each is brought to image size on its own
        total = sum(
            F.interpolate(m[None, None], size=(height, width), mode="bilinear", align_corners=False)[0, 0]
            for m in (base, flipped)
        )
        values = total.cpu().numpy().astype(np.float32)
        return Heatmap(values, image_id, class_index, (height, width))


def infer_heatmap(weights: CamWeights, image: np.ndarray, image_id: str = "") -> Heatmap:
    return CamInferencer(weights)(image, image_id)


def infer_split(
    weights: CamWeights,
    manifest: DatasetManifest,
    out_dir: str | Path,
    split: Optional[str] = "test",
    ids: Optional[Iterable[str]] = None,
) -> int:
    """Write one heatmap per image of ``split`` under ``out_dir``; returns the count."""

    inferencer = CamInferencer(weights)
    selected = list(ids) if ids is not None else manifest.ids(split)
    for count, image_id in enumerate(selected, start=1):
        try:
            image = load_image(manifest.image(image_id).path)
        except (OSError, ValueError) as exc:
            raise UnreadableImage(image_id, str(exc)) from exc
        save_heatmap(inferencer(image, image_id), out_dir)
        if count % 500 == 0:
            logger.info("Inferred %d/%d heatmaps", count, len(selected))
    logger.info("Wrote %d heatmaps to %s", len(selected), out_dir)
    return len(selected)
