"""Image embeddings from a pretrained backbone, cut at the classifier input."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from carloc.camnet.backbones import build_backbone
from carloc.camnet.preprocess import load_image, to_normalized_tensor
from carloc.config import get_settings
from carloc.core.errors import InvalidConfig, ParseError, UnreadableImage
from carloc.ingest.manifest import DatasetManifest
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_EXTRACTOR = "resnet152"


@dataclass(frozen=True)
class FeatureTable:
    ids: Tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.ids):
            raise InvalidConfig(f"feature matrix shape {self.vectors.shape} does not match {len(self.ids)} ids")
        if not np.all(np.isfinite(self.vectors)):
            raise InvalidConfig("feature matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class ExtractorConfig:
    extractor: str = DEFAULT_EXTRACTOR
    pretrained: bool = True
    image_size: int = 224
    batch_size: int = 16
    seed: int = 0


@torch.no_grad()
def extract_features(manifest: DatasetManifest, extractor: str | ExtractorConfig = DEFAULT_EXTRACTOR) -> FeatureTable:
    """Global-average-pooled last-stage features for every manifest image, in manifest order."""

    cfg = extractor if isinstance(extractor, ExtractorConfig) else ExtractorConfig(extractor=extractor)
    device = get_settings().torch_device()
    torch.manual_seed(cfg.seed)
    backbone = build_backbone(cfg.extractor, pretrained=cfg.pretrained).to(device).eval()

    ids = manifest.ids()
    rows: List[np.ndarray] = []
    for start in range(0, len(ids), cfg.batch_size):
        chunk = ids[start : start + cfg.batch_size]
        batch = torch.stack([_load_square(manifest, image_id, cfg.image_size) for image_id in chunk]).to(device)
        pooled = backbone(batch).mean(dim=(2, 3))
        rows.append(pooled.cpu().numpy().astype(np.float32))
    vectors = np.concatenate(rows, axis=0) if rows else np.zeros((0, 0), dtype=np.float32)
    logger.info("Extracted %d x %d features with %s", vectors.shape[0], vectors.shape[1], cfg.extractor)
    return FeatureTable(tuple(ids), vectors)


def _load_square(manifest: DatasetManifest, image_id: str, size: int) -> torch.Tensor:
    try:
        image = load_image(manifest.image(image_id).path)
    except (OSError, ValueError) as exc:
        raise UnreadableImage(image_id, str(exc)) from exc
    tensor = to_normalized_tensor(image)
    # whole-frame resize keeps off-centre cars inside the view
    return F.interpolate(tensor[None], size=(size, size), mode="bilinear", align_corners=False, antialias=True)[0]


def save_features(table: FeatureTable, path: str | Path) -> Path:
    """One JSON header line ``{ids, dim}`` followed by the raw float32 matrix.

    The file appears under ``path`` only once it is complete.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({"ids": list(table.ids), "dim": table.dim, "dtype": "float32"})
    partial = path.with_name(path.name + ".part")
    with partial.open("wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(table.vectors, dtype="<f4").tobytes())
    os.replace(partial, path)
    return path


def load_features(path: str | Path) -> FeatureTable:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            header = json.loads(fh.readline().decode("utf-8"))
            ids: Sequence[str] = header["ids"]
            dim = int(header["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad feature header: {exc}", line=1, path=str(path)) from exc
        raw = np.frombuffer(fh.read(), dtype="<f4")
    if raw.size != len(ids) * dim:
        raise ParseError(f"expected {len(ids)} x {dim} floats, found {raw.size}", path=str(path))
    return FeatureTable(tuple(ids), raw.reshape(len(ids), dim).astype(np.float32))
