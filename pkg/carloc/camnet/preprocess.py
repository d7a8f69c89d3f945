"""Image loading and the train/eval preprocessing of the CAM network."""

from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
import torch
import torchvision.transforms.functional as TF
from PIL import Image

# ImageNet statistics of the pretrained backbones
MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)


def load_image(path: str | Path) -> np.ndarray:
    """RGB ``H x W x 3`` uint8 array."""

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def to_tensor(image: np.ndarray) -> torch.Tensor:
    """``H x W x 3`` uint8 -> ``3 x H x W`` float in [0, 1]."""

    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    return torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1).float().div(255.0)


def normalize(tensor: torch.Tensor) -> torch.Tensor:
    return TF.normalize(tensor, MEAN, STD)


def to_normalized_tensor(image: np.ndarray) -> torch.Tensor:
    return normalize(to_tensor(image))


def preprocess_train(image: np.ndarray, crop_size: int, rng: np.random.Generator) -> torch.Tensor:
    """Shorter side to ``crop_size``, random square crop, coin-flip mirror, normalize."""

    tensor = to_tensor(image)
    tensor = TF.resize(tensor, crop_size, antialias=True)
    _, height, width = tensor.shape
    top = int(rng.integers(0, height - crop_size + 1))
    left = int(rng.integers(0, width - crop_size + 1))
    tensor = TF.crop(tensor, top, left, crop_size, crop_size)
    if rng.random() < 0.5:
        tensor = TF.hflip(tensor)
    return normalize(tensor)


def half_size(height: int, width: int) -> Tuple[int, int]:
    return max(1, height // 2), max(1, width // 2)


def preprocess_eval(image: np.ndarray) -> Tuple[torch.Tensor, torch.Tensor]:
    """Normalized full image, and its mirror rescaled by 0.5 (floor) then normalized."""

    tensor = to_tensor(image)
    _, height, width = tensor.shape
    flipped = TF.resize(TF.hflip(tensor), list(half_size(height, width)), antialias=True)
    return normalize(tensor), normalize(flipped)
