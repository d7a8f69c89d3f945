"""Class activation heatmaps and their on-disk form (PFM grid + JSON sidecar)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Tuple

import cv2
import numpy as np

from carloc.core.errors import InvalidConfig, ParseError


@dataclass(frozen=True)
class Heatmap:
    values: np.ndarray
    image_id: str
    class_index: int
    source_size: Tuple[int, int]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise InvalidConfig(f"heatmap must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidConfig(f"heatmap {self.image_id!r} has non-finite values")
        if min(self.source_size) < 1:
            raise InvalidConfig(f"heatmap {self.image_id!r} has source size {self.source_size}")

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def at_source_size(self) -> "Heatmap":
        """Bilinear resample of the grid onto the image it describes."""

        height, width = self.source_size
        if self.values.shape == (height, width):
            return self
        grid = cv2.resize(self.values.astype(np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
        return Heatmap(np.maximum(grid, 0.0), self.image_id, self.class_index, self.source_size)


def heatmap_paths(directory: str | Path, image_id: str) -> Tuple[Path, Path]:
    directory = Path(directory)
    return directory / f"{image_id}.pfm", directory / f"{image_id}.json"


def save_heatmap(heatmap: Heatmap, directory: str | Path) -> Path:
    grid_path, meta_path = heatmap_paths(directory, heatmap.image_id)
    grid_path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(grid_path), heatmap.values.astype(np.float32)):
        raise OSError(f"could not write {grid_path}")
    meta = {
        "image_id": heatmap.image_id,
        "class_index": heatmap.class_index,
        "height": heatmap.source_size[0],
        "width": heatmap.source_size[1],
    }
    meta_path.write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
    return grid_path


def load_heatmap(directory: str | Path, image_id: str) -> Heatmap:
    grid_path, meta_path = heatmap_paths(directory, image_id)
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        source_size = (int(meta["height"]), int(meta["width"]))
        class_index = int(meta["class_index"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad heatmap sidecar: {exc}", path=str(meta_path)) from exc
    values = cv2.imread(str(grid_path), cv2.IMREAD_UNCHANGED)
    if values is None:
        raise ParseError("unreadable heatmap grid", path=str(grid_path))
    if values.ndim == 3:
        values = values[:, :, 0]
    return Heatmap(values.astype(np.float32), image_id, class_index, source_size)


def iter_heatmap_ids(directory: str | Path) -> Iterator[str]:
    for meta_path in sorted(Path(directory).glob("*.json")):
        yield meta_path.stem


def export_pgm(gray: np.ndarray, path: str | Path) -> Path:
    """Write an 8-bit grayscale map as binary PGM."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), gray.astype(np.uint8)):
        raise OSError(f"could not write {path}")
    return path
