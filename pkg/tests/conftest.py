"""Shared fixtures: small on-disk image sets and in-memory manifests."""

from __future__ import annotations

import os

os.environ.setdefault("CARLOC_LOG_DIR", "")
os.environ.setdefault("CARLOC_DEVICE", "cpu")
os.environ.setdefault("CARLOC_NUM_WORKERS", "0")

from pathlib import Path
from typing import Dict, Iterable, Tuple

import numpy as np
import pytest
from PIL import Image

from carloc.core.geometry import BBox, ImageRef
from carloc.ingest.manifest import DatasetManifest, LabelRecord, save_manifest

RED = (220, 40, 40)
BLUE = (40, 40, 220)


def memory_manifest(records: Iterable[Tuple[str, str, str, str, str]], size: int = 64) -> DatasetManifest:
    """Manifest over ``(id, make, model, year, split)`` rows; image files are not needed."""

    rows = list(records)
    return DatasetManifest(
        images=tuple(ImageRef(image_id, f"/nonexistent/{image_id}.png", size, size) for image_id, *_ in rows),
        labels={image_id: LabelRecord(make, model, year) for image_id, make, model, year, _ in rows},
        gt_boxes={image_id: BBox(0, 0, size, size) for image_id, *_ in rows},
        split={image_id: split for image_id, *_, split in rows},
    )


def write_blob_image(path: Path, size: int, color: Tuple[int, int, int], box: BBox) -> None:
    pixels = np.full((size, size, 3), 20, dtype=np.uint8)
    pixels[box.y : box.y2, box.x : box.x2] = color
    Image.fromarray(pixels).save(path)


def build_color_manifest(root: Path, per_class: int = 16, n_test: int = 4, size: int = 64, seed: int = 0) -> DatasetManifest:
    """Red and blue rectangles on a dark background; make is the colour."""

    rng = np.random.default_rng(seed)
    image_dir = root / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    images, labels, boxes, split = [], {}, {}, {}
    for make, color in (("red", RED), ("blue", BLUE)):
        for i in range(per_class):
            image_id = f"{make}{i:03d}"
            w, h = int(rng.integers(24, 41)), int(rng.integers(20, 33))
            x, y = int(rng.integers(0, size - w + 1)), int(rng.integers(0, size - h + 1))
            box = BBox(x, y, w, h)
            path = image_dir / f"{image_id}.png"
            write_blob_image(path, size, color, box)
            images.append(ImageRef(image_id, str(path), size, size))
            year = "2001" if i % 2 else "2002"
            labels[image_id] = LabelRecord(make, f"{make}-a", year)
            boxes[image_id] = box
            split[image_id] = "test" if i >= per_class - n_test else "train"
    return DatasetManifest(images=tuple(images), labels=labels, gt_boxes=boxes, split=split)


@pytest.fixture
def color_manifest(tmp_path: Path) -> DatasetManifest:
    return build_color_manifest(tmp_path)


@pytest.fixture
def color_manifest_file(tmp_path: Path, color_manifest: DatasetManifest) -> Path:
    return save_manifest(color_manifest, tmp_path / "manifest.jsonl")


def label_counts(mapping: Dict[str, int], n: int) -> np.ndarray:
    return np.bincount(np.fromiter(mapping.values(), dtype=np.int64), minlength=n)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("CARLOC_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set CARLOC_RUN_SLOW=1 to run desk-scale gates")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
