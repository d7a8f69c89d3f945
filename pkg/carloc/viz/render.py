"""Static renderings: box overlays and CAM montages."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

import cv2
import numpy as np
from PIL import Image

from carloc.core.errors import OutOfBounds
from carloc.core.geometry import BBox

PRED_COLOR: Tuple[int, int, int] = (255, 0, 0)
GT_COLOR: Tuple[int, int, int] = (0, 255, 0)
LINE_WIDTH = 2


def _check_inside(box: BBox, width: int, height: int) -> None:
    if box.x2 > width or box.y2 > height:
        raise OutOfBounds(f"{box} does not fit a {width}x{height} image")


def _outline(canvas: np.ndarray, box: BBox, color: Tuple[int, int, int]) -> None:
    # 2-px ring drawn inside the box edges
    for inset in range(LINE_WIDTH):
        x1, y1 = box.x + inset, box.y + inset
        x2, y2 = box.x2 - 1 - inset, box.y2 - 1 - inset
        if x2 < x1 or y2 < y1:
            break
        cv2.rectangle(canvas, (x1, y1), (x2, y2), color, thickness=1, lineType=cv2.LINE_8)


def render_overlay(image: np.ndarray, pred: BBox, gt: Optional[BBox] = None) -> np.ndarray:
    """Copy of ``image`` with the prediction outlined, then the ground truth on top."""

    height, width = image.shape[:2]
    _check_inside(pred, width, height)
    if gt is not None:
        _check_inside(gt, width, height)
    canvas = np.ascontiguousarray(image if image.ndim == 3 else np.repeat(image[:, :, None], 3, axis=2)).copy()
    _outline(canvas, pred, PRED_COLOR)
    if gt is not None:
        _outline(canvas, gt, GT_COLOR)
    return canvas


def render_cam_panel(heatmaps: Sequence[np.ndarray], columns: int) -> np.ndarray:
    """Row-major grid of gray maps, each cell padded with black to the largest map."""

    if not heatmaps:
        raise ValueError("panel needs at least one map")
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    cell_h = max(g.shape[0] for g in heatmaps)
    cell_w = max(g.shape[1] for g in heatmaps)
    cols = min(columns, len(heatmaps))
    rows = math.ceil(len(heatmaps) / cols)
    panel = np.zeros((rows * cell_h, cols * cell_w), dtype=np.uint8)
    for index, gray in enumerate(heatmaps):
        r, c = divmod(index, cols)
        panel[r * cell_h : r * cell_h + gray.shape[0], c * cell_w : c * cell_w + gray.shape[1]] = gray
    return panel


def save_raster(raster: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raster).save(path)
    return path
