"""Heatmap -> single bounding box, and batch runs over a heatmap directory."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from carloc.boxer.contours import bounding_rect, find_contours, largest_contour
from carloc.boxer.raster import binarize, morph_close, threshold_cut, to_grayscale
from carloc.camnet.heatmap import Heatmap, export_pgm, iter_heatmap_ids, load_heatmap
from carloc.config import config_section, load_flat_config, parse_section
from carloc.core.errors import InvalidConfig
from carloc.core.geometry import BBox, clip_bbox, whole_image_box
from carloc.evalsuite.predictions import save_predictions
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class BoxerConfig:
    threshold_fraction: float = 0.2
    kernel_size: int = 3
    iterations: int = 8

    def __post_init__(self) -> None:
        threshold_cut(self.threshold_fraction)
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidConfig(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if self.iterations < 0:
            raise InvalidConfig(f"iterations must be >= 0, got {self.iterations}")


def load_boxer_config(path: str | Path) -> BoxerConfig:
    values = load_flat_config(path)
    return parse_section(BoxerConfig, config_section(values, "boxer") or values)


def heatmap_to_bbox(h: Heatmap, cfg: BoxerConfig = BoxerConfig()) -> BBox:
    """Gray -> binary -> closing -> contours -> biggest -> rectangle; whole image when nothing survives.

    Grids coarser than the source image are resampled first, so the box is in image pixels.
    """

    h = h.at_source_size()
    height, width = h.source_size
    fallback = whole_image_box(width, height)
    binary = binarize(to_grayscale(h), cfg.threshold_fraction)
    if not binary.any():
        logger.debug("Empty binarization for %s; using whole-image box", h.image_id)
        return fallback
    closed = morph_close(binary, cfg.kernel_size, cfg.iterations)
    contours = find_contours(closed)
    if not contours:
        return fallback
    return clip_bbox(bounding_rect(largest_contour(contours)), width, height)


def run_boxer(
    heatmap_dir: str | Path,
    cfg: BoxerConfig,
    out: str | Path,
    workers: Optional[int] = None,
    pgm_dir: Optional[str | Path] = None,
) -> Path:
    """Box every heatmap in ``heatmap_dir`` and write predictions sorted by image id."""

    ids = list(iter_heatmap_ids(heatmap_dir))

    def _one(image_id: str) -> Tuple[str, BBox]:
        heatmap = load_heatmap(heatmap_dir, image_id)
        if pgm_dir is not None:
            export_pgm(to_grayscale(heatmap), Path(pgm_dir) / f"{image_id}.pgm")
        return image_id, heatmap_to_bbox(heatmap, cfg)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        predictions: List[Tuple[str, BBox]] = list(pool.map(_one, ids))
    logger.info("Boxed %d heatmaps from %s", len(predictions), heatmap_dir)
    return save_predictions(predictions, out)
