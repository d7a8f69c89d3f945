"""Heatmap to bounding box: normalization, closing, contours, rectangle."""

from carloc.boxer.contours import Contour, bounding_rect, find_contours, largest_contour
from carloc.boxer.pipeline import BoxerConfig, heatmap_to_bbox, load_boxer_config, run_boxer
from carloc.boxer.raster import binarize, morph_close, to_grayscale

__all__ = [
    "BoxerConfig",
    "Contour",
    "binarize",
    "bounding_rect",
    "find_contours",
    "heatmap_to_bbox",
    "largest_contour",
    "load_boxer_config",
    "morph_close",
    "run_boxer",
    "to_grayscale",
]
