"""Grayscale normalization, binarization and morphological closing."""

from __future__ import annotations

import cv2
import numpy as np

from carloc.camnet.heatmap import Heatmap
from carloc.core.errors import InvalidThreshold

# GrayImage: H x W uint8 in [0, 255]; BinaryImage: H x W uint8 in {0, 1}.
GrayImage = np.ndarray
BinaryImage = np.ndarray


def to_grayscale(h: Heatmap | np.ndarray) -> GrayImage:
    """``floor(255 * (v - min) / (max - min))``; a constant map becomes all zeros."""

    values = np.asarray(h.values if isinstance(h, Heatmap) else h, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high <= low:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = np.floor(255.0 * (values - low) / (high - low))
    return np.clip(scaled, 0, 255).astype(np.uint8)


def threshold_cut(threshold_fraction: float) -> int:
    if not 0.0 < threshold_fraction < 1.0:
        raise InvalidThreshold(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    return int(round(255 * threshold_fraction))


def binarize(g: GrayImage, threshold_fraction: float) -> BinaryImage:
    cut = threshold_cut(threshold_fraction)
    return (np.asarray(g) >= cut).astype(np.uint8)


def morph_close(b: BinaryImage, kernel_size: int, iterations: int) -> BinaryImage:
    """``iterations`` dilations then as many erosions with a square element.

    The image is padded with background wide enough that the dilation never
    reaches the padded edge, then cropped back, so nothing outside the image
    counts as foreground.
    """

    if iterations == 0 or kernel_size == 1:
        return np.asarray(b, dtype=np.uint8).copy()
    pad = iterations * (kernel_size // 2)
    padded = cv2.copyMakeBorder(
        np.asarray(b, dtype=np.uint8), pad, pad, pad, pad, cv2.BORDER_CONSTANT, value=0
    )
    kernel = np.ones((kernel_size, kernel_size), dtype=np.uint8)
    grown = cv2.dilate(padded, kernel, iterations=iterations, borderType=cv2.BORDER_CONSTANT, borderValue=0)
    closed = cv2.erode(grown, kernel, iterations=iterations, borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return closed[pad : pad + b.shape[0], pad : pad + b.shape[1]].copy()
