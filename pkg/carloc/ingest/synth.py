"""Desk-scale synthetic car dataset with hierarchical labels and exact boxes.

Each image holds one glyph. The make picks the body shape family, the model
picks a variant of that family (aspect ratio and cabin placement) and the
year picks a hue band with a stripe texture, so year carries colour but no
geometry.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import cv2
import numpy as np
from PIL import Image

from carloc.config import config_section, load_flat_config, parse_section
from carloc.core.errors import InvalidConfig
from carloc.core.geometry import BBox, ImageRef
from carloc.ingest.manifest import DatasetManifest, LabelRecord
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

BACKGROUND_CEILING = 100
FOREGROUND_FLOOR = 160
TRAIN_FRACTION = 0.7

_BODY_VALUE = 230
_STRIPE_VALUE = 180
_SATURATION = 200


@dataclass(frozen=True)
class SynthConfig:
    n_images: int = 600
    image_size: int = 128
    n_makes: int = 4
    models_per_make: int = 3
    n_years: int = 4
    seed: int = 0
    background_noise: float = 0.3

    def __post_init__(self) -> None:
        counts = {
            "n_images": self.n_images,
            "n_makes": self.n_makes,
            "models_per_make": self.models_per_make,
            "n_years": self.n_years,
        }
        low = [name for name, value in counts.items() if value < 1]
        if low:
            raise InvalidConfig(f"counts must be >= 1: {low}")
        if self.image_size < 64:
            raise InvalidConfig(f"image_size must be >= 64, got {self.image_size}")
        if not 0.0 <= self.background_noise <= 1.0:
            raise InvalidConfig(f"background_noise must lie in [0, 1], got {self.background_noise}")


def load_synth_config(path: str | Path) -> SynthConfig:
    values = load_flat_config(path)
    section = config_section(values, "synth") or values
    return parse_section(SynthConfig, section)


def make_name(make: int) -> str:
    return f"make{make}"


def model_name(make: int, variant: int) -> str:
    return f"make{make}-v{variant}"


def year_name(year: int) -> str:
    return str(2000 + year)


def _hsv_to_rgb(hue: int, value: int) -> Tuple[int, int, int]:
    pixel = np.array([[[hue, _SATURATION, value]]], dtype=np.uint8)
    r, g, b = cv2.cvtColor(pixel, cv2.COLOR_HSV2RGB)[0, 0]
    return int(r), int(g), int(b)


def _glyph_mask(size: int, make: int, variant: int, models_per_make: int, rng: np.random.Generator) -> np.ndarray:
    mask = np.zeros((size, size), dtype=np.uint8)
    body_w = size * rng.uniform(0.45, 0.7)
    aspect = 0.3 + 0.25 * variant / max(1, models_per_make - 1) if models_per_make > 1 else 0.4
    body_h = body_w * aspect
    cx = size / 2 + rng.uniform(-0.1, 0.1) * size
    cy = size / 2 + rng.uniform(-0.08, 0.08) * size + body_h * 0.2

    left, right = cx - body_w / 2, cx + body_w / 2
    top, bottom = cy - body_h / 2, cy + body_h / 2
    family = make % 4
    if family == 0:
        pts = [(left, top), (right, top), (right, bottom), (left, bottom)]
    elif family == 1:
        pts = []
        cv2.ellipse(mask, (int(cx), int(cy)), (int(body_w / 2), int(body_h / 2)), 0, 0, 360, 1, -1, cv2.LINE_8)
    elif family == 2:
        inset = body_w * 0.2
        pts = [(left + inset, top), (right - inset, top), (right, bottom), (left, bottom)]
    else:
        inset = body_h * 0.35
        pts = [
            (left + inset, top),
            (right - inset, top),
            (right, cy),
            (right - inset, bottom),
            (left + inset, bottom),
            (left, cy),
        ]
    if pts:
        cv2.fillPoly(mask, [np.round(np.array(pts)).astype(np.int32)], 1, cv2.LINE_8)

    # Cabin: width, height and horizontal placement vary with the model variant.
    cabin_w = body_w * (0.35 + 0.1 * (variant % 3))
    cabin_h = body_h * (0.45 + 0.15 * (make // 4 % 3))
    offset = (variant - (models_per_make - 1) / 2) * body_w * 0.12
    cabin_left = cx - cabin_w / 2 + offset
    cabin = np.round(
        np.array(
            [
                (cabin_left + cabin_w * 0.15, top - cabin_h),
                (cabin_left + cabin_w * 0.85, top - cabin_h),
                (cabin_left + cabin_w, top + 1),
                (cabin_left, top + 1),
            ]
        )
    ).astype(np.int32)
    cv2.fillPoly(mask, [cabin], 1, cv2.LINE_8)
    return mask


def render_image(cfg: SynthConfig, make: int, variant: int, year: int, rng: np.random.Generator) -> Tuple[np.ndarray, BBox]:
    """Render one RGB image and return it with the tight box of the glyph."""

    size = cfg.image_size
    noise = rng.normal(0.0, 60.0 * cfg.background_noise, size=(size, size, 3))
    canvas = np.clip(50.0 + noise, 0, BACKGROUND_CEILING).astype(np.uint8)

    mask = _glyph_mask(size, make, variant, cfg.models_per_make, rng).astype(bool)
    hue = int(round(170 * year / max(1, cfg.n_years)))
    period = 4 + year % 5
    stripes = (np.arange(size) // period % 2 == 0)[:, None] & mask

    canvas[mask] = _hsv_to_rgb(hue, _BODY_VALUE)
    canvas[stripes] = _hsv_to_rgb(hue, _STRIPE_VALUE)

    x, y, w, h = cv2.boundingRect(mask.astype(np.uint8))
    return canvas, BBox(int(x), int(y), int(w), int(h))


def synth_generate(cfg: SynthConfig, out_dir: str | Path, workers: Optional[int] = None) -> DatasetManifest:
    """Render ``cfg.n_images`` images under ``out_dir/images`` and describe them."""

    image_dir = Path(out_dir) / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    def _one(index: int) -> Tuple[ImageRef, LabelRecord, BBox]:
        rng = np.random.default_rng([cfg.seed, index])
        make = int(rng.integers(cfg.n_makes))
        variant = int(rng.integers(cfg.models_per_make))
        year = int(rng.integers(cfg.n_years))
        pixels, box = render_image(cfg, make, variant, year, rng)
        image_id = f"syn{index:06d}"
        path = image_dir / f"{image_id}.png"
        Image.fromarray(pixels).save(path, format="PNG")
        ref = ImageRef(image_id, str(path), cfg.image_size, cfg.image_size)
        return ref, LabelRecord(make_name(make), model_name(make, variant), year_name(year)), box

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rendered: List[Tuple[ImageRef, LabelRecord, BBox]] = list(pool.map(_one, range(cfg.n_images)))

    order = np.random.default_rng([cfg.seed, cfg.n_images]).permutation(cfg.n_images)
    n_train = int(round(TRAIN_FRACTION * cfg.n_images))
    train_idx = set(int(i) for i in order[:n_train])

    manifest = DatasetManifest(
        images=tuple(ref for ref, _, _ in rendered),
        labels={ref.id: rec for ref, rec, _ in rendered},
        gt_boxes={ref.id: box for ref, _, box in rendered},
        split={ref.id: ("train" if i in train_idx else "test") for i, (ref, _, _) in enumerate(rendered)},
    )
    logger.info(
        "Rendered %d synthetic images (%d train / %d test) into %s",
        len(manifest),
        n_train,
        len(manifest) - n_train,
        image_dir,
    )
    return manifest
