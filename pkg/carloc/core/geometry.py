"""Integer rectangles in pixel coordinates and their overlap measures.

Boxes use the half-open convention: ``BBox(x, y, w, h)`` covers columns
``[x, x + w)`` and rows ``[y, y + h)``, so ``area == w * h`` pixels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, is_dataclass
from typing import Any, Dict, Mapping

from carloc.core.errors import NegativeOrigin, NonPositiveExtent, OutOfBounds, ParseError


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise NonPositiveExtent(f"box extent must be positive, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise NegativeOrigin(f"box origin must be non-negative, got x={self.x} y={self.y}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class ImageRef:
    id: str
    path: str
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise NonPositiveExtent(f"image {self.id!r} has size {self.width}x{self.height}")


def make_bbox(x: int, y: int, w: int, h: int) -> BBox:
    return BBox(int(x), int(y), int(w), int(h))


def bbox_area(b: BBox) -> int:
    return b.area


def bbox_intersection_area(a: BBox, b: BBox) -> int:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    return max(0, iw) * max(0, ih)


def bbox_iou(a: BBox, b: BBox) -> float:
    """Intersection over union; integer areas, one final division."""

    inter = bbox_intersection_area(a, b)
    union = a.area + b.area - inter
    return inter / union


def clip_bbox(b: BBox, width: int, height: int) -> BBox:
    """Intersect ``b`` with the ``width`` x ``height`` image rectangle."""

    x1, y1 = max(0, b.x), max(0, b.y)
    x2, y2 = min(width, b.x2), min(height, b.y2)
    if x2 <= x1 or y2 <= y1:
        raise OutOfBounds(f"{b} lies outside a {width}x{height} image")
    return BBox(x1, y1, x2 - x1, y2 - y1)


def whole_image_box(width: int, height: int) -> BBox:
    return BBox(0, 0, width, height)


def bbox_to_json(b: BBox) -> Dict[str, int]:
    return {"x": b.x, "y": b.y, "w": b.w, "h": b.h}


def bbox_from_json(obj: Mapping[str, Any], line: int | None = None) -> BBox:
    try:
        return make_bbox(obj["x"], obj["y"], obj["w"], obj["h"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bbox must have integer x, y, w, h: {obj!r}", line=line) from exc


def config_digest(obj: Any) -> str:
    """Stable sha256 of a JSON-able object (dataclasses are expanded)."""

    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    payload = json.dumps(obj, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
