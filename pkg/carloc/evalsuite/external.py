"""Reduce an off-the-shelf detector's output to one box per image."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from carloc.core.errors import OutOfBounds, ParseError
from carloc.core.geometry import BBox, clip_bbox, whole_image_box
from carloc.evalsuite.predictions import Prediction, save_predictions
from carloc.ingest.manifest import DatasetManifest
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

DETECTION_COLUMNS = ("image_id", "class_name", "confidence", "x1", "y1", "x2", "y2")


def _corner_box(x1: float, y1: float, x2: float, y2: float, width: int, height: int) -> BBox:
    left, top = max(0, math.floor(x1)), max(0, math.floor(y1))
    right, bottom = math.ceil(x2), math.ceil(y2)
    return clip_bbox(BBox(left, top, max(1, right - left), max(1, bottom - top)), width, height)


def ingest_external_detections(
    file: str | Path,
    class_filter: str,
    manifest: DatasetManifest,
    split: Optional[str] = "test",
    out: Optional[str | Path] = None,
) -> List[Prediction]:
    """Highest-confidence ``class_filter`` detection per image; whole-image box when none match."""

    path = Path(file)
    best: Dict[str, Tuple[float, BBox]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != DETECTION_COLUMNS:
            raise ParseError(f"header must be {','.join(DETECTION_COLUMNS)}", line=1, path=str(path))
        for row in reader:
            lineno = reader.line_num
            try:
                image_id = row["image_id"]
                confidence = float(row["confidence"])
                corners = [float(row[key]) for key in ("x1", "y1", "x2", "y2")]
            except (TypeError, ValueError) as exc:
                raise ParseError(f"malformed detection row: {exc}", line=lineno, path=str(path)) from exc
            if not image_id or None in row.values():
                raise ParseError("detection row has missing fields", line=lineno, path=str(path))
            if row["class_name"] != class_filter or image_id not in manifest.gt_boxes:
                continue
            ref = manifest.image(image_id)
            try:
                box = _corner_box(*corners, ref.width, ref.height)
            except OutOfBounds:
                logger.warning("Detection for %s on line %d lies outside the image; skipped", image_id, lineno)
                continue
            # strict ">" keeps the earliest row on confidence ties
            if image_id not in best or confidence > best[image_id][0]:
                best[image_id] = (confidence, box)

    predictions: List[Prediction] = []
    fallbacks = 0
    for image_id in manifest.ids(split):
        if image_id in best:
            predictions.append((image_id, best[image_id][1]))
        else:
            ref = manifest.image(image_id)
            predictions.append((image_id, whole_image_box(ref.width, ref.height)))
            fallbacks += 1
    logger.info(
        "Ingested %s detections: %d images, %d whole-image fallbacks", class_filter, len(predictions), fallbacks
    )
    if out is not None:
        save_predictions(predictions, out)
    return predictions
