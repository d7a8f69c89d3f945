"""Prediction files: JSON lines of ``{"image_id", "bbox"}``."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Tuple

from carloc.core.errors import ParseError
from carloc.core.geometry import BBox, bbox_from_json, bbox_to_json

Prediction = Tuple[str, BBox]


def save_predictions(predictions: Iterable[Prediction], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(predictions, key=lambda p: p[0])
    with path.open("w", encoding="utf-8") as fh:
        for image_id, box in rows:
            fh.write(json.dumps({"image_id": image_id, "bbox": bbox_to_json(box)}, sort_keys=True) + "\n")
    return path


def load_predictions(path: str | Path) -> List[Prediction]:
    """All rows in file order; duplicates are kept for the caller to judge."""

    path = Path(path)
    rows: List[Prediction] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                image_id = obj["image_id"]
                box = obj["bbox"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"malformed prediction: {exc}", line=lineno, path=str(path)) from exc
            if not isinstance(image_id, str) or not image_id:
                raise ParseError("image_id must be a non-empty string", line=lineno, path=str(path))
            try:
                rows.append((image_id, bbox_from_json(box, line=lineno)))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno, path=str(path)) from exc
    return rows
