"""Mean IoU of a prediction run against manifest ground truth."""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError, model_validator

from carloc.core.errors import DuplicatePrediction, MissingPrediction, ParseError
from carloc.core.geometry import BBox, bbox_iou
from carloc.evalsuite.predictions import Prediction, load_predictions
from carloc.ingest.manifest import DatasetManifest
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


class EvalReport(BaseModel):
    run_name: str
    per_image: Dict[str, float]
    miou: float = Field(ge=0.0, le=1.0)
    n_images: int = Field(ge=0)
    config_digest: str = ""
    split: str = "test"

    @model_validator(mode="after")
    def _consistent(self) -> "EvalReport":
        if self.n_images != len(self.per_image):
            raise ValueError(f"n_images={self.n_images} but {len(self.per_image)} per-image values")
        return self


def mean_iou(values: Sequence[float]) -> float:
    # fsum is exactly rounded, so the mean does not depend on entry order
    return math.fsum(values) / len(values) if values else 0.0


def evaluate_run(
    preds: str | Path | Sequence[Prediction],
    manifest: DatasetManifest,
    split: str = "test",
    run_name: str = "run",
    config_digest: str = "",
) -> EvalReport:
    rows: List[Prediction] = load_predictions(preds) if isinstance(preds, (str, Path)) else list(preds)
    ids = manifest.ids(split)
    wanted = set(ids)
    counts = Counter(image_id for image_id, _ in rows if image_id in wanted)

    duplicated = [image_id for image_id, n in counts.items() if n > 1]
    if duplicated:
        raise DuplicatePrediction(duplicated)
    missing = [image_id for image_id in ids if image_id not in counts]
    if missing:
        raise MissingPrediction(missing)

    boxes: Dict[str, BBox] = {image_id: box for image_id, box in rows if image_id in wanted}
    per_image = {image_id: bbox_iou(boxes[image_id], manifest.gt_boxes[image_id]) for image_id in ids}
    report = EvalReport(
        run_name=run_name,
        per_image=per_image,
        miou=mean_iou(list(per_image.values())),
        n_images=len(per_image),
        config_digest=config_digest,
        split=split,
    )
    logger.info("%s: mIoU %.4f over %d %s images", run_name, report.miou, report.n_images, split)
    return report


def save_report(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(), indent=1, sort_keys=True), encoding="utf-8")
    return path


def load_report(path: str | Path, run_name: Optional[str] = None) -> EvalReport:
    path = Path(path)
    try:
        report = EvalReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ParseError(f"malformed report: {exc}", path=str(path)) from exc
    return report.model_copy(update={"run_name": run_name}) if run_name else report
