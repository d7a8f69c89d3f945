"""Dataset manifests: image records, hierarchical labels, boxes and splits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from carloc.core.errors import InvalidConfig, ParseError
from carloc.core.geometry import BBox, ImageRef
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

Split = Literal["train", "test"]
LABEL_FIELDS = ("make", "model", "year")


@dataclass(frozen=True)
class LabelRecord:
    make: str
    model: str
    year: str

    def get(self, name: str) -> str:
        if name not in LABEL_FIELDS:
            raise InvalidConfig(f"unknown label field {name!r}; expected one of {LABEL_FIELDS}")
        return getattr(self, name)


@dataclass(frozen=True)
class DatasetManifest:
    images: Tuple[ImageRef, ...]
    labels: Mapping[str, LabelRecord]
    gt_boxes: Mapping[str, BBox]
    split: Mapping[str, str]
    _index: Dict[str, ImageRef] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for ref in self.images:
            if ref.id in self._index:
                raise InvalidConfig(f"duplicate image id {ref.id!r}")
            self._index[ref.id] = ref
        ids = set(self._index)
        for name, table in (("labels", self.labels), ("gt_boxes", self.gt_boxes), ("split", self.split)):
            if set(table) != ids:
                missing = sorted(ids - set(table))[:5]
                extra = sorted(set(table) - ids)[:5]
                raise InvalidConfig(f"{name} does not cover the image ids (missing={missing}, extra={extra})")
        bad = sorted(i for i, s in self.split.items() if s not in ("train", "test"))
        if bad:
            raise InvalidConfig(f"split values must be train/test; offending ids {bad[:5]}")
        self._check_hierarchy()

    def _check_hierarchy(self) -> None:
        owner: Dict[str, str] = {}
        for image_id, rec in self.labels.items():
            make = owner.setdefault(rec.model, rec.make)
            if make != rec.make:
                raise InvalidConfig(
                    f"model {rec.model!r} appears under makes {make!r} and {rec.make!r} (image {image_id!r})"
                )

    def __len__(self) -> int:
        return len(self.images)

    def ids(self, split: Optional[str] = None) -> List[str]:
        """Image ids in manifest order, optionally restricted to one split."""

        return [ref.id for ref in self.images if split is None or self.split[ref.id] == split]

    def image(self, image_id: str) -> ImageRef:
        return self._index[image_id]

    def subset(self, split: str) -> "DatasetManifest":
        keep = self.ids(split)
        return DatasetManifest(
            images=tuple(self._index[i] for i in keep),
            labels={i: self.labels[i] for i in keep},
            gt_boxes={i: self.gt_boxes[i] for i in keep},
            split={i: self.split[i] for i in keep},
        )

    def records(self) -> Iterator[Tuple[ImageRef, LabelRecord, BBox, str]]:
        for ref in self.images:
            yield ref, self.labels[ref.id], self.gt_boxes[ref.id], self.split[ref.id]


class _BoxRow(BaseModel):
    x: int = Field(ge=0)
    y: int = Field(ge=0)
    w: int = Field(ge=1)
    h: int = Field(ge=1)


class ManifestRow(BaseModel):
    """One JSON-lines record of a manifest file."""

    id: str = Field(min_length=1)
    path: str
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    make: str
    model: str
    year: str
    bbox: _BoxRow
    split: Split

    @classmethod
    def from_parts(cls, ref: ImageRef, rec: LabelRecord, box: BBox, split: str) -> "ManifestRow":
        return cls(
            id=ref.id,
            path=ref.path,
            width=ref.width,
            height=ref.height,
            make=rec.make,
            model=rec.model,
            year=rec.year,
            bbox=_BoxRow(x=box.x, y=box.y, w=box.w, h=box.h),
            split=split,
        )


def build_manifest(rows: List[ManifestRow]) -> DatasetManifest:
    return DatasetManifest(
        images=tuple(ImageRef(r.id, r.path, r.width, r.height) for r in rows),
        labels={r.id: LabelRecord(r.make, r.model, r.year) for r in rows},
        gt_boxes={r.id: BBox(r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h) for r in rows},
        split={r.id: r.split for r in rows},
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for ref, rec, box, split in manifest.records():
            row = ManifestRow.from_parts(ref, rec, box, split)
            fh.write(json.dumps(row.model_dump(), sort_keys=True) + "\n")
    logger.info("Wrote manifest with %d images to %s", len(manifest), path)
    return path


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    rows: List[ManifestRow] = []
    seen: Dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = ManifestRow.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as exc:
                raise ParseError(f"malformed manifest record: {exc}", line=lineno, path=str(path)) from exc
            if row.id in seen:
                raise ParseError(
                    f"duplicate image id {row.id!r} (first on line {seen[row.id]})", line=lineno, path=str(path)
                )
            seen[row.id] = lineno
            rows.append(row)
    if not rows:
        raise ParseError("manifest contains no records", path=str(path))
    try:
        return build_manifest(rows)
    except InvalidConfig as exc:
        raise ParseError(str(exc), path=str(path)) from exc
