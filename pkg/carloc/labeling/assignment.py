"""Label spaces: human, merged, random and cluster assignments."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from carloc.core.errors import InvalidConfig, InvalidCount, InvalidPair, ParseError
from carloc.ingest.manifest import LABEL_FIELDS, DatasetManifest
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

LabelKind = Literal["human", "merged", "random", "cluster"]
MERGE_DELIMITER = "#"


@dataclass(frozen=True)
class LabelAssignment:
    space_name: str
    kind: str
    vocab: Tuple[str, ...]
    mapping: Mapping[str, int]

    def __post_init__(self) -> None:
        if len(set(self.vocab)) != len(self.vocab):
            raise InvalidConfig(f"label space {self.space_name!r} has duplicate vocab entries")
        size = len(self.vocab)
        bad = [image_id for image_id, index in self.mapping.items() if not 0 <= index < size]
        if bad:
            raise InvalidConfig(f"label indices out of range for {bad[:5]} in {self.space_name!r}")

    @property
    def num_classes(self) -> int:
        return len(self.vocab)

    def restrict(self, ids: Iterable[str]) -> "LabelAssignment":
        """Same vocabulary, mapping limited to ``ids``."""

        keep = {image_id: self.mapping[image_id] for image_id in ids if image_id in self.mapping}
        return LabelAssignment(self.space_name, self.kind, self.vocab, keep)

    def label_of(self, image_id: str) -> str:
        return self.vocab[self.mapping[image_id]]


def _from_values(manifest: DatasetManifest, values: Mapping[str, str], space_name: str, kind: str) -> LabelAssignment:
    vocab = tuple(sorted(set(values.values())))
    index = {name: i for i, name in enumerate(vocab)}
    mapping = {image_id: index[values[image_id]] for image_id in manifest.ids()}
    return LabelAssignment(space_name=space_name, kind=kind, vocab=vocab, mapping=mapping)


def human_labels(manifest: DatasetManifest, field: str) -> LabelAssignment:
    if field not in LABEL_FIELDS:
        raise InvalidConfig(f"unknown label field {field!r}; expected one of {LABEL_FIELDS}")
    values = {image_id: manifest.labels[image_id].get(field) for image_id in manifest.ids()}
    return _from_values(manifest, values, field, "human")


def merge_labels(manifest: DatasetManifest, fields: Sequence[str]) -> LabelAssignment:
    """Concatenate two label fields into one label per image (``a#b``)."""

    if len(fields) != 2 or fields[0] == fields[1]:
        raise InvalidPair(f"merge needs two distinct fields, got {tuple(fields)}")
    for name in fields:
        if name not in LABEL_FIELDS:
            raise InvalidPair(f"unknown label field {name!r}")
    if set(fields) == {"make", "model"}:
        raise InvalidPair("make and model are hierarchical; merging them yields no new labels")
    first, second = fields
    values = {
        image_id: manifest.labels[image_id].get(first) + MERGE_DELIMITER + manifest.labels[image_id].get(second)
        for image_id in manifest.ids()
    }
    return _from_values(manifest, values, f"{first}-{second}", "merged")


def random_labels(manifest: DatasetManifest, n: int, seed: int) -> LabelAssignment:
    """Uniform labels in ``[0, n)`` drawn in manifest order."""

    if n < 1:
        raise InvalidCount(f"random label count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    ids = manifest.ids()
    draws = rng.integers(0, n, size=len(ids))
    mapping = {image_id: int(label) for image_id, label in zip(ids, draws)}
    return LabelAssignment(f"random{n}", "random", tuple(f"r{i}" for i in range(n)), mapping)


class _AssignmentFile(BaseModel):
    space_name: str
    kind: LabelKind
    vocab: List[str]
    mapping: Dict[str, int] = Field(default_factory=dict)


def save_labels(labels: LabelAssignment, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = _AssignmentFile(
        space_name=labels.space_name, kind=labels.kind, vocab=list(labels.vocab), mapping=dict(labels.mapping)
    )
    path.write_text(json.dumps(body.model_dump(), indent=1, sort_keys=True), encoding="utf-8")
    logger.info("Saved label space %s (%d labels, %d images) to %s", labels.space_name, labels.num_classes, len(labels.mapping), path)
    return path


def load_labels(path: str | Path) -> LabelAssignment:
    path = Path(path)
    try:
        body = _AssignmentFile.model_validate_json(path.read_text(encoding="utf-8"))
        return LabelAssignment(body.space_name, body.kind, tuple(body.vocab), body.mapping)
    except (ValidationError, InvalidConfig) as exc:
        raise ParseError(f"malformed label file: {exc}", path=str(path)) from exc
