"""Adapter for the web-nature part of the CompCars distribution.

Expected layout under ``root`` (the published archive):

    image/<make_id>/<model_id>/<year>/<name>.jpg
    label/<make_id>/<model_id>/<year>/<name>.txt   viewpoint, box count, "x1 y1 x2 y2"
    misc/make_model_name.mat                       optional; make and model names
    train_test_split/classification/train.txt      relative image paths
    train_test_split/classification/test.txt

Label files carry corner pairs; rows that do not look like a corner pair are
read as ``x y w h``. Boxes are normalized to the half-open (x, y, w, h) form
and clipped to the image.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Tuple

from PIL import Image

from carloc.core.errors import MalformedSplit, MissingAnnotation, OutOfBounds, ParseError
from carloc.core.geometry import BBox, ImageRef, clip_bbox
from carloc.ingest.manifest import DatasetManifest, LabelRecord
from carloc.utils.logger import get_logger

logger = get_logger(__name__)

SPLIT_DIR = Path("train_test_split") / "classification"


def _load_names(root: Path) -> Tuple[Dict[str, str], Dict[str, str]]:
    """Make and model display names keyed by their 1-based directory ids."""

    mat_path = root / "misc" / "make_model_name.mat"
    if not mat_path.is_file():
        logger.warning("%s not found; using directory ids as label names", mat_path)
        return {}, {}

    from scipy.io import loadmat

    mat = loadmat(str(mat_path))

    def _flatten(key: str) -> Dict[str, str]:
        names: Dict[str, str] = {}
        for index, cell in enumerate(mat.get(key, []).ravel(), start=1):
            text = str(cell[0]).strip() if getattr(cell, "size", 0) else ""
            if text:
                names[str(index)] = text
        return names

    return _flatten("make_names"), _flatten("model_names")


def parse_box(text: str, width: int, height: int, image_id: str = "") -> BBox:
    """Normalize one ``a b c d`` box row to a clipped half-open box."""

    try:
        a, b, c, d = (int(round(float(tok))) for tok in text.split()[:4])
    except ValueError as exc:
        raise ParseError(f"bad box row {text!r} for {image_id!r}") from exc
    if c > a and d > b and c <= width:
        x, y, w, h = a, b, c - a, d - b
    else:
        x, y, w, h = a, b, c, d
    x, y = max(0, x), max(0, y)
    try:
        return clip_bbox(BBox(x, y, max(1, w), max(1, h)), width, height)
    except OutOfBounds as exc:
        raise ParseError(f"box {text!r} lies outside image {image_id!r}") from exc


def _read_label(path: Path, width: int, height: int, image_id: str) -> BBox:
    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    # viewpoint, number of boxes, then the box rows; only the first box is used
    if len(lines) < 3:
        raise MissingAnnotation(image_id, f"box row in {path}")
    return parse_box(lines[2], width, height, image_id)


def _image_id(rel: Path) -> str:
    return "_".join(rel.with_suffix("").parts)


def compcars_adapter(root_path: str | Path, splits: Optional[Dict[str, str]] = None) -> DatasetManifest:
    """Build a manifest from a CompCars root using its classification split lists."""

    root = Path(root_path)
    split_files = splits or {"train": "train.txt", "test": "test.txt"}
    make_names, model_names = _load_names(root)

    images: List[ImageRef] = []
    labels: Dict[str, LabelRecord] = {}
    boxes: Dict[str, BBox] = {}
    split: Dict[str, str] = {}
    model_owner: Dict[str, str] = {}

    for split_name, file_name in split_files.items():
        list_path = root / SPLIT_DIR / file_name
        if not list_path.is_file():
            raise MissingAnnotation(split_name, f"split list {list_path}")
        for lineno, line in enumerate(list_path.read_text(encoding="utf-8").splitlines(), start=1):
            rel_text = line.strip()
            if not rel_text:
                continue
            rel = Path(rel_text)
            if len(rel.parts) != 4:
                raise ParseError(f"expected make/model/year/name, got {rel_text!r}", line=lineno, path=str(list_path))
            image_id = _image_id(rel)
            image_path = root / "image" / rel
            if not image_path.is_file():
                raise MalformedSplit(image_id, str(image_path))
            label_path = (root / "label" / rel).with_suffix(".txt")
            if not label_path.is_file():
                raise MissingAnnotation(image_id, f"label file {label_path}")

            with Image.open(image_path) as img:
                width, height = img.size
            make_id, model_id, year, _ = rel.parts
            make = make_names.get(make_id, make_id)
            model = model_names.get(model_id, model_id)
            # display names can repeat across makes; keep model -> make a function
            if model_owner.setdefault(model, make) != make:
                model = f"{make} {model}"
                model_owner.setdefault(model, make)

            images.append(ImageRef(image_id, str(image_path), width, height))
            labels[image_id] = LabelRecord(make=make, model=model, year=year)
            boxes[image_id] = _read_label(label_path, width, height, image_id)
            split[image_id] = split_name

    manifest = DatasetManifest(images=tuple(images), labels=labels, gt_boxes=boxes, split=split)
    logger.info(
        "CompCars manifest: %d train / %d test, %d makes, %d models, %d years",
        len(manifest.ids("train")),
        len(manifest.ids("test")),
        len({r.make for r in labels.values()}),
        len({r.model for r in labels.values()}),
        len({r.year for r in labels.values()}),
    )
    return manifest
