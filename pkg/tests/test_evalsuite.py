import math
import random

import pytest

from carloc.core.errors import DuplicatePrediction, MissingPrediction, ParseError
from carloc.core.geometry import BBox, bbox_iou
from carloc.evalsuite.compare import compare_runs
from carloc.evalsuite.external import DETECTION_COLUMNS, ingest_external_detections
from carloc.evalsuite.predictions import load_predictions, save_predictions
from carloc.evalsuite.report import EvalReport, evaluate_run, load_report, mean_iou, save_report
from carloc.ingest.manifest import DatasetManifest
from conftest import memory_manifest


def _with_boxes(boxes, split="test", size=64) -> DatasetManifest:
    base = memory_manifest([(i, "m", "m-a", "2001", split) for i in boxes], size=size)
    return DatasetManifest(images=base.images, labels=base.labels, gt_boxes=dict(boxes), split=base.split)


GT = _with_boxes({"a": BBox(0, 0, 10, 10), "b": BBox(10, 10, 20, 20), "c": BBox(40, 40, 8, 8)})


def _report(name, miou, n=1):
    return EvalReport(run_name=name, per_image={f"i{k}": miou for k in range(n)}, miou=miou, n_images=n)


def test_identical_predictions_score_one():
    report = evaluate_run(list(GT.gt_boxes.items()), GT)
    assert report.miou == 1.0 and report.n_images == 3


def test_disjoint_predictions_score_zero():
    preds = [("a", BBox(50, 50, 5, 5)), ("b", BBox(0, 0, 5, 5)), ("c", BBox(0, 50, 5, 5))]
    assert evaluate_run(preds, GT).miou == 0.0


def test_hand_mean():
    preds = [("a", BBox(0, 0, 10, 10)), ("b", BBox(10, 10, 10, 20)), ("c", BBox(0, 0, 4, 4))]
    report = evaluate_run(preds, GT)
    assert report.per_image == {"a": 1.0, "b": 0.5, "c": 0.0}
    assert report.miou == 0.5


def test_miou_is_mean_of_independent_ious(tmp_path):
    rng = random.Random(0)
    gt = {f"img{n:03d}": BBox(rng.randrange(30), rng.randrange(30), rng.randrange(1, 30), rng.randrange(1, 30)) for n in range(60)}
    manifest = _with_boxes(gt)
    preds = [(i, BBox(rng.randrange(30), rng.randrange(30), rng.randrange(1, 30), rng.randrange(1, 30))) for i in gt]
    path = save_predictions(preds, tmp_path / "p.jsonl")
    report = evaluate_run(path, manifest)
    expected = math.fsum(bbox_iou(box, gt[i]) for i, box in preds) / len(preds)
    assert report.miou == expected
    shuffled = list(report.per_image.values())
    rng.shuffle(shuffled)
    assert mean_iou(shuffled) == report.miou


def test_missing_and_duplicate_predictions():
    with pytest.raises(MissingPrediction) as info:
        evaluate_run([("a", BBox(0, 0, 1, 1))], GT)
    assert info.value.ids == ("b", "c")
    with pytest.raises(DuplicatePrediction):
        evaluate_run(list(GT.gt_boxes.items()) + [("a", BBox(0, 0, 2, 2))], GT)


def test_predictions_outside_split_are_ignored():
    preds = list(GT.gt_boxes.items()) + [("stranger", BBox(0, 0, 3, 3))]
    assert evaluate_run(preds, GT).n_images == 3


def test_malformed_prediction_line(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"image_id": "a", "bbox": {"x": 0, "y": 0, "w": 1, "h": 1}}\n{"image_id": "b"}\n', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_predictions(path)
    assert info.value.line == 2


def test_report_round_trip(tmp_path):
    report = evaluate_run(list(GT.gt_boxes.items()), GT, run_name="model", config_digest="abc")
    loaded = load_report(save_report(report, tmp_path / "r.json"))
    assert loaded == report
    assert load_report(tmp_path / "r.json", run_name="renamed").run_name == "renamed"


def _detections(path, rows):
    lines = [",".join(DETECTION_COLUMNS)] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_highest_confidence_car_wins(tmp_path):
    path = _detections(
        tmp_path / "d.csv",
        [
            ("a", "car", 0.4, 20, 20, 40, 40),
            ("a", "car", 0.9, 0.0, 0.0, 10.0, 10.0),
            ("b", "person", 0.99, 0, 0, 5, 5),
            ("c", "car", 0.5, 40.2, 40.7, 47.5, 48.0),
        ],
    )
    preds = dict(ingest_external_detections(path, "car", GT))
    assert preds["a"] == BBox(0, 0, 10, 10)
    assert preds["b"] == BBox(0, 0, 64, 64)
    assert preds["c"] == BBox(40, 40, 8, 8)


def test_detector_ingest_is_deterministic(tmp_path):
    rows = [("a", "car", 0.7, 1, 1, 9, 9), ("a", "car", 0.7, 2, 2, 8, 8), ("c", "car", 0.1, 0, 0, 3, 3)]
    first = ingest_external_detections(_detections(tmp_path / "1.csv", rows), "car", GT)
    second = ingest_external_detections(_detections(tmp_path / "2.csv", rows), "car", GT)
    assert first == second
    assert dict(first)["a"] == BBox(1, 1, 8, 8)


def test_detector_header_is_checked(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("image,cls,score\n", encoding="utf-8")
    with pytest.raises(ParseError):
        ingest_external_detections(path, "car", GT)



def test_malformed_detection_row_reports_its_line(tmp_path):
    path = _detections(tmp_path / "d.csv", [("a", "car", 0.4, 1, 1, 9, 9), ("b", "car", "abc", 0, 0, 5, 5)])
    with pytest.raises(ParseError) as info:
        ingest_external_detections(path, "car", GT)
    assert info.value.line == 3

    short = tmp_path / "short.csv"
    short.write_text(",".join(DETECTION_COLUMNS) + "\na,car,0.5\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        ingest_external_detections(short, "car", GT)
    assert info.value.line == 2


def test_compare_single_and_sorted(tmp_path):
    assert len(compare_runs([_report("x", 0.3)]).rows) == 1
    table = compare_runs([_report("make", 0.54, n=3), _report("model", 0.61, n=5)])
    assert [row[0] for row in table.rows] == ["model", "make"]
    assert [row[2] for row in table.rows] == [5, 3]
    text = table.render_text()
    assert text.index("model") < text.index("make")
    csv_text = table.write_csv(tmp_path / "t.csv").read_text(encoding="utf-8").splitlines()
    assert csv_text[0] == "run_name,miou,n_images"


def test_compare_breaks_ties_by_name():
    reports = [_report("zeta", 0.5), _report("alpha", 0.5), _report("mid", 0.7)]
    for order in (reports, reports[::-1]):
        assert [row[0] for row in compare_runs(order).rows] == ["mid", "alpha", "zeta"]
