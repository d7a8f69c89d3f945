"""Mean IoU scoring, external detector ingestion and run comparison."""

from carloc.evalsuite.compare import ComparisonTable, compare_runs
from carloc.evalsuite.external import ingest_external_detections
from carloc.evalsuite.predictions import load_predictions, save_predictions
from carloc.evalsuite.report import EvalReport, evaluate_run, load_report, mean_iou, save_report

__all__ = [
    "ComparisonTable",
    "EvalReport",
    "compare_runs",
    "evaluate_run",
    "ingest_external_detections",
    "load_predictions",
    "load_report",
    "mean_iou",
    "save_predictions",
    "save_report",
]
