"""LangGraph orchestration of one experiment row and of a sweep over label spaces."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Any, List, Optional, Sequence

from langgraph.graph import END, StateGraph

from carloc.core.errors import ConfigError
from carloc.evalsuite.compare import ComparisonTable, compare_runs
from carloc.evalsuite.report import EvalReport
from carloc.ingest.manifest import load_manifest
from carloc.pipeline.config import RANDOM_BASELINES, STUDY_SELECTORS, PipelineConfig
from carloc.pipeline.stages import (
    boxes_node,
    cluster_node,
    evaluate_node,
    features_node,
    file_digest,
    infer_node,
    labels_node,
    stage_logger,
    train_node,
)
from carloc.pipeline.state import PipelineState, RunLayout
from carloc.utils.logger import attach_json_log, get_logger

logger = get_logger(__name__)


def needs_clustering(state: PipelineState) -> str:
    return "features" if state.config.selector.kind == "kmeans" else "labels"


def build_graph() -> Any:
    """Build and compile the experiment graph."""

    workflow = StateGraph(PipelineState)
    workflow.add_node("features", features_node)
    workflow.add_node("cluster", cluster_node)
    workflow.add_node("labels", labels_node)
    workflow.add_node("train", train_node)
    workflow.add_node("infer", infer_node)
    workflow.add_node("boxes", boxes_node)
    workflow.add_node("evaluate", evaluate_node)

    workflow.set_conditional_entry_point(needs_clustering, {
        "features": "features",
        "labels": "labels",
    })
    workflow.add_edge("features", "cluster")
    workflow.add_edge("cluster", "labels")
    workflow.add_edge("labels", "train")
    workflow.add_edge("train", "infer")
    workflow.add_edge("infer", "boxes")
    workflow.add_edge("boxes", "evaluate")
    workflow.add_edge("evaluate", END)

    return workflow.compile()


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """labels -> train -> infer -> boxes -> evaluate, with features and cluster first for KMeans spaces."""

    manifest_path = Path(cfg.manifest)
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    layout = RunLayout.of(cfg)
    layout.root.mkdir(parents=True, exist_ok=True)

    initial = {
        "config": cfg,
        "manifest": load_manifest(manifest_path),
        "manifest_digest": file_digest(manifest_path),
    }
    logger.info("Running %s into %s", cfg.name, layout.root)
    handler = attach_json_log(stage_logger, layout.stage_log)
    try:
        result = build_graph().invoke(initial)
    finally:
        stage_logger.removeHandler(handler)
        handler.close()
    report = result.report if hasattr(result, "report") else result["report"]
    return report


def selector_slug(selector: str) -> str:
    return re.sub(r"[^a-z0-9-]+", "_", selector.lower())


def run_sweep(cfg: PipelineConfig, selectors: Optional[Sequence[str]] = None) -> ComparisonTable:
    """One run per label space under ``output_dir/<space>``; writes ``comparison.csv`` and ``comparison.txt``."""

    chosen = list(selectors) if selectors else [*STUDY_SELECTORS, *RANDOM_BASELINES]
    root = Path(cfg.output_dir)
    reports: List[EvalReport] = []
    for selector in chosen:
        run_cfg = cfg.for_selector(selector, root / selector_slug(selector))
        reports.append(run_pipeline(run_cfg))
    table = compare_runs(reports)
    table.write_csv(root / "comparison.csv")
    (root / "comparison.txt").write_text(table.render_text() + "\n", encoding="utf-8")
    logger.info("Sweep of %d label spaces:\n%s", len(reports), table.render_text())
    return table
