"""Experiment orchestration: cached stages wired into a LangGraph graph."""

from carloc.pipeline.config import (
    RANDOM_BASELINES,
    STUDY_SELECTORS,
    LabelSelector,
    PipelineConfig,
    load_pipeline_config,
    parse_selector,
)
from carloc.pipeline.graph import build_graph, run_pipeline, run_sweep

__all__ = [
    "LabelSelector",
    "PipelineConfig",
    "RANDOM_BASELINES",
    "STUDY_SELECTORS",
    "build_graph",
    "load_pipeline_config",
    "parse_selector",
    "run_pipeline",
    "run_sweep",
]
