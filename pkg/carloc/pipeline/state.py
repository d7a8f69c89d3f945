"""State carried through the experiment graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from carloc.evalsuite.report import EvalReport
from carloc.ingest.manifest import DatasetManifest
from carloc.pipeline.config import PipelineConfig


@dataclass(frozen=True)
class RunLayout:
    """Where one run keeps its artifacts."""

    root: Path
    cache_root: Path

    @classmethod
    def of(cls, cfg: PipelineConfig) -> "RunLayout":
        return cls(root=Path(cfg.output_dir), cache_root=Path(cfg.cache_root))

    def features(self, digest: str) -> Path:
        return self.cache_root / "features" / f"{digest}.bin"

    @property
    def ledger(self) -> Path:
        return self.root / "stages.json"

    @property
    def stage_log(self) -> Path:
        return self.root / "stage_log.jsonl"

    @property
    def cluster_labels(self) -> Path:
        return self.root / "cluster_labels.json"

    @property
    def cluster_stats(self) -> Path:
        return self.root / "cluster_stats.json"

    @property
    def labels(self) -> Path:
        return self.root / "labels.json"

    @property
    def checkpoint(self) -> Path:
        return self.root / "model.ckpt"

    @property
    def heatmaps(self) -> Path:
        return self.root / "heatmaps"

    @property
    def gray(self) -> Path:
        return self.root / "gray"

    @property
    def predictions(self) -> Path:
        return self.root / "predictions.jsonl"

    @property
    def report(self) -> Path:
        return self.root / "report.json"


@dataclass
class PipelineState:
    config: PipelineConfig
    manifest: DatasetManifest
    manifest_digest: str
    digests: Dict[str, str] = field(default_factory=dict)
    # (stage, "run" | "hit") in execution order
    stages: List[Dict[str, str]] = field(default_factory=list)
    report: Optional[EvalReport] = None

    @property
    def layout(self) -> RunLayout:
        return RunLayout.of(self.config)
