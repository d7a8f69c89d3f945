"""Graph nodes: one cached stage each.

Every stage digests its configuration together with the digests of the
stages it reads from. A stage whose digest matches the ledger entry and
whose outputs are still on disk is skipped, so reruns only redo what an
edit actually touched.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import time
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional

from carloc.boxer.pipeline import run_boxer
from carloc.camnet.infer import infer_split
from carloc.camnet.model import CamModelSpec, load_checkpoint, save_checkpoint
from carloc.camnet.train import train
from carloc.core.errors import ParseError, StageError
from carloc.core.geometry import config_digest
from carloc.evalsuite.report import evaluate_run, load_report, save_report
from carloc.labeling.assignment import human_labels, load_labels, merge_labels, random_labels, save_labels
from carloc.labeling.features import extract_features, load_features, save_features
from carloc.labeling.kmeans import cluster_stats, cluster_to_labels, kmeans_cluster
from carloc.pipeline.state import PipelineState
from carloc.utils.logger import get_logger

logger = get_logger(__name__)
stage_logger = get_logger("carloc.pipeline.stage_log")
# stage events reach the JSON log whatever the console level is
stage_logger.setLevel(logging.INFO)

Update = Dict[str, Any]


def file_digest(path: str | Path) -> str:
    sha = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


class StageLedger:
    """``stages.json``: stage name -> digest of its last completed run."""

    def __init__(self, path: Path) -> None:
        self.path = path

    def read(self) -> Dict[str, str]:
        if not self.path.exists():
            return {}
        try:
            return dict(json.loads(self.path.read_text(encoding="utf-8")))
        except (ValueError, TypeError):
            logger.warning("Unreadable stage ledger %s; every stage will rerun", self.path)
            return {}

    def get(self, stage: str) -> str:
        return self.read().get(stage, "")

    def record(self, stage: str, digest: str) -> None:
        entries = self.read()
        entries[stage] = digest
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(entries, indent=1, sort_keys=True), encoding="utf-8")


def _execute(
    state: PipelineState,
    stage: str,
    payload: Dict[str, Any],
    outputs: Iterable[Path],
    compute: Callable[[], None],
    shared: bool = False,
    validate: Optional[Callable[[], object]] = None,
) -> Update:
    """Run ``compute`` unless the ledger already holds this digest and the outputs exist.

    ``shared`` outputs are named by their digest, so their presence alone is a hit,
    provided ``validate`` (when given) reads them without a ``ParseError``.
    """

    digest = config_digest(payload)
    ledger = StageLedger(state.layout.ledger)
    started = time.perf_counter()
    present = all(path.exists() for path in outputs)
    if present and shared and validate is not None:
        try:
            validate()
        except ParseError as exc:
            logger.warning("Cached %s output is unreadable, recomputing: %s", stage, exc)
            present = False
    if present and (shared or ledger.get(stage) == digest):
        status = "hit"
    else:
        status = "run"
        try:
            compute()
        except Exception as exc:
            elapsed = round((time.perf_counter() - started) * 1000.0, 1)
            stage_logger.error(
                "stage",
                extra={"stage": stage, "status": "failed", "digest": digest, "elapsed_ms": elapsed, "error": str(exc)},
            )
            if isinstance(exc, StageError):
                raise
            raise StageError(stage, exc) from exc
        ledger.record(stage, digest)
    elapsed = round((time.perf_counter() - started) * 1000.0, 1)
    stage_logger.info("stage", extra={"stage": stage, "status": status, "digest": digest, "elapsed_ms": elapsed})
    logger.info("Stage %s: %s (%.1f ms)", stage, status, elapsed)
    return {
        "digests": {**state.digests, stage: digest},
        "stages": [*state.stages, {"stage": stage, "status": status}],
    }


def features_node(state: PipelineState) -> Update:
    cfg = state.config
    payload = {"manifest": state.manifest_digest, "features": asdict(cfg.features)}
    path = state.layout.features(config_digest(payload))

    def compute() -> None:
        save_features(extract_features(state.manifest, cfg.features), path)

    return _execute(state, "features", payload, [path], compute, shared=True, validate=lambda: load_features(path))


def cluster_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    features_digest = state.digests["features"]
    k = cfg.selector.n
    payload = {"features": features_digest, "k": k, "seed": cfg.seed, "kmeans": asdict(cfg.kmeans)}

    def compute() -> None:
        table = load_features(layout.features(features_digest))
        result = kmeans_cluster(table, k, seed=cfg.seed, max_iter=cfg.kmeans.max_iter, tol=cfg.kmeans.tol)
        save_labels(cluster_to_labels(result, f"kmeans{k}"), layout.cluster_labels)
        stats = {scope: asdict(s) for scope, s in cluster_stats(result, state.manifest).items()}
        body = {"k": k, "stats": stats, "inertia_history": list(result.inertia_history), "n_iter": result.n_iter}
        layout.cluster_stats.write_text(json.dumps(body, indent=1, sort_keys=True), encoding="utf-8")

    return _execute(state, "cluster", payload, [layout.cluster_labels, layout.cluster_stats], compute)


def labels_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    selector = cfg.selector
    payload = {
        "manifest": state.manifest_digest,
        "selector": selector.text,
        "seed": cfg.seed,
        "cluster": state.digests.get("cluster", ""),
    }

    def compute() -> None:
        if selector.kind == "human":
            labels = human_labels(state.manifest, selector.fields[0])
        elif selector.kind == "merged":
            labels = merge_labels(state.manifest, selector.fields)
        elif selector.kind == "random":
            labels = random_labels(state.manifest, selector.n, cfg.seed)
        else:
            labels = load_labels(layout.cluster_labels)
        save_labels(labels, layout.labels)
        logger.info("Label space %s: %d classes", labels.space_name, labels.num_classes)

    return _execute(state, "labels", payload, [layout.labels], compute)


def train_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    payload = {
        "labels": state.digests["labels"],
        "manifest": state.manifest_digest,
        "model": asdict(cfg.model),
        "train": asdict(cfg.train),
    }

    def compute() -> None:
        labels = load_labels(layout.labels)
        spec = CamModelSpec(num_classes=labels.num_classes, **asdict(cfg.model))
        save_checkpoint(train(state.manifest, labels, spec, cfg.train), layout.checkpoint)

    return _execute(state, "train", payload, [layout.checkpoint], compute)


def infer_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    payload = {"train": state.digests["train"], "split": cfg.split}

    def compute() -> None:
        if layout.heatmaps.exists():
            shutil.rmtree(layout.heatmaps)
        infer_split(load_checkpoint(layout.checkpoint), state.manifest, layout.heatmaps, cfg.split)

    return _execute(state, "infer", payload, [layout.heatmaps], compute)


def boxes_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    payload = {"infer": state.digests["infer"], "boxer": asdict(cfg.boxer)}

    def compute() -> None:
        pgm_dir = layout.gray if cfg.export_pgm else None
        run_boxer(layout.heatmaps, cfg.boxer, layout.predictions, pgm_dir=pgm_dir)

    return _execute(state, "boxes", payload, [layout.predictions], compute)


def evaluate_node(state: PipelineState) -> Update:
    cfg, layout = state.config, state.layout
    payload = {
        "boxes": state.digests["boxes"],
        "manifest": state.manifest_digest,
        "split": cfg.split,
        "run_name": cfg.name,
    }

    def compute() -> None:
        report = evaluate_run(
            layout.predictions,
            state.manifest,
            split=cfg.split,
            run_name=cfg.name,
            config_digest=config_digest(cfg.digest_payload()),
        )
        save_report(report, layout.report)

    update = _execute(state, "evaluate", payload, [layout.report], compute)
    update["report"] = load_report(layout.report)
    return update
