"""carloc command line: one entry point for every stage and for whole experiments."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from carloc.boxer.pipeline import BoxerConfig, load_boxer_config, run_boxer
from carloc.boxer.raster import to_grayscale
from carloc.camnet.heatmap import load_heatmap
from carloc.camnet.infer import infer_split
from carloc.camnet.model import CamModelSpec, TrainConfig, load_checkpoint, save_checkpoint
from carloc.camnet.preprocess import load_image
from carloc.camnet.train import train
from carloc.config import config_section, load_flat_config, parse_section
from carloc.core.errors import CarlocError, ConfigError, InvalidConfig
from carloc.evalsuite.compare import compare_runs
from carloc.evalsuite.external import ingest_external_detections
from carloc.evalsuite.predictions import load_predictions
from carloc.evalsuite.report import evaluate_run, load_report, save_report
from carloc.ingest.compcars import compcars_adapter
from carloc.ingest.manifest import load_manifest, save_manifest
from carloc.ingest.synth import SynthConfig, load_synth_config, synth_generate
from carloc.labeling.assignment import human_labels, load_labels, merge_labels, random_labels, save_labels
from carloc.labeling.features import ExtractorConfig, extract_features, load_features, save_features
from carloc.labeling.kmeans import cluster_stats, cluster_to_labels, kmeans_cluster
from carloc.pipeline.config import ModelOptions, load_pipeline_config
from carloc.pipeline.graph import run_pipeline, run_sweep
from carloc.utils.logger import get_logger
from carloc.viz.render import render_cam_panel, render_overlay, save_raster

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

Handler = Callable[[argparse.Namespace], None]


# ingest

def _ingest_compcars(args: argparse.Namespace) -> None:
    manifest = compcars_adapter(args.root)
    save_manifest(manifest, args.out)
    print(f"{len(manifest)} images -> {args.out}")


def _ingest_synth(args: argparse.Namespace) -> None:
    cfg = load_synth_config(args.config) if args.config else SynthConfig()
    render_root = Path(args.images) if args.images else Path(args.out).parent / "synth"
    manifest = synth_generate(cfg, render_root, workers=args.workers)
    save_manifest(manifest, args.out)
    print(f"{len(manifest)} images -> {args.out}")


# label

def _label_human(args: argparse.Namespace) -> None:
    save_labels(human_labels(load_manifest(args.manifest), args.field), args.out)


def _label_merge(args: argparse.Namespace) -> None:
    save_labels(merge_labels(load_manifest(args.manifest), args.fields), args.out)


def _label_random(args: argparse.Namespace) -> None:
    save_labels(random_labels(load_manifest(args.manifest), args.n, args.seed), args.out)


def _label_extract(args: argparse.Namespace) -> None:
    values = config_section(load_flat_config(args.config), "features") if args.config else {}
    cfg = parse_section(ExtractorConfig, values)
    if args.extractor:
        cfg = ExtractorConfig(**{**asdict(cfg), "extractor": args.extractor})
    save_features(extract_features(load_manifest(args.manifest), cfg), args.out)


def _label_cluster(args: argparse.Namespace) -> None:
    result = kmeans_cluster(load_features(args.features), args.k, seed=args.seed)
    save_labels(cluster_to_labels(result, f"kmeans{args.k}"), args.out)
    if args.manifest:
        for scope, stats in cluster_stats(result, load_manifest(args.manifest)).items():
            print(f"{scope:<6} mean={stats.mean:.2f} max={stats.max} min={stats.min} std={stats.std:.2f}")


# camnet

def _camnet_train(args: argparse.Namespace) -> None:
    values = load_flat_config(args.config) if args.config else {}
    labels = load_labels(args.labels)
    options = parse_section(ModelOptions, config_section(values, "model"))
    spec = CamModelSpec(num_classes=labels.num_classes, **asdict(options))
    cfg = parse_section(TrainConfig, config_section(values, "train"))
    save_checkpoint(train(load_manifest(args.manifest), labels, spec, cfg), args.out)


def _camnet_infer(args: argparse.Namespace) -> None:
    count = infer_split(load_checkpoint(args.weights), load_manifest(args.manifest), args.out, args.split)
    print(f"{count} heatmaps -> {args.out}")


# boxer

def _boxer_run(args: argparse.Namespace) -> None:
    cfg = load_boxer_config(args.config) if args.config else BoxerConfig()
    run_boxer(args.heatmaps, cfg, args.out, workers=args.workers, pgm_dir=args.pgm)


# eval

def _eval_run(args: argparse.Namespace) -> None:
    report = evaluate_run(args.preds, load_manifest(args.manifest), split=args.split, run_name=args.name)
    if args.out:
        save_report(report, args.out)
    print(f"{report.run_name}: mIoU {report.miou:.4f} over {report.n_images} images")


def _eval_compare(args: argparse.Namespace) -> None:
    table = compare_runs([load_report(path) for path in args.reports])
    if args.csv:
        table.write_csv(args.csv)
    print(table.render_text())


def _eval_ingest_yolo(args: argparse.Namespace) -> None:
    manifest = load_manifest(args.manifest)
    ingest_external_detections(args.detections, args.class_name, manifest, split=args.split, out=args.out)


# viz

def _viz_overlay(args: argparse.Namespace) -> None:
    manifest = load_manifest(args.manifest)
    boxes = dict(load_predictions(args.preds))
    if args.image_id not in boxes:
        raise ConfigError(f"no prediction for {args.image_id!r} in {args.preds}")
    image = load_image(manifest.image(args.image_id).path)
    save_raster(render_overlay(image, boxes[args.image_id], manifest.gt_boxes[args.image_id]), args.out)


def _viz_panel(args: argparse.Namespace) -> None:
    grays = [to_grayscale(load_heatmap(directory, args.image_id)) for directory in args.heatmaps]
    save_raster(render_cam_panel(grays, args.columns or len(grays)), args.out)


# pipeline

def _overrides(pairs: Sequence[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _pipeline_run(args: argparse.Namespace) -> None:
    report = run_pipeline(load_pipeline_config(args.config, _overrides(args.set)))
    print(f"{report.run_name}: mIoU {report.miou:.4f} over {report.n_images} images")


def _pipeline_sweep(args: argparse.Namespace) -> None:
    table = run_sweep(load_pipeline_config(args.config, _overrides(args.set)), args.selectors or None)
    print(table.render_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carloc", description="Weakly-supervised and unsupervised car localization.")
    groups = parser.add_subparsers(dest="group", required=True)

    def command(group: argparse._SubParsersAction, name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        sub = group.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    ingest = groups.add_parser("ingest", help="build a dataset manifest").add_subparsers(dest="command", required=True)
    sub = command(ingest, "compcars", _ingest_compcars, "read a CompCars web-nature tree")
    sub.add_argument("--root", required=True)
    sub.add_argument("--out", required=True)
    sub = command(ingest, "synth", _ingest_synth, "render the synthetic car set")
    sub.add_argument("--config")
    sub.add_argument("--images", help="render root; PNGs land in <root>/images (default: <out dir>/synth)")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--out", required=True)

    label = groups.add_parser("label", help="label spaces and features").add_subparsers(dest="command", required=True)
    sub = command(label, "human", _label_human, "make, model or year labels")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--field", required=True, choices=("make", "model", "year"))
    sub.add_argument("--out", required=True)
    sub = command(label, "merge", _label_merge, "cross product of two label fields")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--fields", required=True, nargs=2)
    sub.add_argument("--out", required=True)
    sub = command(label, "random", _label_random, "uniform random labels")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--n", required=True, type=int)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub = command(label, "extract", _label_extract, "pooled CNN embeddings")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--extractor")
    sub.add_argument("--config")
    sub.add_argument("--out", required=True)
    sub = command(label, "cluster", _label_cluster, "KMeans pseudo-labels")
    sub.add_argument("--features", required=True)
    sub.add_argument("--k", required=True, type=int)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--manifest", help="print cluster-size statistics per split")
    sub.add_argument("--out", required=True)

    camnet = groups.add_parser("camnet", help="CAM classifier").add_subparsers(dest="command", required=True)
    sub = command(camnet, "train", _camnet_train, "train on one label space")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--labels", required=True)
    sub.add_argument("--config")
    sub.add_argument("--out", required=True)
    sub = command(camnet, "infer", _camnet_infer, "write heatmaps for a split")
    sub.add_argument("--weights", required=True)
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--split", default="test", choices=("train", "test"))
    sub.add_argument("--out", required=True)

    boxer = groups.add_parser("boxer", help="heatmaps to boxes").add_subparsers(dest="command", required=True)
    sub = command(boxer, "run", _boxer_run, "box every heatmap in a directory")
    sub.add_argument("--heatmaps", required=True)
    sub.add_argument("--config")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--pgm", help="also export 8-bit gray maps here")
    sub.add_argument("--out", required=True)

    evaluation = groups.add_parser("eval", help="mean IoU").add_subparsers(dest="command", required=True)
    sub = command(evaluation, "run", _eval_run, "score one prediction file")
    sub.add_argument("--preds", required=True)
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--split", default="test", choices=("train", "test"))
    sub.add_argument("--name", default="run")
    sub.add_argument("--out")
    sub = command(evaluation, "compare", _eval_compare, "table of several reports")
    sub.add_argument("--reports", required=True, nargs="+")
    sub.add_argument("--csv")
    sub = command(evaluation, "ingest-yolo", _eval_ingest_yolo, "best detector box per image")
    sub.add_argument("--detections", required=True)
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--class-name", default="car")
    sub.add_argument("--split", default="test", choices=("train", "test"))
    sub.add_argument("--out", required=True)

    viz = groups.add_parser("viz", help="static figures").add_subparsers(dest="command", required=True)
    sub = command(viz, "overlay", _viz_overlay, "prediction and ground truth on the image")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--preds", required=True)
    sub.add_argument("--image-id", required=True)
    sub.add_argument("--out", required=True)
    sub = command(viz, "panel", _viz_panel, "one image's heatmaps from several runs")
    sub.add_argument("--heatmaps", required=True, nargs="+")
    sub.add_argument("--image-id", required=True)
    sub.add_argument("--columns", type=int)
    sub.add_argument("--out", required=True)

    pipeline = groups.add_parser("pipeline", help="whole experiments").add_subparsers(dest="command", required=True)
    sub = command(pipeline, "run", _pipeline_run, "one label space end to end")
    sub.add_argument("--config", required=True)
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sub = command(pipeline, "sweep", _pipeline_sweep, "several label spaces and a comparison table")
    sub.add_argument("--config", required=True)
    sub.add_argument("--selectors", nargs="*")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except (ConfigError, InvalidConfig) as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except CarlocError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    except OSError as exc:
        logger.error("I/O failure: %s", exc)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
