"""Quick starter for carloc: renders a small synthetic car set and runs one experiment on it."""

from __future__ import annotations

import argparse
from pathlib import Path

from carloc.ingest.manifest import save_manifest
from carloc.ingest.synth import SynthConfig, synth_generate
from carloc.pipeline.config import DESK_SCALE, load_pipeline_config
from carloc.pipeline.graph import run_pipeline
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


def main() -> None:
    parser = argparse.ArgumentParser(description="Desk-scale carloc demo on synthetic cars.")
    parser.add_argument("--workdir", default="quick_start_run")
    parser.add_argument("--label-space", default="model")
    parser.add_argument("--images", type=int, default=600)
    parser.add_argument("--epochs", type=int, default=int(DESK_SCALE["train.epochs"]))
    args = parser.parse_args()

    root = Path(args.workdir)
    manifest_file = root / "manifest.jsonl"
    if not manifest_file.exists():
        logger.info("Rendering %d synthetic images into %s", args.images, root / "images")
        manifest = synth_generate(SynthConfig(n_images=args.images), root)
        save_manifest(manifest, manifest_file)

    slug = args.label_space.replace(":", "_")
    config_file = root / f"{slug}.cfg"
    config_file.write_text(
        f"manifest={manifest_file}\nlabel_space={args.label_space}\n"
        f"output_dir={root / 'runs' / slug}\ncache_root={root / 'cache'}\n",
        encoding="utf-8",
    )
    cfg = load_pipeline_config(config_file, {**DESK_SCALE, "train.epochs": str(args.epochs)})
    report = run_pipeline(cfg)
    logger.info("%s: mIoU %.4f over %d test images", report.run_name, report.miou, report.n_images)


if __name__ == "__main__":
    main()
