"""Dataset manifests: CompCars adapter and synthetic stand-in."""

from carloc.ingest.compcars import compcars_adapter
from carloc.ingest.manifest import DatasetManifest, LabelRecord, load_manifest, save_manifest
from carloc.ingest.synth import SynthConfig, load_synth_config, synth_generate

__all__ = [
    "DatasetManifest",
    "LabelRecord",
    "SynthConfig",
    "compcars_adapter",
    "load_manifest",
    "load_synth_config",
    "save_manifest",
    "synth_generate",
]
