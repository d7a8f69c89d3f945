"""Experiment configuration: one flat key-value file per experiment row."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from carloc.boxer.pipeline import BoxerConfig
from carloc.camnet.model import TrainConfig
from carloc.config import config_section, get_settings, load_flat_config, parse_section
from carloc.core.errors import ConfigError
from carloc.ingest.manifest import LABEL_FIELDS
from carloc.labeling.features import ExtractorConfig

# the eight label setups of the study, then the random baselines
STUDY_SELECTORS = ("make", "model", "year", "make-year", "model-year", "kmeans:16", "kmeans:75", "kmeans:431")
RANDOM_BASELINES = ("random:75", "random:431", "random:16")

# overrides for CPU runs on the synthetic set: tiny nets trained from scratch, all stages learning
DESK_SCALE: Dict[str, str] = {
    "model.backbone": "tiny",
    "model.pretrained": "false",
    "model.frozen_stages": "",
    "train.epochs": "15",
    "train.crop_size": "128",
    "train.batch_size": "16",
    "train.learning_rate": "0.05",
    "features.extractor": "tiny",
    "features.pretrained": "false",
    "features.image_size": "128",
}

_SECTIONS = ("train", "model", "boxer", "features", "kmeans")


@dataclass(frozen=True)
class LabelSelector:
    kind: str
    fields: Tuple[str, ...] = ()
    n: int = 0

    @property
    def text(self) -> str:
        if self.kind in ("human", "merged"):
            return "-".join(self.fields)
        return f"{self.kind}:{self.n}"


def parse_selector(text: str) -> LabelSelector:
    """``make | model | year | a-b | random:n | kmeans:k``."""

    text = text.strip().lower()
    counted = re.fullmatch(r"(random|kmeans):(\d+)", text)
    if counted:
        n = int(counted.group(2))
        if n < 1:
            raise ConfigError(f"label count must be >= 1 in {text!r}")
        return LabelSelector(kind=counted.group(1), n=n)
    if text in LABEL_FIELDS:
        return LabelSelector(kind="human", fields=(text,))
    parts = tuple(text.split("-"))
    if len(parts) == 2 and all(p in LABEL_FIELDS for p in parts) and parts[0] != parts[1]:
        return LabelSelector(kind="merged", fields=parts)
    raise ConfigError(f"bad label_space selector {text!r}")


@dataclass(frozen=True)
class ModelOptions:
    backbone: str = "resnet50"
    pretrained: bool = True
    truncate_after: int = 4
    frozen_stages: Tuple[int, ...] = (1,)
    include_bias: bool = True


@dataclass(frozen=True)
class KMeansOptions:
    max_iter: int = 300
    tol: float = 1e-4


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str
    label_space: str
    output_dir: str
    seed: int = 0
    split: str = "test"
    run_name: str = ""
    cache_root: str = field(default_factory=lambda: get_settings().cache_root)
    export_pgm: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelOptions = field(default_factory=ModelOptions)
    boxer: BoxerConfig = field(default_factory=BoxerConfig)
    features: ExtractorConfig = field(default_factory=ExtractorConfig)
    kmeans: KMeansOptions = field(default_factory=KMeansOptions)

    def __post_init__(self) -> None:
        parse_selector(self.label_space)
        if self.split not in ("train", "test"):
            raise ConfigError(f"split must be train or test, got {self.split!r}")

    @property
    def selector(self) -> LabelSelector:
        return parse_selector(self.label_space)

    @property
    def name(self) -> str:
        return self.run_name or self.selector.text

    def digest_payload(self) -> Dict[str, Any]:
        """Everything that shapes the results; paths of outputs excluded."""

        body = asdict(self)
        for key in ("output_dir", "cache_root", "run_name", "export_pgm"):
            body.pop(key)
        return body

    def for_selector(self, selector: str, output_dir: str | Path) -> "PipelineConfig":
        return replace(self, label_space=selector, output_dir=str(output_dir), run_name="")


_TOP_LEVEL = tuple(f.name for f in fields(PipelineConfig) if f.name not in _SECTIONS)


def _with_seed(section: Dict[str, str], seed: Optional[str]) -> Dict[str, str]:
    # the experiment seed is the default for every seeded section
    return {"seed": seed, **section} if seed else section


def load_pipeline_config(path: str | Path, overrides: Optional[Dict[str, str]] = None) -> PipelineConfig:
    values = {**load_flat_config(path), **(overrides or {})}
    unknown = sorted(k for k in values if k not in _TOP_LEVEL and k.split(".", 1)[0] not in _SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for required in ("manifest", "label_space", "output_dir"):
        if not values.get(required):
            raise ConfigError(f"config is missing {required!r}")

    seed = values.get("seed")
    sections = {
        "train": parse_section(TrainConfig, _with_seed(config_section(values, "train"), seed)),
        "model": parse_section(ModelOptions, config_section(values, "model")),
        "boxer": parse_section(BoxerConfig, config_section(values, "boxer")),
        "features": parse_section(ExtractorConfig, _with_seed(config_section(values, "features"), seed)),
        "kmeans": parse_section(KMeansOptions, config_section(values, "kmeans")),
    }
    return parse_section(PipelineConfig, {**{k: values[k] for k in _TOP_LEVEL if k in values}, **sections})
