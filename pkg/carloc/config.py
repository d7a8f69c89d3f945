"""Process configuration for carloc."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Dict, Mapping, Type, TypeVar

from dotenv import dotenv_values, load_dotenv
from pydantic import TypeAdapter, ValidationError

from carloc.core.errors import ConfigError

load_dotenv()


def _env(name: str, default: str) -> str:
    return os.getenv(name, default)


@dataclass(frozen=True)
class Settings:
    """Typed configuration loaded from environment variables."""

    app_name: str = "carloc"
    log_level: str = field(default_factory=lambda: _env("LOG_LEVEL", "INFO"))
    log_dir: str = field(default_factory=lambda: _env("CARLOC_LOG_DIR", "logs"))

    # Runtime
    cache_root: str = field(default_factory=lambda: _env("CARLOC_CACHE_ROOT", ".carloc_cache"))
    device: str = field(default_factory=lambda: _env("CARLOC_DEVICE", "auto"))
    num_workers: int = field(default_factory=lambda: int(_env("CARLOC_NUM_WORKERS", "0")))

    def torch_device(self) -> str:
        if self.device != "auto":
            return self.device
        import torch

        return "cuda" if torch.cuda.is_available() else "cpu"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return singleton settings instance."""

    return Settings()


def load_flat_config(path: str | os.PathLike[str]) -> Dict[str, str]:
    """Read a flat ``key = value`` experiment file; dotted keys name sections."""

    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {key.strip(): (value or "").strip() for key, value in values.items()}


def config_section(values: Mapping[str, str], prefix: str) -> Dict[str, str]:
    """Keys under ``prefix.`` with the prefix stripped."""

    head = prefix + "."
    return {key[len(head):]: value for key, value in values.items() if key.startswith(head)}


T = TypeVar("T")


def parse_section(cls: Type[T], values: Mapping[str, str]) -> T:
    """Coerce string values into the dataclass ``cls``; unknown keys are rejected."""

    kinds = {f.name: str(f.type) for f in fields(cls)}  # type: ignore[arg-type]
    unknown = sorted(set(values) - set(kinds))
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {unknown}")
    data: Dict[str, object] = {}
    for key, value in values.items():
        if kinds[key].lower().startswith("tuple"):
            data[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            data[key] = value
    try:
        return TypeAdapter(cls).validate_python(data)
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc
