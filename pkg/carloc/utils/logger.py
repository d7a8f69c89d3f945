"""Centralized logger setup for carloc."""

from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

import colorlog
from pythonjsonlogger import jsonlogger

from carloc.config import get_settings


_LOGGER_READY = False
_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def configure_logger() -> None:
    """Configure console and rotating file logging once."""

    global _LOGGER_READY
    if _LOGGER_READY:
        return

    settings = get_settings()
    level = getattr(logging, settings.log_level.upper(), logging.INFO)

    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()

    stream_handler = colorlog.StreamHandler()
    stream_handler.setFormatter(colorlog.ColoredFormatter("%(log_color)s" + _FORMAT))
    root.addHandler(stream_handler)

    if settings.log_dir:
        logs_dir = Path(settings.log_dir)
        logs_dir.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(logs_dir / "carloc.log", maxBytes=2_000_000, backupCount=3)
        file_handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(file_handler)

    _LOGGER_READY = True


def get_logger(name: str) -> logging.Logger:
    """Get logger with shared configuration."""

    configure_logger()
    return logging.getLogger(name)


def attach_json_log(logger: logging.Logger, path: Path) -> logging.Handler:
    """Append records of ``logger`` to ``path`` as JSON lines; returns the handler to detach later."""

    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(name)s %(message)s"))
    handler.setLevel(logging.DEBUG)
    logger.addHandler(handler)
    return handler
