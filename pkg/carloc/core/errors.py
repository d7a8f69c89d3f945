"""Error types shared across carloc modules."""

from __future__ import annotations

from typing import Iterable, Optional, Tuple


class CarlocError(Exception):
    """Base class for every error raised by carloc."""


# Geometry

class NonPositiveExtent(CarlocError, ValueError):
    pass


class NegativeOrigin(CarlocError, ValueError):
    pass


class OutOfBounds(CarlocError, ValueError):
    pass


# Configuration

class InvalidConfig(CarlocError, ValueError):
    pass


class ConfigError(CarlocError, ValueError):
    pass


# Dataset files

class ParseError(CarlocError, ValueError):
    """Malformed record in a text artifact; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
        self.line = line
        self.path = path
        where = ""
        if path:
            where = f"{path}:"
        if line is not None:
            where = f"{where}{line}:"
        super().__init__(f"{where} {message}".strip())


class MissingAnnotation(CarlocError):
    def __init__(self, image_id: str, what: str) -> None:
        self.image_id = image_id
        super().__init__(f"image {image_id!r} has no {what}")


class MalformedSplit(CarlocError):
    def __init__(self, image_id: str, path: str) -> None:
        self.image_id = image_id
        super().__init__(f"split list names {image_id!r} but {path} does not exist")


class UnreadableImage(CarlocError):
    def __init__(self, image_id: str, reason: str) -> None:
        self.image_id = image_id
        super().__init__(f"cannot read image {image_id!r}: {reason}")


# Labels and training

class LabelMismatch(CarlocError, ValueError):
    pass


class InvalidPair(CarlocError, ValueError):
    pass


class InvalidCount(CarlocError, ValueError):
    pass


class KTooLarge(CarlocError, ValueError):
    pass


class IndexOutOfRange(CarlocError, IndexError):
    pass


# Boxes

class InvalidThreshold(CarlocError, ValueError):
    pass


class EmptyContourSet(CarlocError, ValueError):
    pass


# Evaluation

class _IdsError(CarlocError):
    kind = ""

    def __init__(self, ids: Iterable[str]) -> None:
        self.ids: Tuple[str, ...] = tuple(sorted(ids))
        preview = ", ".join(self.ids[:10])
        more = f" (+{len(self.ids) - 10} more)" if len(self.ids) > 10 else ""
        super().__init__(f"{self.kind}: {preview}{more}")


class MissingPrediction(_IdsError):
    kind = "no prediction for"


class DuplicatePrediction(_IdsError):
    kind = "more than one prediction for"


# Orchestration

class StageError(CarlocError):
    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
