"""Backend contract shared by the oracle, the wire client, and test fakes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from ..geometry import BoundingBox
from ..plan import Intent, StructuredRef


class BackendError(Exception):
    """Base class for backend failures."""


class BackendUnavailable(BackendError):
    """The backend cannot be reached or answered with a server-side error."""


class ProtocolViolation(BackendError):
    """The backend answered, but outside the wire contract (bad shapes,
    scores out of [0, 1], mismatched lengths)."""


class UnknownImageError(BackendError):
    """The backend has no image under the requested id."""


class NeedsStructuredError(BackendError):
    """The backend cannot work from surface text alone and the structured
    form was missing.  Raised only by annotation-driven backends."""


@dataclass(frozen=True)
class ScoredBox:
    """One localization result.  ``score`` is a confidence in [0, 1]."""

    box: BoundingBox
    score: float


@dataclass(frozen=True)
class RegionSpec:
    """The image region a match call looks at: ``crop`` keeps exactly one
    box, ``mask_keep`` keeps the content of two boxes and blanks the rest."""

    op: str
    boxes: tuple[BoundingBox, ...]


@runtime_checkable
class Backend(Protocol):
    """The four capabilities a plan can invoke.

    Implementations must be deterministic for identical inputs within one
    process lifetime; result order is meaningful (threshold selection
    breaks score ties by position).
    """

    def detect(self, image_id: str, object_name: str) -> list[ScoredBox]:
        """All instances of one object class."""
        ...

    def ground(
        self, image_id: str, sentence: str, ref: StructuredRef | None = None
    ) -> list[ScoredBox]:
        """Referents of a (possibly relational) expression.  ``ref`` is the
        machine-readable form; text-driven backends may ignore it."""
        ...

    def match(
        self,
        image_id: str,
        region: RegionSpec,
        texts: Sequence[str],
        intents: Sequence[Intent] | None = None,
    ) -> list[float]:
        """Per-text compatibility scores in [0, 1], parallel to ``texts``."""
        ...

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        """At most ``k`` candidates plausible as fillers for ``template``,
        best first."""
        ...
