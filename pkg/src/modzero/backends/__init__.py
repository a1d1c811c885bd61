"""Pluggable perception backends.

A backend supplies the four capabilities a plan can call: open-vocabulary
detection, referring-expression grounding, region/text matching, and
answer-vocabulary filtering.  ``base`` defines the contract, ``oracle``
implements it deterministically over annotated scene graphs, ``remote``
speaks the JSON wire protocol to an external service, and ``server``
exposes any in-process backend over that same protocol.
"""

from .base import (
    Backend,
    BackendError,
    BackendUnavailable,
    NeedsStructuredError,
    ProtocolViolation,
    RegionSpec,
    ScoredBox,
    UnknownImageError,
)
from .oracle import OracleBackend
from .recording import RecordingBackend, ReplayBackend
from .remote import RemoteBackend
from .scene import Scene, SceneObject, SceneStore
from .server import build_server

__all__ = [
    "Backend",
    "BackendError",
    "BackendUnavailable",
    "NeedsStructuredError",
    "ProtocolViolation",
    "RegionSpec",
    "ScoredBox",
    "UnknownImageError",
    "OracleBackend",
    "RecordingBackend",
    "ReplayBackend",
    "RemoteBackend",
    "Scene",
    "SceneObject",
    "SceneStore",
    "build_server",
]
