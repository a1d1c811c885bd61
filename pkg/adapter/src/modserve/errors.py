"""Exception types and their wire-protocol status mapping.

Client-caused failures subclass ``BadRequest`` (or carry their own code,
like unknown images); anything else surfaces as a 500 with code
"internal".  ``STATUS_OF`` is checked in order, most specific first.
"""

from __future__ import annotations


class AdapterError(Exception):
    """Base class for everything this service raises on purpose."""


class BadRequest(AdapterError):
    """Malformed or out-of-contract request payload."""


class DegenerateRegionError(BadRequest):
    """A region box that covers zero pixels after rounding."""


class UnknownImageError(AdapterError):
    """Image id that the store cannot resolve to a file."""


class NeedsStructuredError(AdapterError):
    """The bound model cannot interpret free text and the request did not
    carry the structured form (ref / intents)."""


class SceneFormatError(AdapterError):
    """A scene annotation file on disk that violates the documented shape.

    This is a server-side data problem, not a client error, so it maps
    to a 500 rather than a 4xx.
    """


class ConfigError(AdapterError):
    """Unusable registry configuration."""


class StartupError(AdapterError):
    """A model that cannot be loaded; the message carries the diagnostic."""


#: Exception type -> (HTTP status, wire error code); first match wins.
STATUS_OF = (
    (UnknownImageError, 404, "unknown_image"),
    (NeedsStructuredError, 422, "needs_structured"),
    (BadRequest, 400, "bad_request"),
)


def status_for(exc: Exception) -> tuple[int, str]:
    for exc_type, status, code in STATUS_OF:
        if isinstance(exc, exc_type):
            return (status, code)
    return (500, "internal")
