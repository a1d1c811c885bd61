"""JSON wire protocol between the engine and perception services.

Endpoints:

    POST /detect          {"image_id", "object"}                  -> {"boxes": [...]}
    POST /ground          {"image_id", "sentence", "ref"?}        -> {"boxes": [...]}
    POST /match           {"image_id", "region", "texts",
                           "intents"?}                            -> {"scores": [...]}
    POST /filter_answers  {"template", "candidates", "k"}         -> {"answers": [...]}
    GET  /health                                                  -> {"status", "capabilities"}

A box travels as {"x", "y", "w", "h"} in relative decimals; a scored box
as {"box": ..., "score": ...} with the score in [0, 1]; a region as
{"op": "crop"|"mask_keep", "boxes": [...]} holding exactly one box for a
crop and exactly two for a mask.  ``ref`` and ``intents`` carry the
structured forms; services working from pixels may ignore them, the
annotation oracle requires them.

Failures use an HTTP error status plus {"error": {"code", "message"}}.
Codes: "bad_request", "unknown_image", "needs_structured", "internal".

Decoding is strict about meaning but forgiving about geometry: scores
outside [0, 1] or wrong shapes raise ProtocolViolation, while slightly
out-of-range box coordinates are clamped on ingest.
"""

from __future__ import annotations

from typing import Any, Sequence

from ..geometry import BoundingBox
from ..plan import (
    Intent,
    StructuredRef,
    intent_from_dict,
    intent_to_dict,
)
from .base import (
    BackendUnavailable,
    NeedsStructuredError,
    ProtocolViolation,
    RegionSpec,
    ScoredBox,
    UnknownImageError,
)

ENDPOINTS = ("/detect", "/ground", "/match", "/filter_answers", "/health")

_REGION_BOX_COUNT = {"crop": 1, "mask_keep": 2}

#: Error code on the wire -> exception raised client-side.
ERROR_CODE_TO_EXCEPTION = {
    "bad_request": ProtocolViolation,
    "unknown_image": UnknownImageError,
    "needs_structured": NeedsStructuredError,
    "internal": BackendUnavailable,
}

#: Exception type -> (HTTP status, error code) used server-side.
EXCEPTION_TO_STATUS = (
    (UnknownImageError, 404, "unknown_image"),
    (NeedsStructuredError, 422, "needs_structured"),
    (ProtocolViolation, 400, "bad_request"),
)


def _require(payload: dict, field: str, kind: type) -> Any:
    if not isinstance(payload, dict) or field not in payload:
        raise ProtocolViolation(f"missing field {field!r}")
    value = payload[field]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolViolation(f"field {field!r} must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise ProtocolViolation(f"field {field!r} must be {kind.__name__}")
    return value


def encode_box(box: BoundingBox) -> dict:
    return box.to_dict()


def decode_box(d: Any) -> BoundingBox:
    if not isinstance(d, dict):
        raise ProtocolViolation("box must be an object")
    try:
        return BoundingBox.clamped(
            float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolViolation(f"malformed box: {exc}") from None


def encode_scored_box(sb: ScoredBox) -> dict:
    return {"box": encode_box(sb.box), "score": sb.score}


def decode_scored_box(d: Any) -> ScoredBox:
    if not isinstance(d, dict):
        raise ProtocolViolation("scored box must be an object")
    score = _require(d, "score", float)
    if not 0.0 <= score <= 1.0:
        raise ProtocolViolation(f"score {score} outside [0, 1]")
    return ScoredBox(box=decode_box(d.get("box")), score=score)


def encode_region(region: RegionSpec) -> dict:
    return {"op": region.op, "boxes": [encode_box(b) for b in region.boxes]}


def decode_region(d: Any) -> RegionSpec:
    if not isinstance(d, dict):
        raise ProtocolViolation("region must be an object")
    op = _require(d, "op", str)
    if op not in _REGION_BOX_COUNT:
        raise ProtocolViolation(f"unknown region op {op!r}")
    boxes = _require(d, "boxes", list)
    if len(boxes) != _REGION_BOX_COUNT[op]:
        raise ProtocolViolation(
            f"region op {op!r} takes {_REGION_BOX_COUNT[op]} boxes, got {len(boxes)}"
        )
    return RegionSpec(op=op, boxes=tuple(decode_box(b) for b in boxes))


# -- requests ---------------------------------------------------------------


def encode_detect_request(image_id: str, object_name: str) -> dict:
    return {"image_id": image_id, "object": object_name}


def decode_detect_request(d: Any) -> tuple[str, str]:
    return (_require(d, "image_id", str), _require(d, "object", str))


def encode_ground_request(
    image_id: str, sentence: str, ref: StructuredRef | None
) -> dict:
    out: dict = {"image_id": image_id, "sentence": sentence}
    if ref is not None:
        out["ref"] = ref.to_dict()
    return out


def decode_ground_request(d: Any) -> tuple[str, str, StructuredRef | None]:
    image_id = _require(d, "image_id", str)
    sentence = _require(d, "sentence", str)
    ref = None
    if d.get("ref") is not None:
        try:
            ref = StructuredRef.from_dict(d["ref"])
        except (KeyError, TypeError) as exc:
            raise ProtocolViolation(f"malformed ref: {exc}") from None
    return (image_id, sentence, ref)


def encode_match_request(
    image_id: str,
    region: RegionSpec,
    texts: Sequence[str],
    intents: Sequence[Intent] | None,
) -> dict:
    out: dict = {
        "image_id": image_id,
        "region": encode_region(region),
        "texts": list(texts),
    }
    if intents is not None:
        out["intents"] = [intent_to_dict(i) for i in intents]
    return out


def decode_match_request(
    d: Any,
) -> tuple[str, RegionSpec, list[str], list[Intent] | None]:
    image_id = _require(d, "image_id", str)
    region = decode_region(d.get("region"))
    texts = _require(d, "texts", list)
    if not texts or not all(isinstance(t, str) for t in texts):
        raise ProtocolViolation("texts must be a non-empty list of strings")
    intents = None
    if d.get("intents") is not None:
        raw = d["intents"]
        if not isinstance(raw, list):
            raise ProtocolViolation("intents must be a list")
        try:
            intents = [intent_from_dict(i) for i in raw]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolViolation(f"malformed intent: {exc}") from None
        if len(intents) != len(texts):
            raise ProtocolViolation(
                f"{len(texts)} texts but {len(intents)} intents"
            )
    return (image_id, region, list(texts), intents)


def encode_filter_request(template: str, candidates: Sequence[str], k: int) -> dict:
    return {"template": template, "candidates": list(candidates), "k": k}


def decode_filter_request(d: Any) -> tuple[str, list[str], int]:
    template = _require(d, "template", str)
    candidates = _require(d, "candidates", list)
    if not all(isinstance(c, str) for c in candidates):
        raise ProtocolViolation("candidates must be strings")
    k = d.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ProtocolViolation("k must be a non-negative integer")
    return (template, list(candidates), k)


# -- responses ----------------------------------------------------------------


def encode_boxes_response(boxes: Sequence[ScoredBox]) -> dict:
    return {"boxes": [encode_scored_box(b) for b in boxes]}


def decode_boxes_response(d: Any) -> list[ScoredBox]:
    boxes = _require(d, "boxes", list)
    return [decode_scored_box(b) for b in boxes]


def encode_scores_response(scores: Sequence[float]) -> dict:
    return {"scores": list(scores)}


def decode_scores_response(d: Any) -> list[float]:
    raw = _require(d, "scores", list)
    scores = []
    for s in raw:
        if not isinstance(s, (int, float)) or isinstance(s, bool):
            raise ProtocolViolation("scores must be numbers")
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise ProtocolViolation(f"score {s} outside [0, 1]")
        scores.append(s)
    return scores


def encode_answers_response(answers: Sequence[str]) -> dict:
    return {"answers": list(answers)}


def decode_answers_response(d: Any) -> list[str]:
    answers = _require(d, "answers", list)
    if not all(isinstance(a, str) for a in answers):
        raise ProtocolViolation("answers must be strings")
    return list(answers)


def encode_error(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def decode_error(d: Any) -> tuple[str, str]:
    if isinstance(d, dict) and isinstance(d.get("error"), dict):
        err = d["error"]
        return (str(err.get("code", "internal")), str(err.get("message", "")))
    return ("internal", "malformed error body")
