"""Request decoding and response encoding for the wire protocol.

The shapes are the engine's backend protocol, reproduced here so the
service stays importable on its own:

    POST /detect          {"image_id", "object"}                  -> {"boxes": [...]}
    POST /ground          {"image_id", "sentence", "ref"?}        -> {"boxes": [...]}
    POST /match           {"image_id", "region", "texts",
                           "intents"?}                            -> {"scores": [...]}
    POST /filter_answers  {"template", "candidates", "k"}         -> {"answers": [...]}
    GET  /health                                                  -> {"status", ...}

Scored boxes travel as {"box": {"x","y","w","h"}, "score"}; regions as
{"op": "crop"|"mask_keep", "boxes": [...]} with one box for a crop and
two for a mask.  ``ref`` and ``intents`` stay plain dicts after shape
validation — the annotation models read them directly, the pixel models
ignore them.  Anything malformed raises ``BadRequest`` here, which the
service maps to a 400 with {"error": {"code", "message"}}.
"""

from __future__ import annotations

from typing import Any, Sequence

from .errors import BadRequest
from .regions import REGION_BOX_COUNT, Box, Region

INTENT_KINDS = ("has_attribute", "aspect_is", "relation_holds")


def _field(payload: Any, name: str, kind: type) -> Any:
    if not isinstance(payload, dict) or name not in payload:
        raise BadRequest(f"missing field {name!r}")
    value = payload[name]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise BadRequest(f"field {name!r} must be {kind.__name__}")
    return value


def _number(raw: Any, where: str) -> float:
    if not isinstance(raw, (int, float)) or isinstance(raw, bool):
        raise BadRequest(f"{where} must be a number")
    return float(raw)


def decode_box(raw: Any) -> Box:
    if not isinstance(raw, dict):
        raise BadRequest("box must be an object")
    return tuple(_number(raw.get(key), f"box field {key!r}") for key in ("x", "y", "w", "h"))


def decode_region(raw: Any) -> Region:
    op = _field(raw, "op", str)
    if op not in REGION_BOX_COUNT:
        raise BadRequest(f"unknown region op {op!r}")
    boxes = _field(raw, "boxes", list)
    if len(boxes) != REGION_BOX_COUNT[op]:
        raise BadRequest(
            f"region op {op!r} takes {REGION_BOX_COUNT[op]} boxes, got {len(boxes)}"
        )
    return Region(op=op, boxes=tuple(decode_box(b) for b in boxes))


def validate_ref(raw: Any) -> dict:
    """Structured reference: head noun, attributes, at most one relation hop."""
    if not isinstance(raw, dict):
        raise BadRequest("ref must be an object")
    _field(raw, "head", str)
    attributes = raw.get("attributes", [])
    if not isinstance(attributes, list) or not all(isinstance(a, str) for a in attributes):
        raise BadRequest("ref attributes must be strings")
    link = raw.get("link")
    if link is not None:
        _field(link, "relation", str)
        if "target" not in link:
            raise BadRequest("ref link needs a target")
        validate_ref(link["target"])
    return raw


def validate_intent(raw: Any) -> dict:
    if not isinstance(raw, dict):
        raise BadRequest("intent must be an object")
    kind = _field(raw, "kind", str)
    if kind not in INTENT_KINDS:
        raise BadRequest(f"unknown intent kind {kind!r}")
    if kind == "has_attribute":
        _field(raw, "attribute", str)
    elif kind == "aspect_is":
        _field(raw, "aspect", str)
        _field(raw, "value", str)
    else:
        validate_ref(raw.get("subject"))
        _field(raw, "relation", str)
        validate_ref(raw.get("target"))
    if "negated" in raw and not isinstance(raw["negated"], bool):
        raise BadRequest("intent negated flag must be a boolean")
    return raw


# -- requests -----------------------------------------------------------------


def decode_detect_request(payload: Any) -> tuple[str, str]:
    return (_field(payload, "image_id", str), _field(payload, "object", str))


def decode_ground_request(payload: Any) -> tuple[str, str, dict | None]:
    image_id = _field(payload, "image_id", str)
    sentence = _field(payload, "sentence", str)
    ref = payload.get("ref")
    if ref is not None:
        validate_ref(ref)
    return (image_id, sentence, ref)


def decode_match_request(payload: Any) -> tuple[str, Region, list[str], list[dict] | None]:
    image_id = _field(payload, "image_id", str)
    if "region" not in payload:
        raise BadRequest("missing field 'region'")
    region = decode_region(payload["region"])
    texts = _field(payload, "texts", list)
    if not texts or not all(isinstance(t, str) for t in texts):
        raise BadRequest("texts must be a non-empty list of strings")
    intents = payload.get("intents")
    if intents is not None:
        if not isinstance(intents, list):
            raise BadRequest("intents must be a list")
        if len(intents) != len(texts):
            raise BadRequest(f"{len(texts)} texts but {len(intents)} intents")
        for intent in intents:
            validate_intent(intent)
    return (image_id, region, list(texts), intents)


def decode_filter_request(payload: Any) -> tuple[str, list[str], int]:
    template = _field(payload, "template", str)
    candidates = _field(payload, "candidates", list)
    if not all(isinstance(c, str) for c in candidates):
        raise BadRequest("candidates must be strings")
    k = payload.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise BadRequest("k must be a non-negative integer")
    return (template, list(candidates), k)


# -- responses ----------------------------------------------------------------


def encode_boxes_response(boxes: Sequence[tuple[dict, float]]) -> dict:
    encoded = []
    for box, score in boxes:
        if not all(key in box for key in ("x", "y", "w", "h")):
            raise ValueError(f"model returned a box without x/y/w/h: {box!r}")
        encoded.append({"box": dict(box), "score": float(score)})
    return {"boxes": encoded}


def encode_scores_response(scores: Sequence[float]) -> dict:
    return {"scores": [float(s) for s in scores]}


def encode_answers_response(answers: Sequence[str]) -> dict:
    return {"answers": [str(a) for a in answers]}


def encode_error(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}
