"""Annotation-backed models: every capability answered from scene graphs.

These are the desk-scale stand-ins for the real checkpoints.  They read
the scene JSON next to the image id, answer deterministically in
document order with scores of exactly 1.0 (or 1.0/0.0 for matching),
and need the structured request forms — a sentence or free text without
its ref/intents is a 422, not a guess.

The category name "object" is a wildcard matching everything, same as
the engine's detector contract.
"""

from __future__ import annotations

from typing import Sequence

from .errors import BadRequest, NeedsStructuredError
from .regions import Box, Region
from .scenes import SceneGraph, SceneObject, canon
from .store import ImageHandle

WILDCARD = "object"

#: Box equality tolerance when anchoring a region back onto annotations;
#: covers JSON round-trip drift, nothing more.
BOX_TOLERANCE = 1e-6


def _name_matches(name: str, wanted: str) -> bool:
    wanted = canon(wanted)
    return wanted == WILDCARD or canon(name) == wanted


def satisfies(scene: SceneGraph, obj: SceneObject, ref: dict) -> bool:
    """Does an annotated object fit a structured reference (head noun,
    required attributes, optional relation hop)?"""
    if not _name_matches(obj.name, ref["head"]):
        return False
    have = {canon(a) for a in obj.attributes}
    if any(canon(a) not in have for a in ref.get("attributes", ())):
        return False
    link = ref.get("link")
    if link is None:
        return True
    wanted = canon(link["relation"])
    for relation, target_id in obj.relations:
        if canon(relation) != wanted:
            continue
        if satisfies(scene, scene.find(target_id), link["target"]):
            return True
    return False


def _box_close(box: dict[str, float], wire: Box) -> bool:
    x, y, w, h = wire
    return (
        abs(box["x"] - x) <= BOX_TOLERANCE
        and abs(box["y"] - y) <= BOX_TOLERANCE
        and abs(box["w"] - w) <= BOX_TOLERANCE
        and abs(box["h"] - h) <= BOX_TOLERANCE
    )


def _anchored(scene: SceneGraph, region: Region) -> list[SceneObject]:
    return [
        obj
        for obj in scene.objects
        if any(_box_close(obj.box, b) for b in region.boxes)
    ]


class AnnotationDetector:
    parallel_safe = True

    def load(self) -> None:
        pass

    def detect(self, handle: ImageHandle, object_name: str) -> list[tuple[dict, float]]:
        scene = handle.scene()
        return [
            (obj.box, 1.0)
            for obj in scene.objects
            if _name_matches(obj.name, object_name)
        ]


class AnnotationGrounder:
    parallel_safe = True

    def load(self) -> None:
        pass

    def ground(
        self, handle: ImageHandle, sentence: str, ref: dict | None
    ) -> list[tuple[dict, float]]:
        if ref is None:
            raise NeedsStructuredError(
                f"annotation grounder cannot parse {sentence!r}; send the structured ref"
            )
        scene = handle.scene()
        return [(obj.box, 1.0) for obj in scene.objects if satisfies(scene, obj, ref)]


class AnnotationMatcher:
    parallel_safe = True

    def load(self) -> None:
        pass

    def match(
        self,
        handle: ImageHandle,
        region: Region,
        texts: Sequence[str],
        intents: Sequence[dict] | None,
    ) -> list[float]:
        if intents is None:
            raise NeedsStructuredError(
                "annotation matcher cannot score free text; send intents"
            )
        scene = handle.scene()
        anchored = _anchored(scene, region)
        return [1.0 if self._holds(scene, anchored, intent) else 0.0 for intent in intents]

    def _holds(self, scene: SceneGraph, anchored: list[SceneObject], intent: dict) -> bool:
        kind = intent["kind"]
        if kind == "has_attribute":
            wanted = canon(intent["attribute"])
            hit = any(
                wanted in {canon(a) for a in obj.attributes} for obj in anchored
            )
            return hit != bool(intent.get("negated", False))
        if kind == "aspect_is":
            value = intent["value"]
            if canon(intent["aspect"]) == "name":
                return any(_name_matches(obj.name, value) for obj in anchored)
            wanted = canon(value)
            return any(
                wanted in {canon(a) for a in obj.attributes} for obj in anchored
            )
        if kind == "relation_holds":
            hit = any(
                satisfies(scene, subj, intent["subject"])
                and self._related(scene, subj, intent["relation"], intent["target"])
                for subj in anchored
            )
            return hit != bool(intent.get("negated", False))
        raise BadRequest(f"unknown intent kind {kind!r}")

    def _related(
        self, scene: SceneGraph, subj: SceneObject, relation: str, target_ref: dict
    ) -> bool:
        wanted = canon(relation)
        for rel, target_id in subj.relations:
            if canon(rel) != wanted:
                continue
            if satisfies(scene, scene.find(target_id), target_ref):
                return True
        return False


class AnnotationAnswerFilter:
    """Keeps the caller's candidate order: vocabularies arrive ranked by
    prior already, so the top-k prefix is the annotation-faithful cut."""

    parallel_safe = True

    def load(self) -> None:
        pass

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        return list(candidates)[:k]
