"""Deterministic scene-graph oracle backend.

Localization and matching answered straight from annotations: every
returned score is exactly 1.0 (or, for match calls, 1.0/0.0), results
come back in scene document order, and nothing is sampled, so a plan
executed against the oracle has a single well-defined answer.  That makes
it both the reference implementation for tests and a stand-in service for
protocol work.

The oracle cannot interpret free text.  Ground and match calls must carry
their structured forms (the sentence is ignored); calls without them
raise ``NeedsStructuredError``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..plan import AspectIs, HasAttribute, Intent, RelationHolds, StructuredRef, WILDCARD_HEAD
from .base import NeedsStructuredError, ProtocolViolation, RegionSpec, ScoredBox
from .scene import Scene, SceneObject, SceneStore


def _norm(text: str) -> str:
    return " ".join(text.lower().split())


def load_aliases(path: str | Path) -> list[list[str]]:
    """Alias groups file: {"groups": [["couch", "sofa"], ...]}.  Names in
    one group are interchangeable for the oracle."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [list(group) for group in doc.get("groups", [])]


class OracleBackend:
    def __init__(self, store: SceneStore, aliases: list[list[str]] | None = None):
        self._store = store
        # alias name -> canonical group key
        self._alias_of: dict[str, str] = {}
        for group in aliases or []:
            if not group:
                continue
            canon = _norm(group[0])
            for name in group:
                self._alias_of[_norm(name)] = canon

    @classmethod
    def from_dir(cls, directory: str | Path) -> OracleBackend:
        store = SceneStore.from_dir(directory)
        alias_path = Path(directory) / "aliases.json"
        aliases = load_aliases(alias_path) if alias_path.exists() else None
        return cls(store, aliases)

    # -- name / reference semantics -------------------------------------

    def _canon(self, name: str) -> str:
        n = _norm(name)
        return self._alias_of.get(n, n)

    def _name_matches(self, object_name: str, wanted: str) -> bool:
        wanted_n = _norm(wanted)
        if wanted_n == WILDCARD_HEAD:
            return True
        return self._canon(object_name) == self._canon(wanted)

    def _satisfies(self, scene: Scene, obj: SceneObject, ref: StructuredRef) -> bool:
        if not self._name_matches(obj.name, ref.head):
            return False
        attrs = {_norm(a) for a in obj.attributes}
        if any(_norm(a) not in attrs for a in ref.attributes):
            return False
        if ref.link is not None:
            wanted_rel = _norm(ref.link.relation)
            for relation, target_id in obj.relations:
                if _norm(relation) != wanted_rel:
                    continue
                if self._satisfies(scene, scene.object_by_id(target_id), ref.link.target):
                    return True
            return False
        return True

    def _region_objects(self, scene: Scene, region: RegionSpec) -> list[SceneObject]:
        return [
            obj
            for obj in scene.objects
            if any(obj.box.approx_equal(b) for b in region.boxes)
        ]

    # -- backend capabilities --------------------------------------------

    def detect(self, image_id: str, object_name: str) -> list[ScoredBox]:
        scene = self._store.get(image_id)
        return [
            ScoredBox(box=obj.box, score=1.0)
            for obj in scene.objects
            if self._name_matches(obj.name, object_name)
        ]

    def ground(
        self, image_id: str, sentence: str, ref: StructuredRef | None = None
    ) -> list[ScoredBox]:
        scene = self._store.get(image_id)
        if ref is None:
            raise NeedsStructuredError(
                f"oracle cannot ground free text {sentence!r} without a structured form"
            )
        return [
            ScoredBox(box=obj.box, score=1.0)
            for obj in scene.objects
            if self._satisfies(scene, obj, ref)
        ]

    def match(
        self,
        image_id: str,
        region: RegionSpec,
        texts: Sequence[str],
        intents: Sequence[Intent] | None = None,
    ) -> list[float]:
        scene = self._store.get(image_id)
        if intents is None:
            raise NeedsStructuredError("oracle cannot score free text without intents")
        if len(intents) != len(texts):
            raise ProtocolViolation(
                f"{len(texts)} texts but {len(intents)} intents"
            )
        anchored = self._region_objects(scene, region)
        return [self._score(scene, anchored, intent) for intent in intents]

    def _score(self, scene: Scene, anchored: list[SceneObject], intent: Intent) -> float:
        if isinstance(intent, AspectIs):
            if _norm(intent.aspect) == "name":
                hit = any(self._name_matches(o.name, intent.value) for o in anchored)
            else:
                wanted = _norm(intent.value)
                hit = any(
                    wanted in {_norm(a) for a in o.attributes} for o in anchored
                )
            return 1.0 if hit else 0.0
        if isinstance(intent, HasAttribute):
            wanted = _norm(intent.attribute)
            hit = any(wanted in {_norm(a) for a in o.attributes} for o in anchored)
            if intent.negated:
                hit = not hit
            return 1.0 if hit else 0.0
        if isinstance(intent, RelationHolds):
            wanted_rel = _norm(intent.relation)
            hit = False
            for subj in anchored:
                if not self._satisfies(scene, subj, intent.subject):
                    continue
                for relation, target_id in subj.relations:
                    if _norm(relation) != wanted_rel:
                        continue
                    target = scene.object_by_id(target_id)
                    if self._satisfies(scene, target, intent.target):
                        hit = True
                        break
                if hit:
                    break
            if intent.negated:
                hit = not hit
            return 1.0 if hit else 0.0
        raise ProtocolViolation(f"unknown intent {intent!r}")

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        # The oracle has no language model; it trusts the vocabulary order.
        if k < 0:
            raise ProtocolViolation(f"negative k: {k}")
        return list(candidates[:k])
