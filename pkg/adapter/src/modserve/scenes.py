"""Scene annotation files: the data behind the annotation-backed models.

Same JSON shape the engine's scene tooling writes:

    {
      "image_id": "indoor_01",
      "width": 640,
      "height": 480,
      "objects": [
        {
          "id": "o1",
          "name": "cat",
          "box": {"x": 0.1, "y": 0.2, "w": 0.3, "h": 0.4},
          "attributes": ["black"],
          "relations": [{"relation": "on", "target": "o2"}]
        }
      ]
    }

Box coordinates are kept verbatim (no clamping) so responses built from
annotations echo the file bit-for-bit.  ``box_pixels`` is accepted in
place of ``box`` and divided by the image size.  Relation targets must
name objects in the same scene; dangling ids are a data error worth
failing on at load time, not mid-request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SceneFormatError

BOX_KEYS = ("x", "y", "w", "h")


def canon(text: str) -> str:
    """Case- and whitespace-insensitive comparison form."""
    return " ".join(text.lower().split())


def _box_from(raw: object, where: str) -> dict[str, float]:
    if not isinstance(raw, dict):
        raise SceneFormatError(f"{where}: box must be an object")
    try:
        box = {key: float(raw[key]) for key in BOX_KEYS}
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneFormatError(f"{where}: malformed box: {exc}") from None
    return box


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    name: str
    box: dict[str, float]
    attributes: tuple[str, ...] = ()
    relations: tuple[tuple[str, str], ...] = ()  # (relation, target object id)


@dataclass(frozen=True)
class SceneGraph:
    image_id: str
    width: int
    height: int
    objects: tuple[SceneObject, ...]

    def find(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneGraph":
        try:
            image_id = doc["image_id"]
            width = int(doc["width"])
            height = int(doc["height"])
            raw_objects = doc["objects"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneFormatError(f"scene is missing or mistypes field {exc}") from None
        if width <= 0 or height <= 0:
            raise SceneFormatError(f"scene {image_id!r} has a non-positive size")
        objects = []
        for raw in raw_objects:
            where = f"scene {image_id!r}, object {raw.get('id')!r}"
            try:
                object_id = raw["id"]
                name = raw["name"]
            except KeyError as exc:
                raise SceneFormatError(f"{where}: missing field {exc}") from None
            if "box" in raw:
                box = _box_from(raw["box"], where)
            elif "box_pixels" in raw:
                px = _box_from(raw["box_pixels"], where)
                box = {
                    "x": px["x"] / width,
                    "y": px["y"] / height,
                    "w": px["w"] / width,
                    "h": px["h"] / height,
                }
            else:
                raise SceneFormatError(f"{where}: no box")
            relations = []
            for rel in raw.get("relations", ()):
                try:
                    relations.append((rel["relation"], rel["target"]))
                except (KeyError, TypeError) as exc:
                    raise SceneFormatError(f"{where}: malformed relation: {exc}") from None
            objects.append(
                SceneObject(
                    object_id=object_id,
                    name=name,
                    box=box,
                    attributes=tuple(raw.get("attributes", ())),
                    relations=tuple(relations),
                )
            )
        ids = [o.object_id for o in objects]
        if len(set(ids)) != len(ids):
            raise SceneFormatError(f"scene {image_id!r} repeats object ids")
        known = set(ids)
        for obj in objects:
            for _, target in obj.relations:
                if target not in known:
                    raise SceneFormatError(
                        f"scene {image_id!r}: object {obj.object_id!r} relates "
                        f"to unknown id {target!r}"
                    )
        return cls(image_id=image_id, width=width, height=height, objects=tuple(objects))


def load_scene(path: str | Path) -> SceneGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except ValueError as exc:
            raise SceneFormatError(f"{path}: not JSON: {exc}") from None
    return SceneGraph.from_dict(doc)
