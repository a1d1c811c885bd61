"""Annotated scene graphs: the ground truth the oracle backend runs on.

A scene file is one JSON document:

    {
      "image_id": "indoor_01",
      "width": 640,
      "height": 480,
      "objects": [
        {
          "id": "o1",
          "name": "cat",
          "box": {"x": 0.1, "y": 0.2, "w": 0.3, "h": 0.4},
          "attributes": ["black", "small"],
          "relations": [{"relation": "on", "target": "o2"}]
        }
      ]
    }

Boxes are relative decimals; ``box_pixels`` with the same keys is accepted
instead and converted using the image size.  Object order in the file is
preserved and meaningful: the oracle reports results in document order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..geometry import BoundingBox
from .base import UnknownImageError


class SceneFormatError(ValueError):
    """A scene file that does not follow the documented shape."""


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    name: str
    box: BoundingBox
    attributes: tuple[str, ...] = ()
    relations: tuple[tuple[str, str], ...] = ()  # (relation, target object id)


@dataclass(frozen=True)
class Scene:
    image_id: str
    width: int
    height: int
    objects: tuple[SceneObject, ...]

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "objects": [
                {
                    "id": o.object_id,
                    "name": o.name,
                    "box": o.box.to_dict(),
                    "attributes": list(o.attributes),
                    "relations": [
                        {"relation": r, "target": t} for r, t in o.relations
                    ],
                }
                for o in self.objects
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Scene:
        try:
            image_id = d["image_id"]
            width = int(d["width"])
            height = int(d["height"])
            raw_objects = d["objects"]
        except KeyError as exc:
            raise SceneFormatError(f"scene is missing field {exc}") from None
        if width <= 0 or height <= 0:
            raise SceneFormatError(f"scene {image_id!r} has a non-positive size")
        objects = []
        seen_ids: set[str] = set()
        for raw in raw_objects:
            try:
                object_id = raw["id"]
                name = raw["name"]
            except KeyError as exc:
                raise SceneFormatError(
                    f"object in scene {image_id!r} is missing field {exc}"
                ) from None
            if object_id in seen_ids:
                raise SceneFormatError(
                    f"scene {image_id!r} repeats object id {object_id!r}"
                )
            seen_ids.add(object_id)
            if "box" in raw:
                box = BoundingBox.from_dict(raw["box"])
            elif "box_pixels" in raw:
                px = raw["box_pixels"]
                box = BoundingBox.clamped(
                    float(px["x"]) / width,
                    float(px["y"]) / height,
                    float(px["w"]) / width,
                    float(px["h"]) / height,
                )
            else:
                raise SceneFormatError(
                    f"object {object_id!r} in scene {image_id!r} has no box"
                )
            objects.append(
                SceneObject(
                    object_id=object_id,
                    name=name,
                    box=box,
                    attributes=tuple(raw.get("attributes", ())),
                    relations=tuple(
                        (r["relation"], r["target"]) for r in raw.get("relations", ())
                    ),
                )
            )
        scene = cls(image_id=image_id, width=width, height=height, objects=tuple(objects))
        for obj in scene.objects:
            for _, target in obj.relations:
                if target not in seen_ids:
                    raise SceneFormatError(
                        f"object {obj.object_id!r} in scene {image_id!r} points at "
                        f"unknown target {target!r}"
                    )
        return scene


def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return Scene.from_dict(json.load(fh))


class SceneStore:
    """All scenes under one directory (every ``*.json`` file), by image id."""

    def __init__(self, scenes: dict[str, Scene]):
        self._scenes = scenes

    @classmethod
    def from_dir(cls, directory: str | Path) -> SceneStore:
        scenes: dict[str, Scene] = {}
        for path in sorted(Path(directory).glob("*.json")):
            if path.name == "aliases.json":
                continue
            scene = load_scene(path)
            if scene.image_id in scenes:
                raise SceneFormatError(f"duplicate image id {scene.image_id!r}")
            scenes[scene.image_id] = scene
        return cls(scenes)

    @classmethod
    def from_scenes(cls, scenes: list[Scene]) -> SceneStore:
        return cls({s.image_id: s for s in scenes})

    def get(self, image_id: str) -> Scene:
        try:
            return self._scenes[image_id]
        except KeyError:
            raise UnknownImageError(f"no scene for image {image_id!r}") from None

    def __iter__(self):
        return iter(self._scenes.values())

    def __len__(self) -> int:
        return len(self._scenes)

    @property
    def image_ids(self) -> list[str]:
        return list(self._scenes)
