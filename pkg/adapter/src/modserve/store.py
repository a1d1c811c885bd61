"""Image store: one directory, addressed by image id.

``<root>/<image_id>.json`` holds scene annotations, ``<root>/<image_id>``
plus a raster suffix holds pixels.  A handle defers the actual read until
a model asks for the representation it consumes, so an annotation-only
store never touches an image decoder and vice versa.  Parsed scenes are
cached per path; a serving process does not expect its store to change
underneath it.

Ids containing path separators (or otherwise steering outside the root)
resolve to "unknown image" rather than to files elsewhere on disk.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SceneFormatError, UnknownImageError
from .scenes import SceneGraph

SCENE_SUFFIX = ".json"
PIXEL_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


class ImageStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._scenes: dict[Path, SceneGraph] = {}

    def _resolve(self, image_id: str, suffixes: tuple[str, ...]) -> Path:
        if (
            not image_id
            or image_id != image_id.strip()
            or image_id.startswith(".")
            or any(sep in image_id for sep in ("/", "\\"))
        ):
            raise UnknownImageError(f"no image {image_id!r} in the store")
        for suffix in suffixes:
            path = self.root / f"{image_id}{suffix}"
            if path.is_file():
                return path
        raise UnknownImageError(f"no image {image_id!r} under {self.root}")

    def scene(self, image_id: str) -> SceneGraph:
        path = self._resolve(image_id, (SCENE_SUFFIX,))
        if path not in self._scenes:
            with open(path, encoding="utf-8") as fh:
                try:
                    doc = json.load(fh)
                except ValueError as exc:
                    raise SceneFormatError(f"{path}: not JSON: {exc}") from None
            self._scenes[path] = SceneGraph.from_dict(doc)
        return self._scenes[path]

    def pixels(self, image_id: str) -> np.ndarray:
        from PIL import Image

        path = self._resolve(image_id, PIXEL_SUFFIXES)
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))

    def handle(self, image_id: str) -> "ImageHandle":
        return ImageHandle(image_id=image_id, store=self)


class ImageHandle:
    """One image id bound to its store; models pick the representation."""

    def __init__(self, image_id: str, store: ImageStore):
        self.image_id = image_id
        self._store = store

    def scene(self) -> SceneGraph:
        return self._store.scene(self.image_id)

    def pixels(self) -> np.ndarray:
        return self._store.pixels(self.image_id)
