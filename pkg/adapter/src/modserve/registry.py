"""Model registry: which model serves which capability, and its state.

Configuration is one JSON document:

    {
      "image_store": "scenes/",
      "host": "127.0.0.1",
      "port": 8801,
      "models": {
        "detect":         {"kind": "annotation"},
        "ground":         {"kind": "annotation"},
        "match":          {"kind": "clip", "model_id": "openai/clip-vit-base-patch32",
                           "device": "cpu", "precision": "float32"},
        "filter_answers": {"kind": "annotation"}
      }
    }

Relative store paths resolve against the config file's directory.  All
four capabilities must be bound or the registry refuses to construct;
loading is a separate step so /health can report per-capability
readiness before (and during) warmup.  Each binding owns a lock:
``ensure_loaded`` is idempotent under concurrency, and inference on
models that are not safe to call in parallel is serialized through the
same lock.
"""

from __future__ import annotations

import json
import threading
from contextlib import nullcontext
from pathlib import Path
from typing import Any, Callable

from . import annotations, pretrained
from .errors import ConfigError, StartupError
from .store import ImageStore

CAPABILITIES = ("detect", "ground", "match", "filter_answers")

#: capability -> kind -> factory(options dict) -> model
KINDS: dict[str, dict[str, Callable[[dict], Any]]] = {
    "detect": {
        "annotation": lambda options: annotations.AnnotationDetector(),
        "owlvit": lambda options: pretrained.OwlvitDetector(
            pretrained.RuntimeOptions.from_config(options, pretrained.OwlvitDetector.DEFAULT_MODEL)
        ),
    },
    "ground": {
        "annotation": lambda options: annotations.AnnotationGrounder(),
        "mdetr": lambda options: pretrained.MdetrGrounder(
            pretrained.RuntimeOptions.from_config(options, pretrained.MdetrGrounder.DEFAULT_MODEL)
        ),
    },
    "match": {
        "annotation": lambda options: annotations.AnnotationMatcher(),
        "clip": lambda options: pretrained.ClipMatcher(
            pretrained.RuntimeOptions.from_config(options, pretrained.ClipMatcher.DEFAULT_MODEL)
        ),
    },
    "filter_answers": {
        "annotation": lambda options: annotations.AnnotationAnswerFilter(),
        "masked-lm": lambda options: pretrained.MaskedLmFiller(
            pretrained.RuntimeOptions.from_config(options, pretrained.MaskedLmFiller.DEFAULT_MODEL)
        ),
    },
}


class Binding:
    """One capability's model plus its load state and inference lock."""

    def __init__(self, capability: str, model: Any):
        self.capability = capability
        self.model = model
        self.loaded = False
        self._lock = threading.Lock()

    def ensure_loaded(self) -> None:
        with self._lock:
            if not self.loaded:
                try:
                    self.model.load()
                except StartupError as exc:
                    raise StartupError(f"{self.capability}: {exc}") from exc
                self.loaded = True

    def inference(self):
        """Context manager for one model call; a lock unless the model
        declares itself safe for parallel use."""
        if getattr(self.model, "parallel_safe", False):
            return nullcontext()
        return self._lock


class ModelRegistry:
    def __init__(self, models: dict[str, Any], store: ImageStore):
        missing = [c for c in CAPABILITIES if c not in models]
        if missing:
            raise ConfigError(f"unbound capabilities: {', '.join(missing)}")
        unknown = sorted(set(models) - set(CAPABILITIES))
        if unknown:
            raise ConfigError(f"unknown capabilities: {', '.join(unknown)}")
        self.store = store
        self._bindings = {c: Binding(c, models[c]) for c in CAPABILITIES}

    def binding(self, capability: str) -> Binding:
        return self._bindings[capability]

    def readiness(self) -> dict[str, bool]:
        return {c: self._bindings[c].loaded for c in CAPABILITIES}

    def ready(self) -> bool:
        return all(self.readiness().values())

    def warmup(self) -> None:
        for capability in CAPABILITIES:
            self._bindings[capability].ensure_loaded()


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: not JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config


def registry_from_config(config: dict, base_dir: str | Path = ".") -> ModelRegistry:
    if "image_store" not in config:
        raise ConfigError("config needs an 'image_store' path")
    root = Path(base_dir) / Path(config["image_store"]).expanduser()
    if not root.is_dir():
        raise ConfigError(f"image store {root} is not a directory")
    raw_models = config.get("models")
    if not isinstance(raw_models, dict):
        raise ConfigError("config needs a 'models' mapping")
    models = {}
    for capability, options in raw_models.items():
        kinds = KINDS.get(capability)
        if kinds is None:
            raise ConfigError(f"unknown capability {capability!r}")
        if not isinstance(options, dict) or "kind" not in options:
            raise ConfigError(f"model for {capability!r} needs a 'kind'")
        kind = options["kind"]
        factory = kinds.get(kind)
        if factory is None:
            raise ConfigError(
                f"no {capability} model kind {kind!r}; have {', '.join(sorted(kinds))}"
            )
        models[capability] = factory(options)
    return ModelRegistry(models, ImageStore(root))


def serve_address(
    config: dict, host: str | None = None, port: int | None = None
) -> tuple[str, int]:
    """Resolve where to listen; explicit arguments win over the config file."""
    if host is None:
        host = config.get("host", "127.0.0.1")
    if port is None:
        port = config.get("port", 8801)
    if not isinstance(host, str) or not host:
        raise ConfigError("'host' must be a non-empty string")
    if not isinstance(port, int) or isinstance(port, bool) or not 0 <= port <= 65535:
        raise ConfigError("'port' must be an integer in [0, 65535]")
    return host, port


def registry_from_file(path: str | Path) -> ModelRegistry:
    path = Path(path)
    return registry_from_config(load_config(path), base_dir=path.parent)
