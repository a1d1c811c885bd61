"""Wrappers around real pre-trained checkpoints.

One class per capability: OWL-ViT for open-vocabulary detection, MDETR
for phrase grounding, CLIP for image-text matching, a masked LM for
answer filtering.  All of them are deployment glue: construction is
cheap and import-free, ``load()`` pulls the heavy dependencies and the
checkpoint, and any failure there surfaces as a ``StartupError`` whose
message is the actual diagnostic.  Inference is not thread-safe, so the
registry serializes calls per model.

Pixel-consuming models get the image through the store handle; the
matcher applies the request's region (crop, or mask-to-black) before
encoding, so the model only ever sees the pixels the plan asked about.
"""

from __future__ import annotations

import importlib.util
from dataclasses import dataclass
from typing import Sequence

from .calibrate import softmax
from .errors import StartupError
from .regions import Region, apply_region
from .store import ImageHandle


@dataclass(frozen=True)
class RuntimeOptions:
    model_id: str
    device: str = "cpu"
    precision: str = "float32"

    @classmethod
    def from_config(cls, options: dict, default_model: str) -> "RuntimeOptions":
        return cls(
            model_id=options.get("model_id", default_model),
            device=options.get("device", "cpu"),
            precision=options.get("precision", "float32"),
        )


def _require_module(name: str, why: str):
    if importlib.util.find_spec(name) is None:
        raise StartupError(f"{why} needs the {name!r} package; install modserve[models]")
    return importlib.import_module(name)


class _Pretrained:
    parallel_safe = False

    def __init__(self, options: RuntimeOptions):
        self.options = options
        self._model = None
        self._processor = None

    def _place(self, model):
        model = model.to(self.options.device)
        if self.options.precision == "float16":
            model = model.half()
        return model.eval()

    def _loaded_model(self):
        if self._model is None:
            raise StartupError(f"{type(self).__name__} used before load()")
        return self._model


class OwlvitDetector(_Pretrained):
    DEFAULT_MODEL = "google/owlvit-base-patch32"

    def load(self) -> None:
        transformers = _require_module("transformers", "OWL-ViT detection")
        try:
            self._processor = transformers.OwlViTProcessor.from_pretrained(self.options.model_id)
            model = transformers.OwlViTForObjectDetection.from_pretrained(self.options.model_id)
        except Exception as exc:
            raise StartupError(f"cannot load {self.options.model_id!r}: {exc}") from exc
        self._model = self._place(model)

    def detect(self, handle: ImageHandle, object_name: str) -> list[tuple[dict, float]]:
        torch = _require_module("torch", "OWL-ViT detection")
        model = self._loaded_model()
        pixels = handle.pixels()
        height, width = pixels.shape[0], pixels.shape[1]
        inputs = self._processor(
            text=[[f"a photo of a {object_name}"]], images=pixels, return_tensors="pt"
        ).to(self.options.device)
        with torch.no_grad():
            outputs = model(**inputs)
        target = torch.tensor([[height, width]], device=self.options.device)
        results = self._processor.post_process_object_detection(
            outputs, threshold=0.0, target_sizes=target
        )[0]
        boxes = []
        for (x0, y0, x1, y1), score in zip(
            results["boxes"].tolist(), results["scores"].tolist()
        ):
            boxes.append(
                (
                    {
                        "x": x0 / width,
                        "y": y0 / height,
                        "w": (x1 - x0) / width,
                        "h": (y1 - y0) / height,
                    },
                    float(score),
                )
            )
        boxes.sort(key=lambda pair: -pair[1])
        return boxes


class MdetrGrounder(_Pretrained):
    DEFAULT_MODEL = "mdetr_efficientnetB5"

    def load(self) -> None:
        torch = _require_module("torch", "MDETR grounding")
        try:
            model, _ = torch.hub.load(
                "ashkamath/mdetr:main", self.options.model_id,
                pretrained=True, return_postprocessor=True,
            )
        except Exception as exc:
            raise StartupError(f"cannot load {self.options.model_id!r}: {exc}") from exc
        self._model = self._place(model)

    def ground(
        self, handle: ImageHandle, sentence: str, ref: dict | None
    ) -> list[tuple[dict, float]]:
        # The structured ref is for annotation backends; MDETR consumes
        # the sentence.
        torch = _require_module("torch", "MDETR grounding")
        torchvision = _require_module("torchvision", "MDETR grounding")
        model = self._loaded_model()
        pixels = handle.pixels()
        tensor = torchvision.transforms.functional.to_tensor(pixels).unsqueeze(0)
        with torch.no_grad():
            outputs = model(tensor.to(self.options.device), [sentence])
        probs = 1.0 - outputs["pred_logits"].softmax(-1)[0, :, -1]
        boxes = []
        for (cx, cy, w, h), score in zip(
            outputs["pred_boxes"][0].tolist(), probs.tolist()
        ):
            boxes.append(
                ({"x": cx - w / 2, "y": cy - h / 2, "w": w, "h": h}, float(score))
            )
        boxes.sort(key=lambda pair: -pair[1])
        return boxes


class ClipMatcher(_Pretrained):
    DEFAULT_MODEL = "openai/clip-vit-base-patch32"

    def load(self) -> None:
        transformers = _require_module("transformers", "CLIP matching")
        try:
            self._processor = transformers.CLIPProcessor.from_pretrained(self.options.model_id)
            model = transformers.CLIPModel.from_pretrained(self.options.model_id)
        except Exception as exc:
            raise StartupError(f"cannot load {self.options.model_id!r}: {exc}") from exc
        self._model = self._place(model)

    def match(
        self,
        handle: ImageHandle,
        region: Region,
        texts: Sequence[str],
        intents: Sequence[dict] | None,
    ) -> list[float]:
        torch = _require_module("torch", "CLIP matching")
        model = self._loaded_model()
        pixels = apply_region(handle.pixels(), region)
        inputs = self._processor(
            text=list(texts), images=pixels, return_tensors="pt", padding=True
        ).to(self.options.device)
        with torch.no_grad():
            similarities = model(**inputs).logits_per_image[0].tolist()
        # Only within-call comparisons matter downstream.
        return softmax(similarities)


class MaskedLmFiller(_Pretrained):
    DEFAULT_MODEL = "bert-base-uncased"
    MASK = "[MASK]"

    def load(self) -> None:
        transformers = _require_module("transformers", "masked answer filtering")
        try:
            self._pipeline = transformers.pipeline(
                "fill-mask", model=self.options.model_id, device=self.options.device
            )
        except Exception as exc:
            raise StartupError(f"cannot load {self.options.model_id!r}: {exc}") from exc
        self._model = self._pipeline

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        pipeline = self._loaded_model()
        if self.MASK not in template or not candidates or k == 0:
            return list(candidates)[:k]
        # targets limits scoring to the candidate vocabulary; multi-token
        # candidates fall back to their first piece, which is as much as
        # a single-mask template can rank.
        results = pipeline(
            template.replace(self.MASK, pipeline.tokenizer.mask_token),
            targets=list(candidates),
        )
        ranked = [r["token_str"].strip() for r in results]
        # Preserve candidate identity where the tokenizer echoed it back.
        kept = [c for c in ranked if c in candidates]
        missing = [c for c in candidates if c not in kept]
        return (kept + missing)[:k]
