"""Record/replay wrappers around any backend.

Requests and responses are stored in their wire encodings, keyed by the
canonical JSON of the request, so a recorded session can be replayed
without the original backend (or saved and replayed in another process).
Replaying an unrecorded request is an error, never a silent fallback.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..plan import Intent, StructuredRef
from . import wire
from .base import BackendError, Backend, RegionSpec, ScoredBox


def _key(endpoint: str, request: dict) -> str:
    return endpoint + " " + json.dumps(request, sort_keys=True)


class RecordingBackend:
    """Pass-through wrapper that logs every exchange."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.records: list[tuple[str, dict, dict]] = []

    def calls(self, endpoint: str) -> int:
        return sum(1 for e, _, _ in self.records if e == endpoint)

    def detect(self, image_id: str, object_name: str) -> list[ScoredBox]:
        boxes = self.inner.detect(image_id, object_name)
        self.records.append(
            (
                "/detect",
                wire.encode_detect_request(image_id, object_name),
                wire.encode_boxes_response(boxes),
            )
        )
        return boxes

    def ground(
        self, image_id: str, sentence: str, ref: StructuredRef | None = None
    ) -> list[ScoredBox]:
        boxes = self.inner.ground(image_id, sentence, ref)
        self.records.append(
            (
                "/ground",
                wire.encode_ground_request(image_id, sentence, ref),
                wire.encode_boxes_response(boxes),
            )
        )
        return boxes

    def match(
        self,
        image_id: str,
        region: RegionSpec,
        texts: Sequence[str],
        intents: Sequence[Intent] | None = None,
    ) -> list[float]:
        scores = self.inner.match(image_id, region, texts, intents)
        self.records.append(
            (
                "/match",
                wire.encode_match_request(image_id, region, texts, intents),
                wire.encode_scores_response(scores),
            )
        )
        return scores

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        answers = self.inner.filter_answers(template, candidates, k)
        self.records.append(
            (
                "/filter_answers",
                wire.encode_filter_request(template, candidates, k),
                wire.encode_answers_response(answers),
            )
        )
        return answers


class ReplayBackend:
    """Serves recorded responses; identical requests get identical answers."""

    def __init__(self, records: list[tuple[str, dict, dict]]):
        self._responses: dict[str, dict] = {}
        for endpoint, request, response in records:
            self._responses.setdefault(_key(endpoint, request), response)

    def _lookup(self, endpoint: str, request: dict) -> dict:
        key = _key(endpoint, request)
        if key not in self._responses:
            raise BackendError(f"no recorded response for {key}")
        return self._responses[key]

    def detect(self, image_id: str, object_name: str) -> list[ScoredBox]:
        response = self._lookup("/detect", wire.encode_detect_request(image_id, object_name))
        return wire.decode_boxes_response(response)

    def ground(
        self, image_id: str, sentence: str, ref: StructuredRef | None = None
    ) -> list[ScoredBox]:
        response = self._lookup(
            "/ground", wire.encode_ground_request(image_id, sentence, ref)
        )
        return wire.decode_boxes_response(response)

    def match(
        self,
        image_id: str,
        region: RegionSpec,
        texts: Sequence[str],
        intents: Sequence[Intent] | None = None,
    ) -> list[float]:
        response = self._lookup(
            "/match", wire.encode_match_request(image_id, region, texts, intents)
        )
        return wire.decode_scores_response(response)

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        response = self._lookup(
            "/filter_answers", wire.encode_filter_request(template, candidates, k)
        )
        return wire.decode_answers_response(response)


def save_records(records: list[tuple[str, dict, dict]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for endpoint, request, response in records:
            fh.write(
                json.dumps(
                    {"endpoint": endpoint, "request": request, "response": response},
                    sort_keys=True,
                )
                + "\n"
            )


def load_records(path: str | Path) -> list[tuple[str, dict, dict]]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line)
                records.append((doc["endpoint"], doc["request"], doc["response"]))
    return records
