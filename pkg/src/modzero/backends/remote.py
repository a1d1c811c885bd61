"""HTTP client speaking the wire protocol; presents as a normal Backend."""

from __future__ import annotations

from typing import Sequence

import requests

from ..plan import Intent, StructuredRef
from . import wire
from .base import BackendUnavailable, ProtocolViolation, RegionSpec, ScoredBox

DEFAULT_TIMEOUT_S = 30.0


class RemoteBackend:
    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT_S):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}{endpoint}"
        try:
            response = requests.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"POST {url} failed: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"POST {url} returned {response.status_code}")
        try:
            body = response.json()
        except ValueError:
            raise ProtocolViolation(f"POST {url} returned non-JSON") from None
        if response.status_code != 200:
            code, message = wire.decode_error(body)
            exc_type = wire.ERROR_CODE_TO_EXCEPTION.get(code, ProtocolViolation)
            raise exc_type(f"{endpoint}: {message or code}")
        return body

    def health(self) -> dict:
        url = f"{self.base_url}/health"
        try:
            response = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"GET {url} failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailable(f"GET {url} returned {response.status_code}")
        try:
            return response.json()
        except ValueError:
            raise ProtocolViolation(f"GET {url} returned non-JSON") from None

    def detect(self, image_id: str, object_name: str) -> list[ScoredBox]:
        body = self._post("/detect", wire.encode_detect_request(image_id, object_name))
        return wire.decode_boxes_response(body)

    def ground(
        self, image_id: str, sentence: str, ref: StructuredRef | None = None
    ) -> list[ScoredBox]:
        body = self._post("/ground", wire.encode_ground_request(image_id, sentence, ref))
        return wire.decode_boxes_response(body)

    def match(
        self,
        image_id: str,
        region: RegionSpec,
        texts: Sequence[str],
        intents: Sequence[Intent] | None = None,
    ) -> list[float]:
        body = self._post(
            "/match", wire.encode_match_request(image_id, region, texts, intents)
        )
        scores = wire.decode_scores_response(body)
        if len(scores) != len(texts):
            raise ProtocolViolation(
                f"match returned {len(scores)} scores for {len(texts)} texts"
            )
        return scores

    def filter_answers(self, template: str, candidates: Sequence[str], k: int) -> list[str]:
        body = self._post(
            "/filter_answers", wire.encode_filter_request(template, candidates, k)
        )
        return wire.decode_answers_response(body)
