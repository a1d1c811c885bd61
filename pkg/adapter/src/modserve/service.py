"""The HTTP service: routing, model dispatch, error mapping.

``dispatch_request`` does all the work on decoded JSON and is usable
without a socket; ``build_service`` wraps it in a stdlib threading HTTP
server (port 0 picks a free port) without starting the loop.  Models
load lazily on their first request unless the caller warms the registry
up front, and /health always answers — "loading" with the per-capability
readiness map until all four models are in, "ok" after.

Box scores are run through confidence calibration and match scores
through similarity calibration on the way out, so whatever a model
emits, the wire only ever carries scores in [0, 1].
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from . import protocol
from .calibrate import calibrate_confidences, calibrate_similarities
from .errors import AdapterError, status_for
from .registry import CAPABILITIES, ModelRegistry


def health_payload(registry: ModelRegistry) -> dict:
    readiness = registry.readiness()
    return {
        "status": "ok" if registry.ready() else "loading",
        "capabilities": [c for c in CAPABILITIES if readiness[c]],
        "readiness": readiness,
    }


def _boxes_body(raw: list[tuple[dict, float]]) -> dict:
    scores = calibrate_confidences([score for _, score in raw])
    return protocol.encode_boxes_response(
        [(box, score) for (box, _), score in zip(raw, scores)]
    )


def dispatch_request(
    registry: ModelRegistry, method: str, path: str, payload: Any
) -> tuple[int, dict]:
    """Route one request; returns (HTTP status, response body)."""
    try:
        if method == "GET":
            if path == "/health":
                return (200, health_payload(registry))
            return (404, protocol.encode_error("bad_request", f"no route {path}"))
        if method != "POST":
            return (
                405,
                protocol.encode_error("bad_request", f"unsupported method {method}"),
            )
        if path == "/detect":
            image_id, object_name = protocol.decode_detect_request(payload)
            binding = registry.binding("detect")
            binding.ensure_loaded()
            handle = registry.store.handle(image_id)
            with binding.inference():
                raw = binding.model.detect(handle, object_name)
            return (200, _boxes_body(raw))
        if path == "/ground":
            image_id, sentence, ref = protocol.decode_ground_request(payload)
            binding = registry.binding("ground")
            binding.ensure_loaded()
            handle = registry.store.handle(image_id)
            with binding.inference():
                raw = binding.model.ground(handle, sentence, ref)
            return (200, _boxes_body(raw))
        if path == "/match":
            image_id, region, texts, intents = protocol.decode_match_request(payload)
            binding = registry.binding("match")
            binding.ensure_loaded()
            handle = registry.store.handle(image_id)
            with binding.inference():
                raw = binding.model.match(handle, region, texts, intents)
            scores = calibrate_similarities(raw)
            return (200, protocol.encode_scores_response(scores))
        if path == "/filter_answers":
            template, candidates, k = protocol.decode_filter_request(payload)
            binding = registry.binding("filter_answers")
            binding.ensure_loaded()
            with binding.inference():
                answers = binding.model.filter_answers(template, candidates, k)
            return (200, protocol.encode_answers_response(answers))
        return (404, protocol.encode_error("bad_request", f"no route {path}"))
    except AdapterError as exc:
        status, code = status_for(exc)
        return (status, protocol.encode_error(code, str(exc)))
    except Exception as exc:
        return (500, protocol.encode_error("internal", str(exc)))


def build_service(
    registry: ModelRegistry, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        # Keep serving output quiet; diagnostics live in response bodies.
        def log_message(self, format: str, *args) -> None:
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            status, payload = dispatch_request(registry, "GET", self.path, None)
            self._send(status, payload)

        def do_POST(self) -> None:
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length) or b"null")
            except ValueError:
                self._send(400, protocol.encode_error("bad_request", "body is not JSON"))
                return
            status, body = dispatch_request(registry, "POST", self.path, payload)
            self._send(status, body)

        def do_PUT(self) -> None:
            self._send(405, protocol.encode_error("bad_request", "unsupported method PUT"))

        def do_DELETE(self) -> None:
            self._send(
                405, protocol.encode_error("bad_request", "unsupported method DELETE")
            )

    return ThreadingHTTPServer((host, port), Handler)
