"""Expose an in-process Backend over the wire protocol.

Built on the stdlib threading HTTP server; good enough for the oracle,
for tests, and for recording sessions.  ``build_server`` binds (port 0
picks a free port) without starting the loop, so callers control the
serving thread.  ``dispatch_request`` holds the actual routing and is
also usable without any socket.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from . import wire
from .base import Backend, BackendError

CAPABILITIES = ("detect", "ground", "match", "filter_answers")


def health_payload() -> dict:
    return {"status": "ok", "capabilities": list(CAPABILITIES)}


def dispatch_request(
    backend: Backend, method: str, path: str, payload: Any
) -> tuple[int, dict]:
    """Route one wire-protocol request to a backend; returns (status, body)."""
    try:
        if method == "GET":
            if path == "/health":
                return (200, health_payload())
            return (404, wire.encode_error("bad_request", f"no route {path}"))
        if method != "POST":
            return (405, wire.encode_error("bad_request", f"unsupported method {method}"))
        if path == "/detect":
            image_id, object_name = wire.decode_detect_request(payload)
            return (200, wire.encode_boxes_response(backend.detect(image_id, object_name)))
        if path == "/ground":
            image_id, sentence, ref = wire.decode_ground_request(payload)
            return (200, wire.encode_boxes_response(backend.ground(image_id, sentence, ref)))
        if path == "/match":
            image_id, region, texts, intents = wire.decode_match_request(payload)
            return (
                200,
                wire.encode_scores_response(backend.match(image_id, region, texts, intents)),
            )
        if path == "/filter_answers":
            template, candidates, k = wire.decode_filter_request(payload)
            return (
                200,
                wire.encode_answers_response(backend.filter_answers(template, candidates, k)),
            )
        return (404, wire.encode_error("bad_request", f"no route {path}"))
    except BackendError as exc:
        for exc_type, status, code in wire.EXCEPTION_TO_STATUS:
            if isinstance(exc, exc_type):
                return (status, wire.encode_error(code, str(exc)))
        return (500, wire.encode_error("internal", str(exc)))
    except Exception as exc:  # pragma: no cover - defensive
        return (500, wire.encode_error("internal", str(exc)))


def build_server(backend: Backend, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        # Keep test output clean.
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
            status, payload = dispatch_request(backend, "GET", self.path, None)
            self._send(status, payload)

        def do_POST(self) -> None:
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length) or b"null")
            except ValueError:
                self._send(400, wire.encode_error("bad_request", "body is not JSON"))
                return
            status, body = dispatch_request(backend, "POST", self.path, payload)
            self._send(status, body)

    return ThreadingHTTPServer((host, port), Handler)
