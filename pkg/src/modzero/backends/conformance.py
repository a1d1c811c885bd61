"""Wire-protocol conformance: run a shared fixture suite against a service.

A suite file is self-contained JSON:

    {
      "version": 1,
      "scenes": [ ...scene documents the service should be loaded with... ],
      "cases": [
        {
          "name": "detect-known-object",
          "tier": "protocol",
          "method": "POST",
          "path": "/detect",
          "body": {...},
          "expect": {"status": 200, "boxes_exactly": 2}
        }
      ]
    }

Two tiers of cases:

* ``protocol``: shape and range checks any conformant implementation
  must pass regardless of model quality (status codes, decodable bodies,
  score ranges, list lengths).
* ``oracle``: byte-level expected responses, satisfiable only by a
  service backed by the scene annotations themselves.

The runner is transport-agnostic: it takes a callable so the same suite
can be replayed in-process, over HTTP, or against a foreign service.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

from . import wire
from .base import Backend, BackendError, ProtocolViolation
from .server import dispatch_request

#: (method, path, body or None) -> (http status, decoded JSON body)
Transport = Callable[[str, str, Any], tuple[int, Any]]

TIERS = ("protocol", "oracle")


@dataclass(frozen=True)
class CaseResult:
    name: str
    tier: str
    ok: bool
    detail: str = ""


def load_suite(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        suite = json.load(fh)
    if suite.get("version") != 1:
        raise ValueError(f"unsupported suite version {suite.get('version')!r}")
    return suite


def local_transport(backend: Backend) -> Transport:
    def call(method: str, path: str, body: Any) -> tuple[int, Any]:
        return dispatch_request(backend, method, path, body)

    return call


def http_transport(base_url: str, timeout: float = 30.0) -> Transport:
    import requests

    base = base_url.rstrip("/")

    def call(method: str, path: str, body: Any) -> tuple[int, Any]:
        if method == "GET":
            response = requests.get(f"{base}{path}", timeout=timeout)
        else:
            response = requests.post(f"{base}{path}", json=body, timeout=timeout)
        try:
            payload = response.json()
        except ValueError:
            payload = None
        return (response.status_code, payload)

    return call


def run_suite(
    suite: dict, transport: Transport, tiers: Iterable[str] = TIERS
) -> list[CaseResult]:
    wanted = set(tiers)
    results = []
    for case in suite["cases"]:
        tier = case.get("tier", "protocol")
        if tier not in wanted:
            continue
        try:
            status, body = transport(case.get("method", "POST"), case["path"], case.get("body"))
            detail = _check(case, status, body)
        except BackendError as exc:
            detail = f"transport error: {exc}"
        results.append(
            CaseResult(name=case["name"], tier=tier, ok=detail == "", detail=detail)
        )
    return results


def _check(case: dict, status: int, body: Any) -> str:
    """Empty string when the response meets every expectation."""
    expect = case.get("expect", {})
    wanted_status = expect.get("status", 200)
    if status != wanted_status:
        return f"status {status}, wanted {wanted_status} (body: {body!r})"

    if "exact" in expect:
        if body != expect["exact"]:
            return f"body differs from expected: got {json.dumps(body, sort_keys=True)}"
        return ""

    if status != 200:
        code, _ = wire.decode_error(body)
        wanted_code = expect.get("error_code")
        if wanted_code is not None and code != wanted_code:
            return f"error code {code!r}, wanted {wanted_code!r}"
        return ""

    try:
        if case["path"] == "/detect" or case["path"] == "/ground":
            boxes = wire.decode_boxes_response(body)
            if "boxes_exactly" in expect and len(boxes) != expect["boxes_exactly"]:
                return f"{len(boxes)} boxes, wanted exactly {expect['boxes_exactly']}"
            if "boxes_at_least" in expect and len(boxes) < expect["boxes_at_least"]:
                return f"{len(boxes)} boxes, wanted at least {expect['boxes_at_least']}"
        elif case["path"] == "/match":
            scores = wire.decode_scores_response(body)
            if "scores_len" in expect and len(scores) != expect["scores_len"]:
                return f"{len(scores)} scores, wanted {expect['scores_len']}"
        elif case["path"] == "/filter_answers":
            answers = wire.decode_answers_response(body)
            if "answers_len" in expect and len(answers) != expect["answers_len"]:
                return f"{len(answers)} answers, wanted {expect['answers_len']}"
            if "answers_at_most" in expect and len(answers) > expect["answers_at_most"]:
                return f"{len(answers)} answers, wanted at most {expect['answers_at_most']}"
        elif case["path"] == "/health":
            if not isinstance(body, dict) or body.get("status") != "ok":
                return f"health body {body!r}"
            if "capabilities" in expect:
                have = set(body.get("capabilities", ()))
                missing = set(expect["capabilities"]) - have
                if missing:
                    return f"missing capabilities {sorted(missing)}"
    except ProtocolViolation as exc:
        return f"undecodable body: {exc}"
    return ""


def summarize(results: list[CaseResult]) -> str:
    failed = [r for r in results if not r.ok]
    lines = [f"{len(results) - len(failed)}/{len(results)} conformance cases passed"]
    for r in failed:
        lines.append(f"  FAIL {r.name} [{r.tier}]: {r.detail}")
    return "\n".join(lines)
