"""Replay the shared protocol fixture suite against a running service.

The suite is the same self-contained JSON the engine side uses: scenes
the service under test should be loaded with, plus cases in two tiers.
"protocol" cases check what any conformant service must get right —
status codes, decodable bodies, score bounds, list lengths — and
"oracle" cases pin exact response bodies that only an annotation-backed
service can reproduce.  Failures are report entries, never exceptions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

TIERS = ("protocol", "oracle")

#: (method, path, body or None) -> (HTTP status, decoded JSON body or None)
Transport = Callable[[str, str, Any], tuple[int, Any]]


@dataclass(frozen=True)
class CaseOutcome:
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


def run_cases(
    suite: dict, transport: Transport, tiers: Iterable[str] = TIERS
) -> list[CaseOutcome]:
    wanted = set(tiers)
    outcomes = []
    for case in suite["cases"]:
        tier = case.get("tier", "protocol")
        if tier not in wanted:
            continue
        try:
            status, body = transport(case.get("method", "POST"), case["path"], case.get("body"))
            detail = _verify(case, status, body)
        except Exception as exc:
            detail = f"transport error: {exc}"
        outcomes.append(
            CaseOutcome(name=case["name"], tier=tier, ok=detail == "", detail=detail)
        )
    return outcomes


def _score_problem(scores: Any) -> str:
    if not isinstance(scores, list):
        return "scores is not a list"
    for s in scores:
        if not isinstance(s, (int, float)) or isinstance(s, bool):
            return f"score {s!r} is not a number"
        if not 0.0 <= float(s) <= 1.0:
            return f"score {s} outside [0, 1]"
    return ""


def _boxes_problem(boxes: Any) -> str:
    if not isinstance(boxes, list):
        return "boxes is not a list"
    for entry in boxes:
        if not isinstance(entry, dict) or not isinstance(entry.get("box"), dict):
            return f"malformed scored box {entry!r}"
        for key in ("x", "y", "w", "h"):
            value = entry["box"].get(key)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                return f"box field {key!r} is not a number"
        problem = _score_problem([entry.get("score")])
        if problem:
            return problem
    return ""


def _verify(case: dict, status: int, body: Any) -> str:
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
        error = body.get("error") if isinstance(body, dict) else None
        if not isinstance(error, dict) or not isinstance(error.get("code"), str):
            return f"error body without error.code: {body!r}"
        wanted_code = expect.get("error_code")
        if wanted_code is not None and error["code"] != wanted_code:
            return f"error code {error['code']!r}, wanted {wanted_code!r}"
        return ""

    if not isinstance(body, dict):
        return f"body is not an object: {body!r}"
    path = case["path"]
    if path in ("/detect", "/ground"):
        boxes = body.get("boxes")
        problem = _boxes_problem(boxes)
        if problem:
            return problem
        if "boxes_exactly" in expect and len(boxes) != expect["boxes_exactly"]:
            return f"{len(boxes)} boxes, wanted exactly {expect['boxes_exactly']}"
        if "boxes_at_least" in expect and len(boxes) < expect["boxes_at_least"]:
            return f"{len(boxes)} boxes, wanted at least {expect['boxes_at_least']}"
    elif path == "/match":
        scores = body.get("scores")
        problem = _score_problem(scores)
        if problem:
            return problem
        if "scores_len" in expect and len(scores) != expect["scores_len"]:
            return f"{len(scores)} scores, wanted {expect['scores_len']}"
    elif path == "/filter_answers":
        answers = body.get("answers")
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            return f"answers is not a list of strings: {answers!r}"
        if "answers_len" in expect and len(answers) != expect["answers_len"]:
            return f"{len(answers)} answers, wanted {expect['answers_len']}"
        if "answers_at_most" in expect and len(answers) > expect["answers_at_most"]:
            return f"{len(answers)} answers, wanted at most {expect['answers_at_most']}"
    elif path == "/health":
        if body.get("status") != "ok":
            return f"health status {body.get('status')!r}, wanted 'ok'"
        if "capabilities" in expect:
            have = set(body.get("capabilities", ()))
            missing = set(expect["capabilities"]) - have
            if missing:
                return f"missing capabilities {sorted(missing)}"
    return ""


def summarize(outcomes: list[CaseOutcome]) -> str:
    failed = [o for o in outcomes if not o.ok]
    lines = [f"{len(outcomes) - len(failed)}/{len(outcomes)} conformance cases passed"]
    for o in failed:
        lines.append(f"  FAIL {o.name} [{o.tier}]: {o.detail}")
    return "\n".join(lines)
