#!/usr/bin/env python3
"""Regenerate fixtures/protocol_suite.json.

The suite bundles two mini-dataset scenes with conformance cases for the
backend wire protocol.  Oracle-tier cases carry hand-written exact
response bodies; the script replays every case against the in-process
reference service and refuses to write the file unless all of them pass,
so committed fixtures can never drift from the protocol implementation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

from modzero.backends.conformance import local_transport, run_suite, summarize  # noqa: E402
from modzero.backends.oracle import OracleBackend  # noqa: E402

CAT_BOX = {"x": 0.15, "y": 0.35, "w": 0.18, "h": 0.25}
SOFA_BOX = {"x": 0.05, "y": 0.55, "w": 0.5, "h": 0.4}
BOOK_BOX = {"x": 0.4, "y": 0.62, "w": 0.08, "h": 0.06}

RED_ON_SOFA_REF = {
    "head": "object",
    "attributes": ["red"],
    "link": {"relation": "on", "target": {"head": "sofa", "attributes": []}},
}

CAT_REF = {"head": "cat", "attributes": []}
SOFA_REF = {"head": "sofa", "attributes": []}


def _case(name, tier, path, body, expect, method="POST"):
    case = {"name": name, "tier": tier, "method": method, "path": path, "expect": expect}
    if body is not None:
        case["body"] = body
    return case


CASES = [
    # Shape and status checks any conformant service must satisfy.
    _case("health-ok", "protocol", "/health", None,
          {"status": 200, "capabilities": ["detect", "ground", "match", "filter_answers"]},
          method="GET"),
    _case("detect-known-object", "protocol", "/detect",
          {"image_id": "living_room_01", "object": "sofa"},
          {"status": 200, "boxes_at_least": 1}),
    _case("detect-absent-object", "protocol", "/detect",
          {"image_id": "living_room_01", "object": "unicorn"},
          {"status": 200, "boxes_exactly": 0}),
    _case("detect-unknown-image", "protocol", "/detect",
          {"image_id": "no_such_image", "object": "sofa"},
          {"status": 404, "error_code": "unknown_image"}),
    _case("detect-missing-field", "protocol", "/detect",
          {"image_id": "living_room_01"},
          {"status": 400, "error_code": "bad_request"}),
    _case("ground-composite-reference", "protocol", "/ground",
          {"image_id": "living_room_01", "sentence": "the red object on the sofa",
           "ref": RED_ON_SOFA_REF},
          {"status": 200, "boxes_at_least": 1}),
    _case("ground-missing-sentence", "protocol", "/ground",
          {"image_id": "living_room_01", "ref": RED_ON_SOFA_REF},
          {"status": 400, "error_code": "bad_request"}),
    _case("match-two-texts", "protocol", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "crop", "boxes": [CAT_BOX]},
           "texts": ["the cat is black", "the cat is not black"],
           "intents": [
               {"kind": "has_attribute", "attribute": "black", "negated": False},
               {"kind": "has_attribute", "attribute": "black", "negated": True},
           ]},
          {"status": 200, "scores_len": 2}),
    _case("match-empty-texts", "protocol", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "crop", "boxes": [CAT_BOX]},
           "texts": []},
          {"status": 400, "error_code": "bad_request"}),
    _case("match-crop-needs-one-box", "protocol", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "crop", "boxes": [CAT_BOX, SOFA_BOX]},
           "texts": ["a", "b"]},
          {"status": 400, "error_code": "bad_request"}),
    _case("match-unknown-region-op", "protocol", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "blur", "boxes": [CAT_BOX]},
           "texts": ["a"]},
          {"status": 400, "error_code": "bad_request"}),
    _case("filter-answers-top-k", "protocol", "/filter_answers",
          {"template": "the color of the cat is [MASK]",
           "candidates": ["black", "white", "red", "blue", "green", "wooden",
                          "metal", "cup", "man", "dog", "sofa", "lamp"],
           "k": 10},
          {"status": 200, "answers_at_most": 10}),
    _case("filter-negative-k", "protocol", "/filter_answers",
          {"template": "the color of the cat is [MASK]",
           "candidates": ["black"], "k": -1},
          {"status": 400, "error_code": "bad_request"}),
    _case("unknown-route", "protocol", "/segment",
          {"image_id": "living_room_01"},
          {"status": 404, "error_code": "bad_request"}),
    # Exact bodies, satisfiable only by a service that answers from the
    # scene annotations themselves.
    _case("detect-cat-exact", "oracle", "/detect",
          {"image_id": "living_room_01", "object": "cat"},
          {"status": 200, "exact": {"boxes": [{"box": CAT_BOX, "score": 1.0}]}}),
    _case("ground-red-on-sofa-exact", "oracle", "/ground",
          {"image_id": "living_room_01", "sentence": "the red object on the sofa",
           "ref": RED_ON_SOFA_REF},
          {"status": 200, "exact": {"boxes": [{"box": BOOK_BOX, "score": 1.0}]}}),
    _case("match-attribute-exact", "oracle", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "crop", "boxes": [CAT_BOX]},
           "texts": ["the cat is black", "the cat is not black"],
           "intents": [
               {"kind": "has_attribute", "attribute": "black", "negated": False},
               {"kind": "has_attribute", "attribute": "black", "negated": True},
           ]},
          {"status": 200, "exact": {"scores": [1.0, 0.0]}}),
    _case("match-relation-exact", "oracle", "/match",
          {"image_id": "living_room_01",
           "region": {"op": "mask_keep", "boxes": [CAT_BOX, SOFA_BOX]},
           "texts": ["the cat is on the sofa", "the cat is not on the sofa"],
           "intents": [
               {"kind": "relation_holds", "subject": CAT_REF, "relation": "on",
                "target": SOFA_REF, "negated": False},
               {"kind": "relation_holds", "subject": CAT_REF, "relation": "on",
                "target": SOFA_REF, "negated": True},
           ]},
          {"status": 200, "exact": {"scores": [1.0, 0.0]}}),
    _case("filter-prefix-exact", "oracle", "/filter_answers",
          {"template": "the color of the cat is [MASK]",
           "candidates": ["black", "white", "red"], "k": 2},
          {"status": 200, "exact": {"answers": ["black", "white"]}}),
    _case("detect-wildcard-all-objects", "oracle", "/detect",
          {"image_id": "kitchen_02", "object": "object"},
          {"status": 200, "boxes_exactly": 6}),
]


def main() -> int:
    scene_paths = [
        ROOT / "data" / "mini" / "scenes" / "living_room_01.json",
        ROOT / "data" / "mini" / "scenes" / "kitchen_02.json",
    ]
    scenes = [json.loads(p.read_text(encoding="utf-8")) for p in scene_paths]
    suite = {"version": 1, "scenes": scenes, "cases": CASES}

    from modzero.backends.scene import Scene, SceneStore

    store = SceneStore.from_scenes([Scene.from_dict(s) for s in scenes])
    results = run_suite(suite, local_transport(OracleBackend(store)))
    print(summarize(results))
    if not all(r.ok for r in results):
        return 1

    out = ROOT / "fixtures" / "protocol_suite.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(suite, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(CASES)} cases)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
