#!/usr/bin/env python3
"""Regenerate the committed mini dataset under data/mini/.

Scenes and questions are authored here; every question carries a
hand-written expected answer that is cross-checked against the
independent reference evaluator (tests/bruteforce.py) before anything is
written.  A mismatch aborts generation, so the committed gold answers are
always both hand-reviewed and machine-verified.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import bruteforce  # noqa: E402
from modzero.backends.scene import Scene  # noqa: E402

VOCAB = ["black", "white", "red", "blue", "green", "wooden", "metal", "cup", "man", "dog"]
TOP_K = 10


def _obj(object_id, name, box, attributes=(), relations=()):
    return {
        "id": object_id,
        "name": name,
        "box": {"x": box[0], "y": box[1], "w": box[2], "h": box[3]},
        "attributes": list(attributes),
        "relations": [{"relation": r, "target": t} for r, t in relations],
    }


SCENES = [
    {
        "image_id": "living_room_01",
        "width": 640,
        "height": 480,
        "objects": [
            _obj("o1", "sofa", (0.05, 0.55, 0.50, 0.40), ["red"]),
            _obj("o2", "cat", (0.15, 0.35, 0.18, 0.25), ["black"],
                 [("on", "o1"), ("to the left of", "o3")]),
            _obj("o3", "dog", (0.60, 0.50, 0.30, 0.45), ["white"], [("taller", "o2")]),
            _obj("o4", "lamp", (0.80, 0.05, 0.15, 0.45), ["metal"]),
            _obj("o5", "book", (0.40, 0.62, 0.08, 0.06), ["red"], [("on", "o1")]),
        ],
    },
    {
        "image_id": "kitchen_02",
        "width": 640,
        "height": 480,
        "objects": [
            _obj("k1", "table", (0.10, 0.50, 0.60, 0.45), ["wooden"]),
            _obj("k2", "cup", (0.20, 0.38, 0.10, 0.12), ["red"], [("on", "k1")]),
            _obj("k3", "cup", (0.45, 0.36, 0.10, 0.14), ["blue"], [("on", "k1")]),
            _obj("k4", "knife", (0.62, 0.40, 0.15, 0.05), ["metal"], [("on", "k1")]),
            _obj("k5", "oven", (0.75, 0.55, 0.22, 0.40), ["black"]),
            _obj("k6", "window", (0.30, 0.05, 0.25, 0.25), [], [("above", "k1")]),
        ],
    },
    {
        "image_id": "street_03",
        "width": 800,
        "height": 600,
        "objects": [
            _obj("s1", "car", (0.05, 0.55, 0.35, 0.30), ["red"], [("to the left of", "s2")]),
            _obj("s2", "bus", (0.55, 0.45, 0.40, 0.40), ["white"], [("larger", "s1")]),
            _obj("s3", "sign", (0.42, 0.10, 0.12, 0.25), ["green"], [("above", "s1")]),
            _obj("s4", "tree", (0.85, 0.05, 0.12, 0.50)),
            _obj("s5", "person", (0.40, 0.55, 0.08, 0.30)),
        ],
    },
    {
        "image_id": "park_04",
        "width": 800,
        "height": 600,
        "objects": [
            _obj("p1", "tree", (0.05, 0.10, 0.25, 0.70), ["tall"]),
            _obj("p2", "bench", (0.40, 0.60, 0.30, 0.20), ["wooden"]),
            _obj("p3", "man", (0.44, 0.34, 0.10, 0.30), [],
                 [("sitting on", "p2"), ("holding", "p4")]),
            _obj("p4", "ball", (0.56, 0.42, 0.06, 0.08), ["red"]),
            _obj("p5", "woman", (0.70, 0.30, 0.10, 0.35), [],
                 [("to the right of", "p3"), ("taller", "p3")]),
        ],
    },
    {
        "image_id": "food_05",
        "width": 640,
        "height": 640,
        "objects": [
            _obj("f1", "plate", (0.30, 0.55, 0.30, 0.25), ["white"]),
            _obj("f2", "pizza", (0.35, 0.58, 0.20, 0.18), [], [("on", "f1")]),
            _obj("f3", "banana", (0.05, 0.30, 0.15, 0.10), ["yellow"]),
            _obj("f4", "apple", (0.70, 0.35, 0.10, 0.10), ["red"], [("to the right of", "f3")]),
            _obj("f5", "fork", (0.62, 0.60, 0.05, 0.20), ["metal"], [("near", "f1")]),
        ],
    },
    {
        "image_id": "office_06",
        "width": 640,
        "height": 480,
        "objects": [
            _obj("d1", "desk", (0.15, 0.55, 0.55, 0.35), ["wooden"]),
            _obj("d2", "laptop", (0.25, 0.40, 0.20, 0.15), ["black"], [("on", "d1")]),
            _obj("d3", "mug", (0.50, 0.44, 0.08, 0.10), ["blue"],
                 [("on", "d1"), ("to the right of", "d2")]),
            _obj("d4", "chair", (0.30, 0.70, 0.25, 0.28)),
            _obj("d5", "poster", (0.75, 0.10, 0.20, 0.30), ["green"], [("above", "d3")]),
        ],
    },
    {
        "image_id": "zoo_07",
        "width": 800,
        "height": 600,
        "objects": [
            _obj("z1", "elephant", (0.10, 0.35, 0.35, 0.45), ["large"], [("larger", "z2")]),
            _obj("z2", "zebra", (0.55, 0.45, 0.25, 0.30), ["striped"], [("faster", "z1")]),
            _obj("z3", "bird", (0.44, 0.08, 0.10, 0.08), [], [("above", "z2")]),
            _obj("z4", "fence", (0.04, 0.60, 0.90, 0.15)),
        ],
    },
    {
        "image_id": "bedroom_08",
        "width": 640,
        "height": 480,
        "objects": [
            _obj("b1", "bed", (0.10, 0.50, 0.60, 0.40), ["blue"]),
            _obj("b2", "pillow", (0.15, 0.52, 0.15, 0.10), ["white"], [("on", "b1")]),
            _obj("b3", "pillow", (0.33, 0.52, 0.15, 0.10), ["red"], [("on", "b1")]),
            _obj("b4", "window", (0.70, 0.10, 0.25, 0.35)),
            _obj("b5", "dog", (0.72, 0.60, 0.20, 0.30), ["white"], [("near", "b1")]),
        ],
    },
    # This one is stored with pixel boxes to keep that path exercised.
    {
        "image_id": "bathroom_09",
        "width": 100,
        "height": 100,
        "objects": [
            {
                "id": "m1",
                "name": "mirror",
                "box_pixels": {"x": 34, "y": 10, "w": 30, "h": 30},
                "attributes": [],
                "relations": [],
            },
            {
                "id": "m2",
                "name": "sink",
                "box_pixels": {"x": 30, "y": 45, "w": 35, "h": 20},
                "attributes": ["white"],
                "relations": [],
            },
            {
                "id": "m3",
                "name": "towel",
                "box_pixels": {"x": 75, "y": 30, "w": 15, "h": 25},
                "attributes": ["blue"],
                "relations": [{"relation": "to the right of", "target": "m2"}],
            },
        ],
    },
    {
        "image_id": "garage_10",
        "width": 800,
        "height": 600,
        "objects": [
            _obj("g1", "car", (0.15, 0.40, 0.50, 0.40), ["blue"]),
            _obj("g2", "bicycle", (0.70, 0.50, 0.25, 0.30), ["red"],
                 [("to the right of", "g1"), ("smaller", "g1")]),
            _obj("g3", "shelf", (0.02, 0.10, 0.20, 0.60), ["metal"]),
            _obj("g4", "box", (0.04, 0.12, 0.10, 0.10), [], [("on", "g3")]),
            _obj("g5", "box", (0.04, 0.30, 0.12, 0.10), [], [("on", "g3")]),
        ],
    },
]


def _q(qid, image_id, question, layout, qtype, expected):
    return {
        "question_id": qid,
        "image_id": image_id,
        "question": question,
        "layout": layout,
        "question_type": qtype,
        "expected": expected,
    }


QUESTIONS = [
    _q("q01", "living_room_01", "is there a black cat?",
       "Exist(Filter[black](Find[cat]))", "verify", "yes"),
    _q("q02", "living_room_01", "is there a fireplace?",
       "Exist(Find[fireplace])", "verify", "no"),
    _q("q03", "living_room_01", "is there a red object on the sofa?",
       "Exist(Filter[red](Relocate[on](Find[sofa])))", "verify", "yes"),
    _q("q04", "living_room_01", "how many things are on the sofa?",
       "Count(Relocate[on](Find[sofa]))", "count", "2"),
    _q("q05", "living_room_01", "is the cat to the left of or to the right of the dog?",
       "Choose[to the left of;to the right of](Find[cat], Find[dog])", "choose",
       "to the left of"),
    _q("q06", "living_room_01", "which is taller, the dog or the cat?",
       "Compare[taller](Find[dog], Find[cat])", "compare", "dog"),
    _q("q07", "living_room_01", "what color is the cat?",
       "Query[color](Find[cat])", "query", "black"),
    _q("q08", "living_room_01", "which side of the picture is the lamp on?",
       "Query[hposition](Find[lamp])", "query", "right"),
    _q("q09", "living_room_01", "are there a cat and a fireplace?",
       "And(Exist(Find[cat]), Exist(Find[fireplace]))", "logical", "no"),
    _q("q10", "living_room_01", "is there either a cat or a fireplace?",
       "Or(Exist(Find[cat]), Exist(Find[fireplace]))", "logical", "yes"),
    _q("q11", "kitchen_02", "how many things are on the wooden table?",
       "Count(Relocate[on](Filter[wooden](Find[table])))", "count", "3"),
    _q("q12", "kitchen_02", "how many cups are there?",
       "Count(Find[cup])", "count", "2"),
    _q("q13", "kitchen_02", "is there a cup that is both red and blue?",
       "Exist(Filter[red](Filter[blue](Find[cup])))", "verify", "no"),
    _q("q14", "kitchen_02", "is there a metal thing on the table?",
       "Exist(Filter[metal](Relocate[on](Find[table])))", "verify", "yes"),
    _q("q15", "kitchen_02", "what color is the object on the table?",
       "Query[color](Relocate[on](Find[table]))", "query", "red"),
    _q("q16", "kitchen_02", "is the window above or below the table?",
       "Choose[above;below](Find[window], Find[table])", "choose", "above"),
    _q("q17", "kitchen_02", "what is on the table?",
       "Query[name](Relocate[on](Find[table]))", "query", "cup"),
    _q("q18", "kitchen_02", "is there a green cup?",
       "Exist(Filter[green](Find[cup]))", "verify", "no"),
    _q("q19", "street_03", "is the bus to the right of or to the left of the car?",
       "Choose[to the right of;to the left of](Find[bus], Find[car])", "choose",
       "to the right of"),
    _q("q20", "street_03", "which is larger, the bus or the car?",
       "Compare[larger](Find[bus], Find[car])", "compare", "bus"),
    _q("q21", "street_03", "is there anything above the car?",
       "Exist(Relocate[above](Find[car]))", "verify", "yes"),
    _q("q22", "street_03", "is the sign in the top or the bottom of the photo?",
       "Query[vposition](Find[sign])", "query", "top"),
    _q("q23", "street_03", "how many objects are in the picture?",
       "Count(Find[object])", "count", "5"),
    _q("q24", "street_03", "are there both a car and a bus?",
       "And(Exist(Find[car]), Exist(Find[bus]))", "logical", "yes"),
    _q("q25", "street_03", "what color is the sign?",
       "Query[color](Find[sign])", "query", "green"),
    _q("q26", "park_04", "is there someone holding the ball?",
       "Exist(Relocate[holding](Find[ball]))", "verify", "yes"),
    _q("q27", "park_04", "is the man holding or sitting on the ball?",
       "Choose[holding;sitting on](Find[man], Find[ball])", "choose", "holding"),
    _q("q28", "park_04", "who is taller, the woman or the man?",
       "Compare[taller](Find[woman], Find[man])", "compare", "woman"),
    _q("q29", "park_04", "is the tree on the left or the right side?",
       "Query[hposition](Find[tree])", "query", "left"),
    _q("q30", "park_04", "is there a tall tree?",
       "Exist(Filter[tall](Find[tree]))", "verify", "yes"),
    _q("q31", "park_04", "is there a lake or a bench?",
       "Or(Exist(Find[lake]), Exist(Find[bench]))", "logical", "yes"),
    _q("q32", "park_04", "who is holding the ball?",
       "Query[name](Relocate[holding](Find[ball]))", "query", "man"),
    _q("q33", "food_05", "is there food on the plate?",
       "Exist(Relocate[on](Find[plate]))", "verify", "yes"),
    _q("q34", "food_05", "is the banana to the left of or to the right of the apple?",
       "Choose[to the left of;to the right of](Find[banana], Find[apple])", "choose",
       "to the left of"),
    _q("q35", "food_05", "how many red apples are there?",
       "Count(Filter[red](Find[apple]))", "count", "1"),
    _q("q36", "food_05", "what color is the plate?",
       "Query[color](Find[plate])", "query", "white"),
    _q("q37", "food_05", "is there a metal thing near the plate?",
       "Exist(Filter[metal](Relocate[near](Find[plate])))", "verify", "yes"),
    _q("q38", "food_05", "are there both a pizza and a burger?",
       "And(Exist(Find[pizza]), Exist(Find[burger]))", "logical", "no"),
    _q("q39", "office_06", "how many things are on the desk?",
       "Count(Relocate[on](Find[desk]))", "count", "2"),
    _q("q40", "office_06", "what color is the object on the wooden desk?",
       "Query[color](Relocate[on](Filter[wooden](Find[desk])))", "query", "black"),
    _q("q41", "office_06", "is the mug blue or red?",
       "Choose[blue;red](Find[mug], Find[mug])", "choose", "blue"),
    _q("q42", "office_06", "is there a black wooden desk?",
       "Exist(Filter[black](Filter[wooden](Find[desk])))", "verify", "no"),
    _q("q43", "office_06", "is the chair in the top or bottom part of the image?",
       "Query[vposition](Find[chair])", "query", "bottom"),
    _q("q44", "office_06", "is there a printer or a scanner?",
       "Or(Exist(Find[printer]), Exist(Find[scanner]))", "logical", "no"),
    _q("q45", "zoo_07", "which is larger, the elephant or the zebra?",
       "Compare[larger;elephant;zebra](Find[elephant], Find[zebra])", "compare",
       "elephant"),
    _q("q46", "zoo_07", "is there a striped zebra?",
       "Exist(Filter[striped](Find[zebra]))", "verify", "yes"),
    _q("q47", "zoo_07", "is the bird above or under the zebra?",
       "Choose[above;under](Find[bird], Find[zebra])", "choose", "above"),
    _q("q48", "zoo_07", "how many lions are there?",
       "Count(Find[lion])", "count", "0"),
    _q("q49", "zoo_07", "is the elephant on the left or right side of the image?",
       "Query[hposition](Find[elephant])", "query", "left"),
    _q("q50", "bedroom_08", "how many white pillows are there?",
       "Count(Filter[white](Find[pillow]))", "count", "1"),
    _q("q51", "bedroom_08", "how many pillows are on the bed?",
       "Count(Find[pillow])", "count", "2"),
    _q("q52", "bedroom_08", "what is near the bed?",
       "Query[name](Relocate[near](Find[bed]))", "query", "dog"),
    _q("q53", "bedroom_08", "is there a red pillow on the bed?",
       "Exist(Filter[red](Relocate[on](Find[bed])))", "verify", "yes"),
    _q("q54", "bedroom_08", "is the window to the left of or to the right of the bed?",
       "Choose[to the left of;to the right of](Find[window], Find[bed])", "choose",
       "to the right of"),
    _q("q55", "living_room_01", "are there a fireplace and a lake?",
       "And(Exist(Find[fireplace]), Exist(Find[lake]))", "logical", "no"),
    _q("q56", "living_room_01", "is there a cat or a dog?",
       "Or(Exist(Find[cat]), Exist(Find[dog]))", "logical", "yes"),
    _q("q57", "living_room_01", "are there a fireplace and a cat?",
       "And(Exist(Find[fireplace]), Exist(Find[cat]))", "logical", "no"),
    _q("q58", "kitchen_02", "is the oven black or white?",
       "Choose[black;white](Find[oven], Find[oven])", "choose", "black"),
    _q("q59", "food_05", "is the pizza on top of or under the plate?",
       "Choose[on top of;under](Find[pizza], Find[plate])", "choose", "on top of"),
    _q("q60", "zoo_07", "which is faster, the zebra or the elephant?",
       "Compare[faster;zebra;elephant](Find[zebra], Find[elephant])", "compare",
       "zebra"),
    _q("q61", "bathroom_09", "is there a blue towel?",
       "Exist(Filter[blue](Find[towel]))", "verify", "yes"),
    _q("q62", "bathroom_09", "what color is the sink?",
       "Query[color](Find[sink])", "query", "white"),
    _q("q63", "bathroom_09", "is the sink to the left of or to the right of the towel?",
       "Choose[to the left of;to the right of](Find[sink], Find[towel])", "choose",
       "to the left of"),
    _q("q64", "garage_10", "how many boxes are on the shelf?",
       "Count(Relocate[on](Find[shelf]))", "count", "2"),
    _q("q65", "garage_10", "which is smaller, the bicycle or the car?",
       "Compare[smaller](Find[bicycle], Find[car])", "compare", "bicycle"),
    _q("q66", "garage_10", "what color is the bicycle?",
       "Query[color](Find[bicycle])", "query", "red"),
    _q("q67", "garage_10", "is there anything on the metal shelf?",
       "Exist(Relocate[on](Filter[metal](Find[shelf])))", "verify", "yes"),
    _q("q68", "garage_10", "are there both a car and a bicycle?",
       "And(Exist(Find[car]), Exist(Find[bicycle]))", "logical", "yes"),
]


def main() -> int:
    out_dir = ROOT / "data" / "mini"
    scenes_dir = out_dir / "scenes"
    scenes_dir.mkdir(parents=True, exist_ok=True)

    scenes = {}
    for raw in SCENES:
        scene = Scene.from_dict(raw)
        scenes[scene.image_id] = scene
        (scenes_dir / f"{scene.image_id}.json").write_text(
            json.dumps(raw, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    mismatches = []
    with open(out_dir / "questions.jsonl", "w", encoding="utf-8") as fh:
        for q in QUESTIONS:
            gold = bruteforce.evaluate(
                scenes[q["image_id"]], q["layout"], vocab=VOCAB, top_k=TOP_K
            )
            if gold != q["expected"]:
                mismatches.append(f"{q['question_id']}: expected {q['expected']!r}, reference says {gold!r}")
                continue
            record = {
                "question_id": q["question_id"],
                "image_id": q["image_id"],
                "question": q["question"],
                "layout": q["layout"],
                "answer": gold,
                "question_type": q["question_type"],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    (out_dir / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")

    if mismatches:
        print("authoring errors:", file=sys.stderr)
        for m in mismatches:
            print(f"  {m}", file=sys.stderr)
        return 1
    print(f"wrote {len(SCENES)} scenes and {len(QUESTIONS)} questions to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
