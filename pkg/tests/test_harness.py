"""Dataset harness: record validation, scoring, metrics, the OOD split,
and a smoke pass over the CLI entry points."""

from __future__ import annotations

import json
import threading

import pytest

from modzero.answers import WrongAnnotatorCount
from modzero.backends.base import BackendError, BackendUnavailable, ScoredBox
from modzero.backends.oracle import OracleBackend
from modzero.backends.scene import Scene, SceneStore
from modzero.backends.server import build_server
from modzero.cli import main
from modzero.geometry import BoundingBox
from modzero.harness import (
    DEFAULT_TEST_RATIO,
    DatasetError,
    MetricsReport,
    QuestionRecord,
    evaluate_dataset,
    evaluate_predictions,
    load_object_list,
    load_predictions,
    load_questions,
    load_vocab,
    run_question,
    split_scenes,
)

PORCH = {
    "image_id": "porch_01",
    "width": 100,
    "height": 100,
    "objects": [
        {
            "id": "a",
            "name": "cat",
            "box": {"x": 0.1, "y": 0.1, "w": 0.2, "h": 0.2},
            "attributes": ["black"],
        },
        {
            "id": "b",
            "name": "dog",
            "box": {"x": 0.6, "y": 0.6, "w": 0.3, "h": 0.3},
            "attributes": ["white"],
            "relations": [{"relation": "near", "target": "a"}],
        },
    ],
}

VOCAB = ["black", "white", "red"]


def porch_backend() -> OracleBackend:
    scene = Scene.from_dict(PORCH)
    return OracleBackend(SceneStore({scene.image_id: scene}))


def record(layout: str, qid: str = "q1", **kwargs) -> QuestionRecord:
    return QuestionRecord(
        question_id=qid,
        image_id="porch_01",
        question=kwargs.pop("question", "placeholder"),
        layout=layout,
        **kwargs,
    )


class DownBackend:
    """Every model call fails the way an unreachable service does."""

    def detect(self, image_id, object_name):
        raise BackendUnavailable("connection refused")

    def ground(self, image_id, sentence, ref=None):
        raise BackendUnavailable("connection refused")

    def match(self, image_id, region, texts, intents=None):
        raise BackendUnavailable("connection refused")

    def filter_answers(self, template, candidates, k):
        raise BackendUnavailable("connection refused")


class TestQuestionRecord:
    def test_from_dict_round_trip(self):
        rec = QuestionRecord.from_dict(
            {
                "question_id": "q1",
                "image_id": "porch_01",
                "question": "is there a cat?",
                "layout": "Exist(Find[cat])",
                "answer": "yes",
                "question_type": "verify",
            }
        )
        assert rec.question_id == "q1"
        assert rec.answer == "yes"
        assert rec.answers is None
        assert rec.derived_type() == "verify"

    @pytest.mark.parametrize(
        "missing", ["question_id", "image_id", "question", "layout"]
    )
    def test_missing_field(self, missing):
        d = {
            "question_id": "q1",
            "image_id": "porch_01",
            "question": "is there a cat?",
            "layout": "Exist(Find[cat])",
        }
        del d[missing]
        with pytest.raises(DatasetError, match="missing field"):
            QuestionRecord.from_dict(d)

    def test_root_must_answer(self):
        with pytest.raises(DatasetError, match="does not produce an answer"):
            QuestionRecord.from_dict(
                {
                    "question_id": "q1",
                    "image_id": "porch_01",
                    "question": "?",
                    "layout": "Filter[black](Find[cat])",
                }
            )

    def test_type_mismatch(self):
        with pytest.raises(DatasetError, match="does not .* layout root"):
            QuestionRecord.from_dict(
                {
                    "question_id": "q1",
                    "image_id": "porch_01",
                    "question": "?",
                    "layout": "Exist(Find[cat])",
                    "question_type": "count",
                }
            )

    @pytest.mark.parametrize("n", [0, 9, 11])
    def test_wrong_annotator_count(self, n):
        with pytest.raises(WrongAnnotatorCount):
            QuestionRecord.from_dict(
                {
                    "question_id": "q1",
                    "image_id": "porch_01",
                    "question": "?",
                    "layout": "Exist(Find[cat])",
                    "answers": ["yes"] * n,
                }
            )

    def test_ten_annotators_accepted(self):
        rec = QuestionRecord.from_dict(
            {
                "question_id": "q1",
                "image_id": "porch_01",
                "question": "?",
                "layout": "Exist(Find[cat])",
                "answers": ["yes"] * 10,
            }
        )
        assert rec.answers == ("yes",) * 10

    @pytest.mark.parametrize(
        "layout, qtype",
        [
            ("Exist(Find[cat])", "verify"),
            ("And(Exist(Find[cat]), Exist(Find[dog]))", "logical"),
            ("Or(Exist(Find[cat]), Exist(Find[dog]))", "logical"),
            ("Query[color](Find[cat])", "query"),
            ("Choose[black;white](Find[cat], Find[cat])", "choose"),
            ("Compare[taller](Find[cat], Find[dog])", "compare"),
            ("Count(Find[cat])", "count"),
        ],
    )
    def test_derived_type_per_root(self, layout, qtype):
        assert record(layout).derived_type() == qtype


class TestLoading:
    def test_load_questions(self, tmp_path):
        path = tmp_path / "q.jsonl"
        lines = [
            json.dumps(
                {
                    "question_id": "q2",
                    "image_id": "porch_01",
                    "question": "?",
                    "layout": "Count(Find[cat])",
                }
            ),
            "",
            json.dumps(
                {
                    "question_id": "q1",
                    "image_id": "porch_01",
                    "question": "?",
                    "layout": "Exist(Find[cat])",
                }
            ),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        records = load_questions(path)
        # file order, blank lines skipped
        assert [r.question_id for r in records] == ["q2", "q1"]

    def test_load_questions_bad_json_names_line(self, tmp_path):
        path = tmp_path / "q.jsonl"
        path.write_text('{"question_id": "q1"}\n' "not json\n", encoding="utf-8")
        # line 1 is valid JSON but an invalid record, so it fails first
        with pytest.raises(DatasetError, match="missing field"):
            load_questions(path)
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(DatasetError, match=":1: not JSON"):
            load_questions(path)

    def test_load_vocab(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("black\n\n  white  \nred\n", encoding="utf-8")
        assert load_vocab(path) == ["black", "white", "red"]


class TestRunQuestion:
    def test_exact_match_scores_one(self):
        out = run_question(porch_backend(), record("Exist(Find[cat])", answer="yes"))
        assert out.status == "ok"
        assert out.prediction == "yes"
        assert out.score == 1.0
        assert out.result is not None

    def test_exact_mismatch_scores_zero(self):
        out = run_question(porch_backend(), record("Count(Find[dog])", answer="2"))
        assert out.prediction == "1"
        assert out.score == 0.0

    def test_exact_match_normalizes(self):
        out = run_question(porch_backend(), record("Exist(Find[cat])", answer="Yes."))
        assert out.score == 1.0

    def test_soft_scoring(self):
        annotators = (
            "black",
            "black",
            "white",
            "gray",
            "tan",
            "white",
            "white",
            "brown",
            "brown",
            "orange",
        )
        out = run_question(
            porch_backend(),
            record(
                "Query[color](Find[cat])",
                question="what color is the cat?",
                answers=annotators,
            ),
            vocab=VOCAB,
        )
        assert out.prediction == "black"
        assert out.score == pytest.approx(2 / 3)

    def test_no_gold_means_no_score(self):
        out = run_question(porch_backend(), record("Exist(Find[cat])"))
        assert out.prediction == "yes"
        assert out.score is None

    def test_query_requires_vocab(self):
        with pytest.raises(DatasetError, match="vocabulary"):
            run_question(porch_backend(), record("Query[color](Find[cat])"))

    def test_position_query_needs_no_vocab(self):
        out = run_question(porch_backend(), record("Query[hposition](Find[cat])"))
        assert out.prediction == "left"

    def test_failure_keeps_reason(self):
        out = run_question(
            porch_backend(), record("Query[hposition](Find[unicorn])", answer="left")
        )
        assert out.status == "failed"
        assert out.prediction is None
        assert "unicorn" in out.reason
        assert out.score == 0.0

    def test_failure_answer_stands_in(self):
        out = run_question(
            porch_backend(),
            record("Query[hposition](Find[unicorn])", answer="left"),
            failure_answer="left",
        )
        assert out.status == "failed"
        assert out.prediction == "left"
        assert out.score == 1.0

    def test_backend_error_becomes_failure(self):
        class Broken:
            def detect(self, image_id, object_name):
                raise BackendError("detector offline")

            def ground(self, image_id, sentence, ref=None):
                raise BackendError("grounder offline")

            def match(self, image_id, region, texts, intents=None):
                raise BackendError("matcher offline")

            def filter_answers(self, template, candidates, k):
                return list(candidates)[:k]

        out = run_question(Broken(), record("Exist(Find[cat])", answer="yes"))
        assert out.status == "failed"
        assert "offline" in out.reason
        assert out.result is None
        assert out.score == 0.0

    def test_unavailable_backend_propagates(self):
        with pytest.raises(BackendUnavailable):
            run_question(DownBackend(), record("Exist(Find[cat])", answer="yes"))


class TestEvaluateDataset:
    def records(self):
        return [
            record("Exist(Find[cat])", qid="q3", answer="yes"),
            record("Exist(Find[unicorn])", qid="q1", answer="yes"),
            record("Count(Find[dog])", qid="q4", answer="1"),
            record(
                "Query[color](Find[cat])",
                qid="q2",
                question="what color is the cat?",
                answer="black",
            ),
        ]

    def test_metrics_and_ordering(self):
        report, outcomes = evaluate_dataset(
            porch_backend(), self.records(), vocab=VOCAB
        )
        assert [o.record.question_id for o in outcomes] == ["q1", "q2", "q3", "q4"]
        assert report.total == 4
        assert report.scored == 4
        assert report.failures == 0
        # q1 exists-check answers "no" against gold "yes"
        assert report.overall == pytest.approx(3 / 4)
        assert report.per_type == {
            "count": {"count": 1, "accuracy": 1.0},
            "query": {"count": 1, "accuracy": 1.0},
            "verify": {"count": 2, "accuracy": 0.5},
        }
        assert report.answer_split == {
            "yes_no": {"count": 2, "accuracy": 0.5},
            "other": {"count": 2, "accuracy": 1.0},
        }

    def test_unscored_records_excluded_from_accuracy(self):
        records = [
            record("Exist(Find[cat])", qid="q1", answer="yes"),
            record("Exist(Find[dog])", qid="q2"),
        ]
        report, _ = evaluate_dataset(porch_backend(), records)
        assert report.total == 2
        assert report.scored == 1
        assert report.overall == 1.0
        assert report.per_type["verify"] == {"count": 2, "accuracy": 1.0}

    def test_nothing_scored_overall_none(self):
        report, _ = evaluate_dataset(
            porch_backend(), [record("Exist(Find[cat])", qid="q1")]
        )
        assert report.scored == 0
        assert report.overall is None
        assert report.per_type["verify"]["accuracy"] is None

    def test_failures_counted(self):
        records = [
            record("Query[hposition](Find[unicorn])", qid="q1", answer="left"),
            record("Exist(Find[cat])", qid="q2", answer="yes"),
        ]
        report, outcomes = evaluate_dataset(porch_backend(), records)
        assert report.failures == 1
        assert outcomes[0].status == "failed"
        assert report.overall == pytest.approx(0.5)

    def test_empty_dataset(self):
        report, outcomes = evaluate_dataset(porch_backend(), [])
        assert outcomes == []
        assert report == MetricsReport(
            total=0,
            scored=0,
            failures=0,
            overall=None,
            per_type={},
            answer_split={
                "yes_no": {"count": 0, "accuracy": None},
                "other": {"count": 0, "accuracy": None},
            },
        )

    def test_unreachable_backend_fails_every_question(self):
        records = [
            record("Exist(Find[cat])", qid="q1", answer="yes"),
            record("Count(Find[dog])", qid="q2", answer="1"),
        ]
        report, outcomes = evaluate_dataset(DownBackend(), records)
        assert report.failures == report.total == 2
        assert report.overall == 0.0
        assert all("connection refused" in o.reason for o in outcomes)

    def test_report_to_dict_is_json_ready(self):
        report, _ = evaluate_dataset(porch_backend(), self.records(), vocab=VOCAB)
        parsed = json.loads(json.dumps(report.to_dict()))
        assert parsed["total"] == 4
        assert parsed["answer_split"]["yes_no"]["count"] == 2


class TestEvaluatePredictions:
    GOLD = [
        record("Exist(Find[cat])", qid="q1", answer="yes"),
        record("Count(Find[dog])", qid="q2", answer="1"),
        record("Query[color](Find[cat])", qid="q3", answers=("black",) * 10),
    ]

    def test_scores_against_gold(self):
        report, outcomes = evaluate_predictions(
            {"q1": "yes", "q2": "2", "q3": "black"}, self.GOLD
        )
        assert report.total == 3
        assert report.failures == 0
        assert [o.score for o in outcomes] == [1.0, 0.0, 1.0]
        assert report.overall == pytest.approx(2 / 3)

    def test_missing_prediction_flagged_and_scored_zero(self):
        report, outcomes = evaluate_predictions({"q1": "yes"}, self.GOLD)
        assert report.failures == 2
        missing = [o for o in outcomes if o.status == "missing"]
        assert [o.record.question_id for o in missing] == ["q2", "q3"]
        assert all(o.score == 0.0 for o in missing)
        assert all(o.prediction is None for o in missing)

    def test_matches_live_run(self):
        records = [
            record("Exist(Find[cat])", qid="q1", answer="yes"),
            record("Count(Find[dog])", qid="q2", answer="1"),
        ]
        live_report, live_outcomes = evaluate_dataset(porch_backend(), records)
        predictions = {o.record.question_id: o.prediction for o in live_outcomes}
        offline_report, _ = evaluate_predictions(predictions, records)
        assert offline_report.overall == live_report.overall
        assert offline_report.per_type == live_report.per_type

    def test_soft_records_bucket_by_majority_answer(self):
        gold = [
            record(
                "Exist(Find[cat])",
                qid="q1",
                answers=("yes",) * 6 + ("no",) * 4,
            )
        ]
        report, _ = evaluate_predictions({"q1": "yes"}, gold)
        assert report.answer_split["yes_no"]["count"] == 1
        assert report.answer_split["other"]["count"] == 0
        assert report.answer_split["yes_no"]["accuracy"] == 1.0

    def test_load_predictions_formats(self, tmp_path):
        as_map = tmp_path / "map.json"
        as_map.write_text(json.dumps({"q1": "yes"}), encoding="utf-8")
        assert load_predictions(as_map) == {"q1": "yes"}

        as_eval_output = tmp_path / "eval.json"
        as_eval_output.write_text(
            json.dumps({"total": 1, "predictions": {"q1": "yes", "q2": None}}),
            encoding="utf-8",
        )
        assert load_predictions(as_eval_output) == {"q1": "yes"}

        as_jsonl = tmp_path / "pred.jsonl"
        as_jsonl.write_text(
            '{"question_id": "q1", "prediction": "yes"}\n'
            '{"question_id": "q2", "prediction": "2"}\n',
            encoding="utf-8",
        )
        assert load_predictions(as_jsonl) == {"q1": "yes", "q2": "2"}

        one_record = tmp_path / "one.jsonl"
        one_record.write_text(
            '{"question_id": "q1", "prediction": "yes"}\n', encoding="utf-8"
        )
        assert load_predictions(one_record) == {"q1": "yes"}

        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            '{"question_id": "q1"}\n{"question_id": "q2"}\n', encoding="utf-8"
        )
        with pytest.raises(DatasetError, match=":1:"):
            load_predictions(bad)


def scene_with(image_id: str, *names: str) -> Scene:
    objects = [
        {
            "id": f"o{i}",
            "name": name,
            "box": {"x": 0.1, "y": 0.1, "w": 0.2, "h": 0.2},
        }
        for i, name in enumerate(names)
    ]
    return Scene.from_dict(
        {"image_id": image_id, "width": 10, "height": 10, "objects": objects}
    )


class TestOODSplit:
    SCENES = [
        scene_with("clean_01", "chair", "lamp"),
        scene_with("mixed_02", "chair", "lamp", "pizza", "sofa"),  # 1/4 listed
        scene_with("foody_03", "pizza", "banana", "chair"),  # 2/3 listed
        scene_with("allfood_04", "pizza", "banana"),
    ]
    LISTED = ["pizza", "banana"]

    def test_default_ratio_buckets(self):
        split = split_scenes(self.SCENES, self.LISTED)
        assert split.train == ("clean_01",)
        assert split.test == ("foody_03", "allfood_04")
        assert split.excluded == ("mixed_02",)

    def test_train_never_contains_listed_objects(self):
        split = split_scenes(self.SCENES, self.LISTED, test_ratio=0.0001)
        by_id = {s.image_id: s for s in self.SCENES}
        listed = set(self.LISTED)
        for image_id in split.train:
            assert not listed & {o.name for o in by_id[image_id].objects}
        # with a tiny ratio every touched image qualifies as test
        assert split.excluded == ()

    def test_raising_ratio_moves_images_to_excluded(self):
        split = split_scenes(self.SCENES, self.LISTED, test_ratio=0.9)
        assert split.test == ("allfood_04",)
        assert split.excluded == ("mixed_02", "foody_03")

    def test_name_matching_ignores_case_and_spacing(self):
        scenes = [scene_with("img", "Fire  Hydrant")]
        split = split_scenes(scenes, ["fire hydrant"], test_ratio=0.5)
        assert split.test == ("img",)

    def test_to_dict(self):
        split = split_scenes(self.SCENES, self.LISTED)
        assert split.to_dict() == {
            "train": ["clean_01"],
            "test": ["foody_03", "allfood_04"],
            "excluded": ["mixed_02"],
        }

    def test_default_ratio_value(self):
        assert DEFAULT_TEST_RATIO == 0.3


class TestObjectLists:
    def test_bundled_food_list(self):
        food = load_object_list("food")
        assert len(food) == 100
        assert "pizza" in food
        assert "banana" in food

    def test_bundled_street_list(self):
        street = load_object_list("street")
        assert len(street) == 92
        assert "car" in street
        assert "sign" in street

    def test_bundled_lists_disjoint_enough(self):
        # the two scene inventories describe different worlds; a handful of
        # generic words may overlap but the bulk must not
        food = set(load_object_list("food"))
        street = set(load_object_list("street"))
        assert len(food & street) < 20

    def test_multiword_entries_survive(self):
        assert "home plate" in load_object_list("food")
        assert "fire hydrant" in load_object_list("street")

    def test_list_from_path(self, tmp_path):
        path = tmp_path / "objs.txt"
        path.write_text("a\n\n b \n", encoding="utf-8")
        assert load_object_list(str(path)) == ["a", "b"]

    def test_comma_separated_list(self, tmp_path):
        path = tmp_path / "objs.txt"
        path.write_text("plate, home plate,steering wheel, \n", encoding="utf-8")
        assert load_object_list(str(path)) == [
            "plate", "home plate", "steering wheel",
        ]


class TestCLI:
    def test_compile_prints_plan(self, capsys):
        rc = main(["compile", "--layout", "Exist(Find[cat])"])
        assert rc == 0
        plan = json.loads(capsys.readouterr().out)
        assert plan["version"] == 1
        assert plan["root"]["kind"] == "exist_object"

    def test_run_answers_and_traces(self, tmp_path, capsys):
        trace_path = tmp_path / "run.trace.jsonl"
        rc = main(
            [
                "run",
                "--layout",
                "Count(Find[cup])",
                "--image",
                "living_room_01",
                "--scenes",
                "data/mini/scenes",
                "--trace",
                str(trace_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert out.isdigit()
        events = [json.loads(l) for l in trace_path.read_text().splitlines()]
        assert events[0]["kind"] == "start"
        assert events[-1]["kind"] == "result"

    def test_run_failure_exits_nonzero(self, capsys):
        rc = main(
            [
                "run",
                "--layout",
                "Query[hposition](Find[unicorn])",
                "--image",
                "living_room_01",
                "--scenes",
                "data/mini/scenes",
            ]
        )
        assert rc == 1
        assert "failed:" in capsys.readouterr().err

    def test_run_oracle_without_scenes_rejected(self):
        with pytest.raises(SystemExit, match="--scenes"):
            main(["run", "--layout", "Exist(Find[cat])", "--image", "img"])

    def test_bad_layout_is_a_clean_diagnostic(self, capsys):
        rc = main(["compile", "--layout", "Bogus(Find[cat])"])
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("modzero:")
        assert "Bogus" in err

    def test_missing_vocab_file_is_a_clean_diagnostic(self, capsys):
        rc = main(
            [
                "run",
                "--layout",
                "Exist(Find[cat])",
                "--image",
                "living_room_01",
                "--scenes",
                "data/mini/scenes",
                "--vocab",
                "nope.txt",
            ]
        )
        assert rc == 1
        assert "nope.txt" in capsys.readouterr().err

    def test_malformed_question_file_is_a_clean_diagnostic(self, tmp_path, capsys):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"question_id": "q1"}\n', encoding="utf-8")
        rc = main(
            ["eval", "--questions", str(path), "--scenes", "data/mini/scenes"]
        )
        assert rc == 1
        assert "missing field" in capsys.readouterr().err

    def test_eval_mini_dataset(self, capsys):
        rc = main(
            [
                "eval",
                "--questions",
                "data/mini/questions.jsonl",
                "--scenes",
                "data/mini/scenes",
                "--vocab",
                "data/mini/vocab.txt",
            ]
        )
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["total"] == 68
        assert report["overall"] == 1.0
        assert report["predictions"]["q01"]

    def test_eval_writes_traces(self, tmp_path, capsys):
        questions = tmp_path / "q.jsonl"
        questions.write_text(
            json.dumps(
                {
                    "question_id": "t1",
                    "image_id": "living_room_01",
                    "question": "is there a cup?",
                    "layout": "Exist(Find[cup])",
                    "answer": "yes",
                }
            )
            + "\n",
            encoding="utf-8",
        )
        trace_dir = tmp_path / "traces"
        rc = main(
            [
                "eval",
                "--questions",
                str(questions),
                "--scenes",
                "data/mini/scenes",
                "--trace-dir",
                str(trace_dir),
            ]
        )
        assert rc == 0
        capsys.readouterr()
        assert (trace_dir / "t1.trace.jsonl").exists()

    def test_eval_all_failed_exits_nonzero(self, tmp_path, capsys):
        questions = tmp_path / "q.jsonl"
        questions.write_text(
            json.dumps(
                {
                    "question_id": "t1",
                    "image_id": "living_room_01",
                    "question": "?",
                    "layout": "Query[hposition](Find[unicorn])",
                    "answer": "left",
                }
            )
            + "\n",
            encoding="utf-8",
        )
        rc = main(
            [
                "eval",
                "--questions",
                str(questions),
                "--scenes",
                "data/mini/scenes",
            ]
        )
        assert rc == 1
        assert json.loads(capsys.readouterr().out)["failures"] == 1

    def test_eval_rescores_its_own_output(self, tmp_path, capsys):
        rc = main(
            [
                "eval",
                "--questions",
                "data/mini/questions.jsonl",
                "--scenes",
                "data/mini/scenes",
                "--vocab",
                "data/mini/vocab.txt",
            ]
        )
        assert rc == 0
        output = capsys.readouterr().out
        pred_file = tmp_path / "run.json"
        pred_file.write_text(output, encoding="utf-8")

        rc = main(
            [
                "eval",
                "--questions",
                "data/mini/questions.jsonl",
                "--pred",
                str(pred_file),
            ]
        )
        assert rc == 0
        rescored = json.loads(capsys.readouterr().out)
        assert rescored["overall"] == 1.0
        assert rescored["failures"] == 0

    def test_ood_filter_with_bundled_list(self, capsys):
        rc = main(
            ["ood-filter", "--scenes", "data/mini/scenes", "--objects", "food"]
        )
        assert rc == 0
        split = json.loads(capsys.readouterr().out)
        assert set(split) == {"train", "test", "excluded"}
        assert len(split["train"]) + len(split["test"]) + len(split["excluded"]) == 10
        listed = set(load_object_list("food"))
        store = SceneStore.from_dir("data/mini/scenes")
        for image_id in split["train"]:
            names = {o.name for o in store.get(image_id).objects}
            assert not names & listed

    def test_conformance_against_live_server(self, capsys):
        from modzero.backends.conformance import load_suite

        suite = load_suite("fixtures/protocol_suite.json")
        scenes = [Scene.from_dict(doc) for doc in suite["scenes"]]
        backend = OracleBackend(SceneStore({s.image_id: s for s in scenes}))
        server = build_server(backend, host="127.0.0.1", port=0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        host, port = server.server_address[:2]
        try:
            rc = main(
                [
                    "conformance",
                    "--suite",
                    "fixtures/protocol_suite.json",
                    "--url",
                    f"http://{host}:{port}",
                    "--tiers",
                    "protocol,oracle",
                ]
            )
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)
        assert rc == 0
        assert "20/20 conformance cases passed" in capsys.readouterr().out
