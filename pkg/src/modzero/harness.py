"""Dataset evaluation: question records, per-question runs, metrics, and
the scene-based out-of-distribution split.

A question file is JSONL, one record per line:

    {"question_id": "q1", "image_id": "indoor_01",
     "question": "is there a cat?", "layout": "Exist(Find[cat])",
     "answer": "yes", "question_type": "verify"}

``answer`` is a single gold answer scored by normalized exact match;
``answers`` (exactly ten annotator strings) switches that record to soft
scoring.  ``question_type`` is optional but, when present, must agree
with the layout root.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from . import answers as answer_ops
from .backends.base import Backend, BackendError, BackendUnavailable
from .backends.scene import Scene
from .compiler import compile_layout
from .executor import ExecutionConfig, Executor, QAResult
from .layout import Layout, ModuleName, parse_layout

#: How many filtered answer candidates a query keeps by default.
DEFAULT_ANSWER_TOP_K = 10

TYPE_BY_ROOT = {
    ModuleName.EXIST: "verify",
    ModuleName.AND: "logical",
    ModuleName.OR: "logical",
    ModuleName.QUERY: "query",
    ModuleName.CHOOSE: "choose",
    ModuleName.COMPARE: "compare",
    ModuleName.COUNT: "count",
}


class DatasetError(ValueError):
    """A question record that cannot be evaluated as written."""


@dataclass(frozen=True)
class QuestionRecord:
    question_id: str
    image_id: str
    question: str
    layout: str
    answer: str | None = None
    answers: tuple[str, ...] | None = None
    question_type: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> QuestionRecord:
        try:
            record = cls(
                question_id=d["question_id"],
                image_id=d["image_id"],
                question=d["question"],
                layout=d["layout"],
                answer=d.get("answer"),
                answers=tuple(d["answers"]) if d.get("answers") is not None else None,
                question_type=d.get("question_type"),
            )
        except KeyError as exc:
            raise DatasetError(f"question record is missing field {exc}") from None
        parsed = parse_layout(record.layout)
        derived = TYPE_BY_ROOT.get(parsed.root.module)
        if derived is None:
            raise DatasetError(
                f"{record.question_id}: layout root {parsed.root.module.value} "
                "does not produce an answer"
            )
        if record.question_type is not None and record.question_type != derived:
            raise DatasetError(
                f"{record.question_id}: question_type {record.question_type!r} does not "
                f"match layout root ({derived})"
            )
        if record.answers is not None and len(record.answers) != 10:
            raise answer_ops.WrongAnnotatorCount(
                f"{record.question_id}: {len(record.answers)} annotator answers"
            )
        return record

    def parsed_layout(self) -> Layout:
        return parse_layout(self.layout)

    def derived_type(self) -> str:
        return TYPE_BY_ROOT[self.parsed_layout().root.module]


def load_questions(path: str | Path) -> list[QuestionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(QuestionRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: not JSON: {exc}") from None
    return records


def load_vocab(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


@dataclass(frozen=True)
class QuestionOutcome:
    record: QuestionRecord
    prediction: str | None
    status: str  # "ok" or "failed"
    reason: str | None
    score: float | None
    result: QAResult | None


@dataclass(frozen=True)
class MetricsReport:
    total: int
    scored: int
    failures: int
    overall: float | None
    per_type: dict[str, dict[str, float | int]]
    #: accuracy split by gold answer: "yes_no" vs "other"
    answer_split: dict[str, dict[str, float | int | None]]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "scored": self.scored,
            "failures": self.failures,
            "overall": self.overall,
            "per_type": self.per_type,
            "answer_split": self.answer_split,
        }


def _needs_candidates(layout: Layout) -> bool:
    root = layout.root
    return (
        root.module is ModuleName.QUERY
        and answer_ops.position_query_labels(root.args[0]) is None
    )


def run_question(
    backend: Backend,
    record: QuestionRecord,
    vocab: Sequence[str] | None = None,
    config: ExecutionConfig | None = None,
    top_k: int = DEFAULT_ANSWER_TOP_K,
    failure_answer: str | None = None,
) -> QuestionOutcome:
    layout = record.parsed_layout()
    template = None
    candidates = None
    executor = Executor(backend, config)
    try:
        if _needs_candidates(layout):
            if not vocab:
                raise DatasetError(
                    f"{record.question_id}: query questions need an answer vocabulary"
                )
            template = answer_ops.question_to_template(record.question)
            candidates = backend.filter_answers(template, list(vocab), top_k)
        plan = compile_layout(layout, template=template, answer_candidates=candidates)
        result = executor.run(plan, record.image_id)
    except BackendUnavailable:
        raise
    except BackendError as exc:
        return QuestionOutcome(
            record=record,
            prediction=failure_answer,
            status="failed",
            reason=str(exc),
            score=_score(record, failure_answer),
            result=None,
        )
    prediction = result.answer if result.status == "ok" else failure_answer
    return QuestionOutcome(
        record=record,
        prediction=prediction,
        status=result.status,
        reason=result.reason,
        score=_score(record, prediction),
        result=result,
    )


def _score(record: QuestionRecord, prediction: str | None) -> float | None:
    if record.answers is not None:
        return answer_ops.soft_score(prediction or "", list(record.answers))
    if record.answer is not None:
        if prediction is None:
            return 0.0
        matched = answer_ops.normalize_answer(prediction) == answer_ops.normalize_answer(
            record.answer
        )
        return 1.0 if matched else 0.0
    return None


def _gold_bucket(record: QuestionRecord) -> str | None:
    """"yes_no" or "other" by the gold answer; None without a gold.

    For ten-annotator records the most common normalized answer stands in
    as the gold (first seen wins a tie).
    """
    if record.answer is not None:
        gold = record.answer
    elif record.answers:
        counts = Counter(answer_ops.normalize_answer(a) for a in record.answers)
        gold = counts.most_common(1)[0][0]
    else:
        return None
    return "yes_no" if answer_ops.normalize_answer(gold) in ("yes", "no") else "other"


def _accuracy(outcomes: Sequence[QuestionOutcome]) -> float | None:
    scored = [o.score for o in outcomes if o.score is not None]
    return sum(scored) / len(scored) if scored else None


def _report(outcomes: list[QuestionOutcome]) -> MetricsReport:
    per_type: dict[str, dict[str, float | int]] = {}
    for qtype in sorted({o.record.derived_type() for o in outcomes}):
        of_type = [o for o in outcomes if o.record.derived_type() == qtype]
        per_type[qtype] = {"count": len(of_type), "accuracy": _accuracy(of_type)}
    answer_split = {}
    for bucket in ("yes_no", "other"):
        of_bucket = [o for o in outcomes if _gold_bucket(o.record) == bucket]
        answer_split[bucket] = {
            "count": len(of_bucket),
            "accuracy": _accuracy(of_bucket),
        }
    return MetricsReport(
        total=len(outcomes),
        scored=sum(1 for o in outcomes if o.score is not None),
        failures=sum(1 for o in outcomes if o.status != "ok"),
        overall=_accuracy(outcomes),
        per_type=per_type,
        answer_split=answer_split,
    )


def evaluate_dataset(
    backend: Backend,
    records: Iterable[QuestionRecord],
    vocab: Sequence[str] | None = None,
    config: ExecutionConfig | None = None,
    top_k: int = DEFAULT_ANSWER_TOP_K,
    failure_answer: str | None = None,
) -> tuple[MetricsReport, list[QuestionOutcome]]:
    outcomes = []
    for record in records:
        try:
            outcomes.append(
                run_question(backend, record, vocab, config, top_k, failure_answer)
            )
        except BackendUnavailable as exc:
            # an unreachable service fails the question, not the whole run
            outcomes.append(
                QuestionOutcome(
                    record=record,
                    prediction=failure_answer,
                    status="failed",
                    reason=str(exc),
                    score=_score(record, failure_answer),
                    result=None,
                )
            )
    outcomes.sort(key=lambda o: o.record.question_id)
    return _report(outcomes), outcomes


def _prediction_entry(entry, where: str) -> tuple[str, str]:
    try:
        return entry["question_id"], entry["prediction"]
    except (TypeError, KeyError) as exc:
        raise DatasetError(f"{where}: bad prediction record: {exc}") from None


def load_predictions(path: str | Path) -> dict[str, str]:
    """Predictions from either an `eval` output document (a JSON object
    with a "predictions" map, or the bare map itself) or JSONL records
    with question_id and prediction fields."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        if "question_id" in doc:  # a one-line JSONL file parses whole
            qid, prediction = _prediction_entry(doc, str(path))
            return {qid: prediction}
        inner = doc.get("predictions", doc)
        if not isinstance(inner, dict):
            raise DatasetError(f"{path}: predictions must be an object")
        return {str(k): v for k, v in inner.items() if v is not None}
    predictions: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: not JSON: {exc}") from None
        qid, prediction = _prediction_entry(entry, f"{path}:{lineno}")
        predictions[qid] = prediction
    return predictions


def evaluate_predictions(
    predictions: dict[str, str | None],
    records: Iterable[QuestionRecord],
) -> tuple[MetricsReport, list[QuestionOutcome]]:
    """Score an existing prediction map against gold records.

    Records without a prediction score zero and are flagged "missing".
    """
    outcomes = []
    for record in records:
        prediction = predictions.get(record.question_id)
        if prediction is None:
            outcomes.append(
                QuestionOutcome(
                    record=record,
                    prediction=None,
                    status="missing",
                    reason="no prediction for this question",
                    score=_score(record, None),
                    result=None,
                )
            )
        else:
            outcomes.append(
                QuestionOutcome(
                    record=record,
                    prediction=prediction,
                    status="ok",
                    reason=None,
                    score=_score(record, prediction),
                    result=None,
                )
            )
    outcomes.sort(key=lambda o: o.record.question_id)
    return _report(outcomes), outcomes


# -- out-of-distribution splitting -------------------------------------------

DEFAULT_TEST_RATIO = 0.3

_BUNDLED_LISTS = {"food": "food_objects.txt", "street": "street_objects.txt"}


def load_object_list(name_or_path: str) -> list[str]:
    """A scene-specific object list: one of the bundled names ("food",
    "street") or a path to a plain-text file, comma- or line-separated."""
    bundled = _BUNDLED_LISTS.get(name_or_path.lower())
    if bundled is not None:
        text = resources.files("modzero.data").joinpath(bundled).read_text("utf-8")
    else:
        text = Path(name_or_path).read_text("utf-8")
    return [item.strip() for item in text.replace("\n", ",").split(",") if item.strip()]


@dataclass(frozen=True)
class OODSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    excluded: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "train": list(self.train),
            "test": list(self.test),
            "excluded": list(self.excluded),
        }


def split_scenes(
    scenes: Iterable[Scene],
    listed_objects: Sequence[str],
    test_ratio: float = DEFAULT_TEST_RATIO,
) -> OODSplit:
    """Split images so the listed objects are unseen in training.

    Train images contain none of the listed objects.  Test images are
    clearly about them: at least ``test_ratio`` of their objects are
    listed.  Images in between are excluded outright.
    """
    listed = {" ".join(name.lower().split()) for name in listed_objects}
    train: list[str] = []
    test: list[str] = []
    excluded: list[str] = []
    for scene in scenes:
        names = [" ".join(obj.name.lower().split()) for obj in scene.objects]
        hits = sum(1 for n in names if n in listed)
        if hits == 0:
            train.append(scene.image_id)
        elif names and hits / len(names) >= test_ratio:
            test.append(scene.image_id)
        else:
            excluded.append(scene.image_id)
    return OODSplit(train=tuple(train), test=tuple(test), excluded=tuple(excluded))
