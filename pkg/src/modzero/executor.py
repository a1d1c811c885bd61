"""Plan execution against a backend, with a full deterministic trace.

Every step evaluation appends one trace event: a plain dict with the step
path, the step kind, and the inputs/outputs that mattered.  Events carry
no timing or other nondeterministic data, so executing the same plan on
the same backend twice yields byte-identical serialized traces; wall time
lives on the result object instead.

Semantics pinned here rather than in the plan:

* thresholding keeps boxes scoring at or above the source's threshold,
  and the top box is the earliest one with the maximal score;
* candidate selection is argmax over match scores, earliest on ties;
* a position/pair comparison uses strict less-than on box centers, so an
  exact midline or equal centers fall to the second label;
* existence checks verify nouns with the detector before anything else
  and answer "no" without consulting the matcher when one is missing;
* a yes/no text pair holds only when the positive text outscores the
  negative one strictly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .backends.base import Backend, ProtocolViolation, RegionSpec, ScoredBox
from .plan import (
    CountBoxes,
    ExistAttribute,
    ExistObject,
    ExistRelation,
    Detect,
    Ground,
    Intent,
    Logic,
    MatchTexts,
    PairOrder,
    PositionProbe,
    Region,
    Step,
    ThresholdSelect,
    ZeroShotPlan,
)

#: Confidence floors tuned for the two localization sources.
DEFAULT_DETECTOR_THRESHOLD = 0.2
DEFAULT_GROUNDER_THRESHOLD = 0.7


@dataclass(frozen=True)
class ExecutionConfig:
    detector_threshold: float = DEFAULT_DETECTOR_THRESHOLD
    grounder_threshold: float = DEFAULT_GROUNDER_THRESHOLD


@dataclass(frozen=True)
class QAResult:
    answer: str | None
    status: str  # "ok" or "failed"
    reason: str | None
    trace: tuple[dict, ...]
    wall_ms: float


def trace_to_jsonl(trace: tuple[dict, ...] | list[dict]) -> str:
    """Canonical one-event-per-line rendering; the bytes are the contract
    replay tests compare."""
    return "".join(json.dumps(event, sort_keys=True) + "\n" for event in trace)


class _Fail(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass
class _Run:
    image_id: str
    trace: list[dict] = field(default_factory=list)
    memo: dict = field(default_factory=dict)

    def emit(self, path: str, kind: str, data: dict) -> None:
        self.trace.append({"step": path, "kind": kind, "data": data})


@dataclass(frozen=True)
class _Selection:
    kept: tuple[ScoredBox, ...]
    top: ScoredBox | None


def _boxes_data(boxes: list[ScoredBox] | tuple[ScoredBox, ...]) -> list[list[float]]:
    return [[b.box.x, b.box.y, b.box.w, b.box.h, b.score] for b in boxes]


class Executor:
    def __init__(self, backend: Backend, config: ExecutionConfig | None = None):
        self.backend = backend
        self.config = config or ExecutionConfig()

    def run(self, plan: ZeroShotPlan, image_id: str) -> QAResult:
        started = time.perf_counter()
        run = _Run(image_id=image_id)
        run.emit(
            "",
            "start",
            {
                "image_id": image_id,
                "layout": plan.layout_source,
                "detector_threshold": self.config.detector_threshold,
                "grounder_threshold": self.config.grounder_threshold,
            },
        )
        try:
            answer = self._answer(run, plan.root, "p")
        except _Fail as fail:
            run.emit("", "failure", {"reason": fail.reason})
            return QAResult(
                answer=None,
                status="failed",
                reason=fail.reason,
                trace=tuple(run.trace),
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
        run.emit("", "result", {"answer": answer})
        return QAResult(
            answer=answer,
            status="ok",
            reason=None,
            trace=tuple(run.trace),
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )

    # -- answer-producing steps -------------------------------------------

    def _answer(self, run: _Run, step: Step, path: str) -> str:
        if isinstance(step, MatchTexts):
            return self._match_texts(run, step, path)
        if isinstance(step, PositionProbe):
            return self._position_probe(run, step, path)
        if isinstance(step, PairOrder):
            return self._pair_order(run, step, path)
        if isinstance(step, CountBoxes):
            selection = self._select(run, step.input, f"{path}.0")
            run.emit(path, step.kind, {"count": len(selection.kept)})
            return str(len(selection.kept))
        if isinstance(step, (ExistObject, ExistAttribute, ExistRelation, Logic)):
            return "yes" if self._truth(run, step, path) else "no"
        raise TypeError(f"step {step.kind} does not produce an answer")

    def _match_texts(self, run: _Run, step: MatchTexts, path: str) -> str:
        region = self._region_required(run, step.region, f"{path}.0")
        scores = self._match(run, path, region, step.texts, step.intents)
        choice = _argmax(scores)
        run.emit(
            path,
            step.kind,
            {
                "template": step.template,
                "texts": list(step.texts),
                "scores": scores,
                "choice": choice,
            },
        )
        return step.answers[choice]

    def _position_probe(self, run: _Run, step: PositionProbe, path: str) -> str:
        selection = self._select(run, step.input, f"{path}.0")
        if selection.top is None:
            raise _Fail(f"nothing to probe: {_describe(step.input)}")
        cx, cy = selection.top.box.center
        coord = cx if step.axis == "h" else cy
        answer = step.labels[0] if coord < 0.5 else step.labels[1]
        run.emit(path, step.kind, {"axis": step.axis, "center": [cx, cy], "answer": answer})
        return answer

    def _pair_order(self, run: _Run, step: PairOrder, path: str) -> str:
        left = self._select(run, step.left, f"{path}.0")
        right = self._select(run, step.right, f"{path}.1")
        if left.top is None:
            raise _Fail(f"nothing to compare: {_describe(step.left)}")
        if right.top is None:
            raise _Fail(f"nothing to compare: {_describe(step.right)}")
        index = 0 if step.axis == "h" else 1
        lc = left.top.box.center[index]
        rc = right.top.box.center[index]
        answer = step.first_answer if lc < rc else step.second_answer
        run.emit(
            path,
            step.kind,
            {"axis": step.axis, "left_center": lc, "right_center": rc, "answer": answer},
        )
        return answer

    # -- truth-valued steps -------------------------------------------------

    def _truth(self, run: _Run, step: Step, path: str) -> bool:
        if isinstance(step, ExistObject):
            selection = self._select(run, step.probe, f"{path}.0")
            value = bool(selection.kept)
            run.emit(path, step.kind, {"answer": "yes" if value else "no"})
            return value
        if isinstance(step, ExistAttribute):
            return self._exist_attribute(run, step, path)
        if isinstance(step, ExistRelation):
            return self._exist_relation(run, step, path)
        if isinstance(step, Logic):
            values = [
                self._truth(run, operand, f"{path}.{i}")
                for i, operand in enumerate(step.operands)
            ]
            value = all(values) if step.op == "and" else any(values)
            run.emit(
                path,
                step.kind,
                {
                    "op": step.op,
                    "operands": ["yes" if v else "no" for v in values],
                    "answer": "yes" if value else "no",
                },
            )
            return value
        raise TypeError(f"step {step.kind} is not truth-valued")

    def _verify(self, run: _Run, step: ExistAttribute | ExistRelation, path: str) -> str | None:
        """Detector probes for every noun; the name of the first missing
        one, or None when all are present."""
        for i, probe in enumerate(step.verify):
            selection = self._select(run, probe, f"{path}.{i}")
            if not selection.kept:
                assert isinstance(probe, ThresholdSelect) and isinstance(probe.inner, Detect)
                return probe.inner.object_name
        return None

    def _exist_attribute(self, run: _Run, step: ExistAttribute, path: str) -> bool:
        region_path = f"{path}.{len(step.verify)}"
        missing = self._verify(run, step, path)
        if missing is not None:
            run.emit(path, step.kind, {"answer": "no", "reason": f"no {missing} in image"})
            return False
        assert isinstance(step.region, Region)
        locator = step.region.inputs[0]
        selection = self._select(run, locator, f"{region_path}.0")
        if selection.top is None:
            run.emit(path, step.kind, {"answer": "no", "reason": "nothing matched the description"})
            return False
        region = RegionSpec(op=step.region.op, boxes=(selection.top.box,))
        run.emit(region_path, step.region.kind, {"op": region.op, "boxes": _region_data(region)})
        holds_all = True
        for attribute, texts, intents in zip(step.attributes, step.texts, step.intents):
            scores = self._match(run, path, region, texts, intents)
            holds = scores[0] > scores[1]
            run.emit(
                path,
                "check",
                {"attribute": attribute, "texts": list(texts), "scores": scores, "holds": holds},
            )
            holds_all = holds_all and holds
        run.emit(path, step.kind, {"answer": "yes" if holds_all else "no", "reason": "checked"})
        return holds_all

    def _exist_relation(self, run: _Run, step: ExistRelation, path: str) -> bool:
        region_path = f"{path}.{len(step.verify)}"
        missing = self._verify(run, step, path)
        if missing is not None:
            run.emit(path, step.kind, {"answer": "no", "reason": f"no {missing} in image"})
            return False
        assert isinstance(step.region, Region)
        subject_sel = self._select(run, step.region.inputs[0], f"{region_path}.0")
        target_sel = self._select(run, step.region.inputs[1], f"{region_path}.1")
        if subject_sel.top is None or target_sel.top is None:
            run.emit(path, step.kind, {"answer": "no", "reason": "nothing matched the description"})
            return False
        region = RegionSpec(
            op=step.region.op, boxes=(subject_sel.top.box, target_sel.top.box)
        )
        run.emit(region_path, step.region.kind, {"op": region.op, "boxes": _region_data(region)})
        scores = self._match(run, path, region, step.texts, step.intents)
        holds = scores[0] > scores[1]
        run.emit(
            path,
            "check",
            {"texts": list(step.texts), "scores": scores, "holds": holds},
        )
        run.emit(path, step.kind, {"answer": "yes" if holds else "no", "reason": "checked"})
        return holds

    # -- attention plumbing ---------------------------------------------------

    def _region_required(self, run: _Run, step: Step, path: str) -> RegionSpec:
        assert isinstance(step, Region)
        tops: list[ScoredBox] = []
        for i, select in enumerate(step.inputs):
            selection = self._select(run, select, f"{path}.{i}")
            if selection.top is None:
                raise _Fail(f"nothing located: {_describe(select)}")
            tops.append(selection.top)
        region = RegionSpec(op=step.op, boxes=tuple(t.box for t in tops))
        run.emit(path, step.kind, {"op": region.op, "boxes": _region_data(region)})
        return region

    def _select(self, run: _Run, step: Step, path: str) -> _Selection:
        assert isinstance(step, ThresholdSelect)
        boxes = self._locate(run, step.inner, f"{path}.0")
        threshold = (
            self.config.detector_threshold
            if step.source == "detector"
            else self.config.grounder_threshold
        )
        kept = tuple(b for b in boxes if b.score >= threshold)
        top: ScoredBox | None = None
        for candidate in kept:
            if top is None or candidate.score > top.score:
                top = candidate
        run.emit(
            path,
            step.kind,
            {
                "source": step.source,
                "threshold": threshold,
                "kept": len(kept),
                "top": _boxes_data([top])[0] if top is not None else None,
            },
        )
        return _Selection(kept=kept, top=top)

    def _locate(self, run: _Run, step: Step, path: str) -> list[ScoredBox]:
        if isinstance(step, Detect):
            key = ("detect", run.image_id, step.object_name)
            if key not in run.memo:
                run.memo[key] = self.backend.detect(run.image_id, step.object_name)
            boxes = run.memo[key]
            run.emit(path, step.kind, {"object": step.object_name, "boxes": _boxes_data(boxes)})
            return boxes
        if isinstance(step, Ground):
            key = ("ground", run.image_id, step.sentence, step.ref)
            if key not in run.memo:
                run.memo[key] = self.backend.ground(run.image_id, step.sentence, step.ref)
            boxes = run.memo[key]
            run.emit(path, step.kind, {"sentence": step.sentence, "boxes": _boxes_data(boxes)})
            return boxes
        raise TypeError(f"step {step.kind} does not locate boxes")

    def _match(
        self,
        run: _Run,
        path: str,
        region: RegionSpec,
        texts: tuple[str, ...],
        intents: tuple[Intent, ...],
    ) -> list[float]:
        scores = self.backend.match(run.image_id, region, list(texts), list(intents))
        if len(scores) != len(texts):
            raise ProtocolViolation(
                f"match returned {len(scores)} scores for {len(texts)} texts"
            )
        return [float(s) for s in scores]


def _argmax(scores: list[float]) -> int:
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def _region_data(region: RegionSpec) -> list[list[float]]:
    return [[b.x, b.y, b.w, b.h] for b in region.boxes]


def _describe(select: Step) -> str:
    assert isinstance(select, ThresholdSelect)
    inner = select.inner
    if isinstance(inner, Detect):
        return f"no {inner.object_name} above the detector threshold"
    assert isinstance(inner, Ground)
    return f"nothing above the grounder threshold for {inner.sentence!r}"
