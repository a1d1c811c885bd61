"""Zero-shot plan IR.

A plan is what a layout compiles into: a tree of executable steps wired
to backend capabilities (detect, ground, match) plus the deterministic
glue between them (threshold selection, region building, geometric
shortcuts, logic).  Plans are config-independent; numeric thresholds are
supplied at execution time so one plan can be run under several settings.

Alongside every natural-language sentence the plan keeps a structured
form (``StructuredRef`` for grounding queries, ``Intent`` for match
texts).  Real vision/language backends ignore the structured form; the
deterministic scene-graph oracle requires it, which is what makes
end-to-end executions exactly checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, ClassVar, Iterator

from .layout import ModuleName

#: Head noun meaning "any object"; used when a reference constrains an
#: object only through attributes or relations.
WILDCARD_HEAD = "object"


@dataclass(frozen=True)
class RelationLink:
    relation: str
    target: StructuredRef


@dataclass(frozen=True)
class StructuredRef:
    """Machine-readable object reference: a head noun, required
    attributes, and at most one relation hop to another reference."""

    head: str
    attributes: tuple[str, ...] = ()
    link: RelationLink | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"head": self.head, "attributes": list(self.attributes)}
        if self.link is not None:
            out["link"] = {
                "relation": self.link.relation,
                "target": self.link.target.to_dict(),
            }
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> StructuredRef:
        link = None
        if d.get("link") is not None:
            link = RelationLink(
                relation=d["link"]["relation"],
                target=cls.from_dict(d["link"]["target"]),
            )
        return cls(
            head=d["head"],
            attributes=tuple(d.get("attributes", ())),
            link=link,
        )


# ---------------------------------------------------------------------------
# Match intents: the structured meaning of one candidate text.


@dataclass(frozen=True)
class AspectIs:
    """"The referred object's <aspect> is <value>" (aspect "name" compares
    against the object class, anything else against its attributes)."""

    aspect: str
    value: str


@dataclass(frozen=True)
class HasAttribute:
    attribute: str
    negated: bool = False


@dataclass(frozen=True)
class RelationHolds:
    subject: StructuredRef
    relation: str
    target: StructuredRef
    negated: bool = False


Intent = AspectIs | HasAttribute | RelationHolds


def intent_to_dict(intent: Intent) -> dict[str, Any]:
    if isinstance(intent, AspectIs):
        return {"kind": "aspect_is", "aspect": intent.aspect, "value": intent.value}
    if isinstance(intent, HasAttribute):
        return {
            "kind": "has_attribute",
            "attribute": intent.attribute,
            "negated": intent.negated,
        }
    if isinstance(intent, RelationHolds):
        return {
            "kind": "relation_holds",
            "subject": intent.subject.to_dict(),
            "relation": intent.relation,
            "target": intent.target.to_dict(),
            "negated": intent.negated,
        }
    raise TypeError(f"not an intent: {intent!r}")


def intent_from_dict(d: dict[str, Any]) -> Intent:
    kind = d["kind"]
    if kind == "aspect_is":
        return AspectIs(aspect=d["aspect"], value=d["value"])
    if kind == "has_attribute":
        return HasAttribute(attribute=d["attribute"], negated=bool(d.get("negated", False)))
    if kind == "relation_holds":
        return RelationHolds(
            subject=StructuredRef.from_dict(d["subject"]),
            relation=d["relation"],
            target=StructuredRef.from_dict(d["target"]),
            negated=bool(d.get("negated", False)),
        )
    raise ValueError(f"unknown intent kind {kind!r}")


# ---------------------------------------------------------------------------
# Plan steps.


class Step:
    """Base for all plan steps.  Subclasses are frozen dataclasses; the
    ``children`` method fixes the traversal order used for step paths."""

    kind: ClassVar[str]

    def children(self) -> tuple[Step, ...]:
        return ()


@dataclass(frozen=True)
class Detect(Step):
    """Locate every instance of one object class (open-vocabulary
    detection; used when the reference is a bare noun)."""

    kind: ClassVar[str] = "detect"
    object_name: str


@dataclass(frozen=True)
class Ground(Step):
    """Locate the referent of a multi-word expression."""

    kind: ClassVar[str] = "ground"
    sentence: str
    ref: StructuredRef


@dataclass(frozen=True)
class ThresholdSelect(Step):
    """Keep boxes scoring at or above the executor's threshold for
    ``source`` and single out the best one (ties go to the earliest)."""

    kind: ClassVar[str] = "threshold_select"
    source: str  # "detector" or "grounder", selects which threshold applies
    inner: Step

    def children(self) -> tuple[Step, ...]:
        return (self.inner,)


@dataclass(frozen=True)
class Region(Step):
    """Build the image region handed to the matcher: ``crop`` keeps one
    box, ``mask_keep`` blanks everything outside two boxes."""

    kind: ClassVar[str] = "region"
    op: str  # "crop" or "mask_keep"
    inputs: tuple[Step, ...]

    def children(self) -> tuple[Step, ...]:
        return self.inputs


@dataclass(frozen=True)
class MatchTexts(Step):
    """Score candidate statements against a region and answer with the
    candidate whose text scores highest."""

    kind: ClassVar[str] = "match_texts"
    region: Step
    template: str
    texts: tuple[str, ...]
    answers: tuple[str, ...]
    intents: tuple[Intent, ...]

    def children(self) -> tuple[Step, ...]:
        return (self.region,)


@dataclass(frozen=True)
class PositionProbe(Step):
    """Answer a position query from the selected box's center: the first
    label when the center is strictly in the smaller-coordinate half."""

    kind: ClassVar[str] = "position_probe"
    axis: str  # "h" or "v"
    labels: tuple[str, str]
    input: Step

    def children(self) -> tuple[Step, ...]:
        return (self.input,)


@dataclass(frozen=True)
class PairOrder(Step):
    """Answer a spatial two-way choice by comparing two box centers on
    one axis; ``first_answer`` is returned when the left operand's center
    strictly precedes the right one's."""

    kind: ClassVar[str] = "pair_order"
    axis: str
    first_answer: str
    second_answer: str
    left: Step
    right: Step

    def children(self) -> tuple[Step, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class CountBoxes(Step):
    kind: ClassVar[str] = "count_boxes"
    input: Step

    def children(self) -> tuple[Step, ...]:
        return (self.input,)


@dataclass(frozen=True)
class ExistObject(Step):
    """"Is there any <noun>?": yes when the detector probe keeps at least
    one box."""

    kind: ClassVar[str] = "exist_object"
    probe: Step

    def children(self) -> tuple[Step, ...]:
        return (self.probe,)


@dataclass(frozen=True)
class ExistAttribute(Step):
    """"Is there a <noun> that is <attrs...>?".

    Every noun mentioned on the path gets a detector probe in ``verify``;
    if any probe comes back empty the answer is no and the matcher is
    never consulted.  Otherwise each attribute is checked on the cropped
    region with a positive/negative text pair, and all must hold.
    """

    kind: ClassVar[str] = "exist_attribute"
    verify: tuple[Step, ...]
    region: Step  # crop over the locator select
    attributes: tuple[str, ...]
    texts: tuple[tuple[str, str], ...]
    intents: tuple[tuple[Intent, Intent], ...]

    def children(self) -> tuple[Step, ...]:
        return (*self.verify, self.region)


@dataclass(frozen=True)
class ExistRelation(Step):
    """"Is there an X <relation> Y?" with the same verify-first protocol
    as ExistAttribute; the statement pair is matched against a two-box
    masked region."""

    kind: ClassVar[str] = "exist_relation"
    verify: tuple[Step, ...]
    region: Step  # mask_keep over the subject and target selects
    texts: tuple[str, str]
    intents: tuple[Intent, Intent]

    def children(self) -> tuple[Step, ...]:
        return (*self.verify, self.region)


@dataclass(frozen=True)
class Logic(Step):
    kind: ClassVar[str] = "logic"
    op: str  # "and" or "or"
    operands: tuple[Step, ...]

    def children(self) -> tuple[Step, ...]:
        return self.operands


def iter_steps(root: Step) -> Iterator[tuple[str, Step]]:
    """Pre-order walk yielding (step path, step); the root is "p" and the
    i-th child of a step at P is "P.i"."""

    def walk(step: Step, path: str) -> Iterator[tuple[str, Step]]:
        yield path, step
        for i, child in enumerate(step.children()):
            yield from walk(child, f"{path}.{i}")

    yield from walk(root, "p")


# ---------------------------------------------------------------------------
# Serialization.  Dicts are kind-tagged; children appear nested, so a plan
# file is one self-contained JSON document.


def step_to_dict(step: Step) -> dict[str, Any]:
    if isinstance(step, Detect):
        return {"kind": step.kind, "object": step.object_name}
    if isinstance(step, Ground):
        return {"kind": step.kind, "sentence": step.sentence, "ref": step.ref.to_dict()}
    if isinstance(step, ThresholdSelect):
        return {"kind": step.kind, "source": step.source, "inner": step_to_dict(step.inner)}
    if isinstance(step, Region):
        return {
            "kind": step.kind,
            "op": step.op,
            "inputs": [step_to_dict(s) for s in step.inputs],
        }
    if isinstance(step, MatchTexts):
        return {
            "kind": step.kind,
            "region": step_to_dict(step.region),
            "template": step.template,
            "texts": list(step.texts),
            "answers": list(step.answers),
            "intents": [intent_to_dict(i) for i in step.intents],
        }
    if isinstance(step, PositionProbe):
        return {
            "kind": step.kind,
            "axis": step.axis,
            "labels": list(step.labels),
            "input": step_to_dict(step.input),
        }
    if isinstance(step, PairOrder):
        return {
            "kind": step.kind,
            "axis": step.axis,
            "first_answer": step.first_answer,
            "second_answer": step.second_answer,
            "left": step_to_dict(step.left),
            "right": step_to_dict(step.right),
        }
    if isinstance(step, CountBoxes):
        return {"kind": step.kind, "input": step_to_dict(step.input)}
    if isinstance(step, ExistObject):
        return {"kind": step.kind, "probe": step_to_dict(step.probe)}
    if isinstance(step, ExistAttribute):
        return {
            "kind": step.kind,
            "verify": [step_to_dict(s) for s in step.verify],
            "region": step_to_dict(step.region),
            "attributes": list(step.attributes),
            "texts": [list(pair) for pair in step.texts],
            "intents": [[intent_to_dict(a), intent_to_dict(b)] for a, b in step.intents],
        }
    if isinstance(step, ExistRelation):
        return {
            "kind": step.kind,
            "verify": [step_to_dict(s) for s in step.verify],
            "region": step_to_dict(step.region),
            "texts": list(step.texts),
            "intents": [intent_to_dict(i) for i in step.intents],
        }
    if isinstance(step, Logic):
        return {
            "kind": step.kind,
            "op": step.op,
            "operands": [step_to_dict(s) for s in step.operands],
        }
    raise TypeError(f"not a plan step: {step!r}")


def step_from_dict(d: dict[str, Any]) -> Step:
    kind = d["kind"]
    if kind == "detect":
        return Detect(object_name=d["object"])
    if kind == "ground":
        return Ground(sentence=d["sentence"], ref=StructuredRef.from_dict(d["ref"]))
    if kind == "threshold_select":
        return ThresholdSelect(source=d["source"], inner=step_from_dict(d["inner"]))
    if kind == "region":
        return Region(op=d["op"], inputs=tuple(step_from_dict(s) for s in d["inputs"]))
    if kind == "match_texts":
        return MatchTexts(
            region=step_from_dict(d["region"]),
            template=d["template"],
            texts=tuple(d["texts"]),
            answers=tuple(d["answers"]),
            intents=tuple(intent_from_dict(i) for i in d["intents"]),
        )
    if kind == "position_probe":
        return PositionProbe(
            axis=d["axis"],
            labels=(d["labels"][0], d["labels"][1]),
            input=step_from_dict(d["input"]),
        )
    if kind == "pair_order":
        return PairOrder(
            axis=d["axis"],
            first_answer=d["first_answer"],
            second_answer=d["second_answer"],
            left=step_from_dict(d["left"]),
            right=step_from_dict(d["right"]),
        )
    if kind == "count_boxes":
        return CountBoxes(input=step_from_dict(d["input"]))
    if kind == "exist_object":
        return ExistObject(probe=step_from_dict(d["probe"]))
    if kind == "exist_attribute":
        return ExistAttribute(
            verify=tuple(step_from_dict(s) for s in d["verify"]),
            region=step_from_dict(d["region"]),
            attributes=tuple(d["attributes"]),
            texts=tuple((p[0], p[1]) for p in d["texts"]),
            intents=tuple(
                (intent_from_dict(p[0]), intent_from_dict(p[1])) for p in d["intents"]
            ),
        )
    if kind == "exist_relation":
        return ExistRelation(
            verify=tuple(step_from_dict(s) for s in d["verify"]),
            region=step_from_dict(d["region"]),
            texts=(d["texts"][0], d["texts"][1]),
            intents=(intent_from_dict(d["intents"][0]), intent_from_dict(d["intents"][1])),
        )
    if kind == "logic":
        return Logic(op=d["op"], operands=tuple(step_from_dict(s) for s in d["operands"]))
    raise ValueError(f"unknown step kind {kind!r}")


@dataclass(frozen=True)
class ZeroShotPlan:
    """A compiled plan plus its provenance back to the layout.

    ``node_to_step`` maps every layout node path ("r", "r.0", ...) to the
    plan step path that realizes it; nodes folded into a grounding
    sentence map to the Ground step that absorbed them, so the mapping is
    total over the layout.
    """

    root: Step
    layout_source: str
    answer_module: ModuleName
    node_to_step: tuple[tuple[str, str], ...]

    def steps(self) -> Iterator[tuple[str, Step]]:
        return iter_steps(self.root)

    def step_at(self, path: str) -> Step:
        for p, step in self.steps():
            if p == path:
                return step
        raise KeyError(path)

    @property
    def provenance(self) -> dict[str, str]:
        return dict(self.node_to_step)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": 1,
            "layout": self.layout_source,
            "answer_module": self.answer_module.value,
            "node_to_step": [[n, s] for n, s in self.node_to_step],
            "root": step_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ZeroShotPlan:
        return cls(
            root=step_from_dict(d["root"]),
            layout_source=d["layout"],
            answer_module=ModuleName(d["answer_module"]),
            node_to_step=tuple((n, s) for n, s in d["node_to_step"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ZeroShotPlan:
        return cls.from_dict(json.loads(text))
