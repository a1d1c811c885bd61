"""Layout-to-plan compiler.

The mapping rules, in one place:

* An attention chain (Find / Filter / Relocate nodes) of length one is a
  bare noun and becomes a Detect step; any longer chain is rendered to a
  referring expression and becomes a Ground step.  Either way the result
  passes through ThresholdSelect.
* Query answers by matching masked-statement candidates against a crop of
  the selected box, except position queries (hposition / vposition),
  which read the box center directly.
* Choose matches its two candidates, except when they form one of the
  spatial vocabularies, in which case the two box centers decide.
* Compare masks the image down to both boxes and matches "the [MASK] is
  <comparative>" over the candidate phrases.
* Count answers with the number of boxes that survive thresholding.
* Exist decomposes its chain into per-segment checks: every noun is
  verified with the detector first, attributes are checked with
  positive/negative text pairs on a crop, relations with a statement pair
  on a two-box mask, and multiple checks conjoin.
* And / Or become a Logic step over their compiled operands.

Compilation is pure: thresholds and backends only enter at execution
time.  Every layout node is recorded in the plan's provenance map, nodes
absorbed into a referring expression pointing at the Ground step that
swallowed them.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from . import answers
from .layout import Layout, LayoutNode, ModuleName, format_layout, format_node, validate
from .plan import (
    WILDCARD_HEAD,
    CountBoxes,
    Detect,
    ExistAttribute,
    ExistObject,
    ExistRelation,
    Ground,
    HasAttribute,
    AspectIs,
    Logic,
    MatchTexts,
    PairOrder,
    PositionProbe,
    Region,
    RelationHolds,
    RelationLink,
    Step,
    StructuredRef,
    ThresholdSelect,
    ZeroShotPlan,
)

_ATTENTION = {ModuleName.FIND, ModuleName.FILTER, ModuleName.RELOCATE}


class CompileError(Exception):
    """Base class for layout-to-plan failures."""


class InvalidLayoutError(CompileError):
    def __init__(self, report) -> None:
        detail = "; ".join(f"{v.path}: {v.message}" for v in report.violations)
        super().__init__(f"layout fails validation: {detail}")
        self.report = report


class UnsupportedLayoutError(CompileError):
    """Structurally valid but outside what plans can express."""


class MissingCandidatesError(CompileError):
    """A non-position Query was compiled without answer candidates."""


def structured_ref(node: LayoutNode) -> StructuredRef:
    """The machine-readable reference for an attention subtree."""
    if node.module is ModuleName.FIND:
        return StructuredRef(head=node.args[0])
    if node.module is ModuleName.FILTER:
        inner = structured_ref(node.children[0])
        return StructuredRef(
            head=inner.head,
            attributes=(node.args[0], *inner.attributes),
            link=inner.link,
        )
    if node.module is ModuleName.RELOCATE:
        return StructuredRef(
            head=WILDCARD_HEAD,
            link=RelationLink(
                relation=node.args[0], target=structured_ref(node.children[0])
            ),
        )
    raise UnsupportedLayoutError(
        f"{node.module.value} cannot appear inside an attention chain"
    )


def ref_phrase(ref: StructuredRef) -> str:
    """Render a reference as a noun phrase without a leading determiner."""
    core = " ".join((*ref.attributes, ref.head))
    if ref.link is None:
        return core
    return f"{core} {ref.link.relation} {_the(ref_phrase(ref.link.target))}"


def phrase(node: LayoutNode) -> str:
    return ref_phrase(structured_ref(node))


def _the(noun_phrase: str) -> str:
    return noun_phrase if noun_phrase.startswith("the ") else f"the {noun_phrase}"


def _walk(node: LayoutNode, path: str) -> Iterator[tuple[LayoutNode, str]]:
    yield node, path
    for i, child in enumerate(node.children):
        yield from _walk(child, f"{path}.{i}")


def _chain(node: LayoutNode, path: str) -> list[tuple[LayoutNode, str]]:
    """The attention chain under ``node``, top to bottom, ending at Find."""
    out: list[tuple[LayoutNode, str]] = []
    current, current_path = node, path
    while True:
        if current.module not in _ATTENTION:
            raise UnsupportedLayoutError(
                f"{current.module.value} cannot appear inside an attention chain"
            )
        out.append((current, current_path))
        if current.module is ModuleName.FIND:
            return out
        current, current_path = current.children[0], f"{current_path}.0"


def _nouns(node: LayoutNode) -> tuple[str, ...]:
    """Find arguments in the subtree, deduplicated, document order."""
    seen: list[str] = []
    for n, _ in _walk(node, "x"):
        if n.module is ModuleName.FIND and n.args[0] not in seen:
            seen.append(n.args[0])
    return tuple(seen)


class _Compilation:
    """Accumulates layout-node-to-step provenance while steps are built."""

    def __init__(self) -> None:
        self.node_to_obj: dict[str, Step] = {}

    def record(self, path: str, step: Step) -> None:
        self.node_to_obj.setdefault(path, step)

    def absorb(self, node: LayoutNode, path: str, step: Step) -> None:
        for _, p in _walk(node, path):
            self.record(p, step)

    def locator(self, node: LayoutNode, path: str) -> ThresholdSelect:
        """Detect for a bare noun, Ground for anything longer."""
        chain = _chain(node, path)
        if len(chain) == 1:
            inner: Step = Detect(object_name=node.args[0])
            source = "detector"
        else:
            ref = structured_ref(node)
            inner = Ground(sentence=_the(ref_phrase(ref)), ref=ref)
            source = "grounder"
        self.absorb(node, path, inner)
        return ThresholdSelect(source=source, inner=inner)

    def probes(self, node: LayoutNode) -> tuple[ThresholdSelect, ...]:
        return tuple(
            ThresholdSelect(source="detector", inner=Detect(object_name=noun))
            for noun in _nouns(node)
        )

    def compile_exist(self, exist_node: LayoutNode, path: str) -> Step:
        child, child_path = exist_node.children[0], f"{path}.0"
        chain = _chain(child, child_path)

        # Split the chain into segments anchored at each Relocate / Find,
        # collecting the Filter attributes that sit above the anchor.
        segments: list[tuple[int, int, tuple[str, ...]]] = []
        top = 0
        attrs: list[str] = []
        for i, (node, _) in enumerate(chain):
            if node.module is ModuleName.FILTER:
                attrs.append(node.args[0])
            else:
                segments.append((top, i, tuple(attrs)))
                top = i + 1
                attrs = []

        checks: list[Step] = []
        for top_i, anchor_i, seg_attrs in segments:
            top_node, top_path = chain[top_i]
            anchor_node, _ = chain[anchor_i]
            if seg_attrs:
                checks.append(
                    ExistAttribute(
                        verify=self.probes(top_node),
                        region=Region(op="crop", inputs=(self.locator(top_node, top_path),)),
                        attributes=seg_attrs,
                        texts=tuple(answers.attribute_pair(a) for a in seg_attrs),
                        intents=tuple(
                            (HasAttribute(attribute=a), HasAttribute(attribute=a, negated=True))
                            for a in seg_attrs
                        ),
                    )
                )
            if anchor_node.module is ModuleName.RELOCATE:
                target_node, target_path = chain[anchor_i + 1]
                relation = anchor_node.args[0]
                subject_core = " ".join((*seg_attrs, WILDCARD_HEAD))
                positive, negative = answers.relation_pair(
                    _the(subject_core), relation, _the(phrase(target_node))
                )
                subject_ref = structured_ref(top_node)
                target_ref = structured_ref(target_node)
                checks.append(
                    ExistRelation(
                        verify=self.probes(top_node),
                        region=Region(
                            op="mask_keep",
                            inputs=(
                                self.locator(top_node, top_path),
                                self.locator(target_node, target_path),
                            ),
                        ),
                        texts=(positive, negative),
                        intents=(
                            RelationHolds(
                                subject=subject_ref, relation=relation, target=target_ref
                            ),
                            RelationHolds(
                                subject=subject_ref,
                                relation=relation,
                                target=target_ref,
                                negated=True,
                            ),
                        ),
                    )
                )

        if not checks:
            step: Step = ExistObject(probe=self.locator(child, child_path))
        elif len(checks) == 1:
            step = checks[0]
        else:
            step = Logic(op="and", operands=tuple(checks))
        self.record(path, step)
        return step


def compile_layout(
    layout: Layout,
    *,
    template: str | None = None,
    answer_candidates: Sequence[str] | None = None,
) -> ZeroShotPlan:
    """Compile a validated layout into an executable plan.

    ``template`` overrides the masked statement used by a Query root
    (normally derived from the question text); ``answer_candidates`` is
    required for Query roots that are not position queries.
    """
    report = validate(layout)
    if not report.ok:
        raise InvalidLayoutError(report)

    ctx = _Compilation()
    root = layout.root
    module = root.module

    if module is ModuleName.QUERY:
        step = _compile_query(ctx, root, template, answer_candidates)
    elif module is ModuleName.CHOOSE:
        step = _compile_choose(ctx, root)
    elif module is ModuleName.COMPARE:
        step = _compile_compare(ctx, root)
    elif module is ModuleName.COUNT:
        step = CountBoxes(input=ctx.locator(root.children[0], "r.0"))
    elif module is ModuleName.EXIST:
        step = ctx.compile_exist(root, "r")
    else:  # And / Or; validate() already pinned the root to answer modules
        step = Logic(
            op=module.value.lower(),
            operands=(
                ctx.compile_exist(root.children[0], "r.0"),
                ctx.compile_exist(root.children[1], "r.1"),
            ),
        )
    ctx.record("r", step)

    return _assemble(ctx, layout, step)


def _compile_query(
    ctx: _Compilation,
    root: LayoutNode,
    template: str | None,
    answer_candidates: Sequence[str] | None,
) -> Step:
    aspect = root.args[0]
    child = root.children[0]
    labels = answers.position_query_labels(aspect)
    if labels is not None:
        axis = "h" if " ".join(aspect.lower().split()) == "hposition" else "v"
        return PositionProbe(axis=axis, labels=labels, input=ctx.locator(child, "r.0"))

    if not answer_candidates:
        raise MissingCandidatesError(
            f"Query[{aspect}] needs answer candidates; filter a vocabulary first"
        )
    subject = _the(phrase(child))
    if template is None:
        if aspect == "name":
            template = f"{subject} is a {answers.MASK}"
        else:
            template = f"the {aspect} of {subject} is {answers.MASK}"
    candidates = tuple(answer_candidates)
    return MatchTexts(
        region=Region(op="crop", inputs=(ctx.locator(child, "r.0"),)),
        template=template,
        texts=tuple(answers.fill_template(template, c) for c in candidates),
        answers=candidates,
        intents=tuple(AspectIs(aspect=aspect, value=c) for c in candidates),
    )


def _compile_choose(ctx: _Compilation, root: LayoutNode) -> Step:
    left, right = root.children
    candidates = root.args
    spatial = answers.classify_spatial_choice(candidates)
    if spatial is not None:
        return PairOrder(
            axis=spatial.axis,
            first_answer=candidates[spatial.first_index],
            second_answer=candidates[1 - spatial.first_index],
            left=ctx.locator(left, "r.0"),
            right=ctx.locator(right, "r.1"),
        )

    if format_node(left) == format_node(right):
        # Both children refer to the same thing; the choice is between two
        # descriptions of one region.
        locator = ctx.locator(left, "r.0")
        ctx.absorb(right, "r.1", locator.inner)
        template = f"{_the(phrase(left))} is {answers.MASK}"
        return MatchTexts(
            region=Region(op="crop", inputs=(locator,)),
            template=template,
            texts=tuple(answers.fill_template(template, c) for c in candidates),
            answers=candidates,
            intents=tuple(HasAttribute(attribute=c) for c in candidates),
        )

    left_ref = structured_ref(left)
    right_ref = structured_ref(right)
    template = f"{_the(ref_phrase(left_ref))} is {answers.MASK} {_the(ref_phrase(right_ref))}"
    return MatchTexts(
        region=Region(
            op="mask_keep",
            inputs=(ctx.locator(left, "r.0"), ctx.locator(right, "r.1")),
        ),
        template=template,
        texts=tuple(answers.fill_template(template, c) for c in candidates),
        answers=candidates,
        intents=tuple(
            RelationHolds(subject=left_ref, relation=c, target=right_ref)
            for c in candidates
        ),
    )


def _compile_compare(ctx: _Compilation, root: LayoutNode) -> Step:
    comparative = root.args[0]
    left, right = root.children
    if len(root.args) > 1:
        candidates = root.args[1:]
        if len(candidates) != 2:
            raise UnsupportedLayoutError(
                f"Compare takes two answer candidates, got {len(candidates)}"
            )
    else:
        candidates = (phrase(left), phrase(right))
    left_ref = structured_ref(left)
    right_ref = structured_ref(right)
    template = f"the {answers.MASK} is {comparative}"
    return MatchTexts(
        region=Region(
            op="mask_keep",
            inputs=(ctx.locator(left, "r.0"), ctx.locator(right, "r.1")),
        ),
        template=template,
        texts=tuple(answers.fill_template(template, c) for c in candidates),
        answers=tuple(candidates),
        # Candidate order follows child order, so candidate i asserts the
        # comparative of child i over the other child.
        intents=(
            RelationHolds(subject=left_ref, relation=comparative, target=right_ref),
            RelationHolds(subject=right_ref, relation=comparative, target=left_ref),
        ),
    )


def _assemble(ctx: _Compilation, layout: Layout, root_step: Step) -> ZeroShotPlan:
    from .plan import iter_steps

    obj_paths: dict[int, str] = {}
    for step_path, step in iter_steps(root_step):
        obj_paths.setdefault(id(step), step_path)

    node_to_step: dict[str, str] = {}
    for node_path, obj in ctx.node_to_obj.items():
        step_path = obj_paths.get(id(obj))
        if step_path is None:
            raise CompileError(
                f"internal: step for layout node {node_path} is not in the plan"
            )
        node_to_step[node_path] = step_path

    for _, node_path in _walk(layout.root, "r"):
        if node_path not in node_to_step:
            raise CompileError(
                f"internal: layout node {node_path} was never mapped to a step"
            )

    return ZeroShotPlan(
        root=root_step,
        layout_source=format_layout(layout),
        answer_module=layout.root.module,
        node_to_step=tuple(sorted(node_to_step.items())),
    )
