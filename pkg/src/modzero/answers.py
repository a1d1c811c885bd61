"""Answer-side text operations.

Everything here is plain string work: normalizing predicted and annotated
answers onto a shared form, turning questions into masked statement
templates, composing the statement pairs used to verify attributes and
relations, recognizing the spatial vocabularies that route execution to
geometric shortcuts, and scoring predictions against annotator answers.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass
from importlib import resources

_ARTICLES = ("a ", "an ", "the ")
_COPULAS = ("is", "are", "was", "were")

MASK = "[MASK]"
#: Template used when no conversion pattern matches the question.
FALLBACK_TEMPLATE = MASK


def normalize_answer(text: str) -> str:
    """Map an answer onto its comparison form.

    Lowercase, trim, drop terminal punctuation, collapse runs of
    whitespace, and strip one leading article.  Both predictions and
    annotator answers go through this before any equality check.
    """
    out = " ".join(text.lower().split())
    out = out.rstrip(".!?,")
    out = " ".join(out.split())
    for article in _ARTICLES:
        if out.startswith(article):
            out = out[len(article) :]
            break
    return out


@functools.lru_cache(maxsize=1)
def _load_patterns() -> tuple[tuple[re.Pattern[str], str], ...]:
    raw = resources.files("modzero.data").joinpath("question_patterns.json").read_text("utf-8")
    doc = json.loads(raw)
    return tuple((re.compile(p["match"]), p["template"]) for p in doc["patterns"])


def question_to_template(question: str) -> str:
    """Convert a question into a statement template containing ``[MASK]``.

    The converter is a fixed, ordered list of prefix patterns; the first
    full match wins and its capture groups are spliced into the statement.
    Questions no pattern covers fall back to the bare mask, which makes
    the downstream match degenerate to comparing answer words directly.
    """
    q = " ".join(question.lower().split()).rstrip("?. ")
    for pattern, template in _load_patterns():
        m = pattern.fullmatch(q)
        if m:
            return m.expand(template)
    return FALLBACK_TEMPLATE


def fill_template(template: str, value: str) -> str:
    return template.replace(MASK, value)


def attribute_pair(attribute: str) -> tuple[str, str]:
    """Positive/negative texts for checking an attribute on a region."""
    return (attribute, f"not {attribute}")


def relation_pair(subject: str, relation: str, target: str) -> tuple[str, str]:
    """Positive/negative statements for a relation between two phrases.

    A copula is inserted when the relation does not start with one
    ("holding" becomes "is holding"), and the negative form puts "not"
    right after the first copula token of the positive statement.
    """
    rel_tokens = relation.split()
    if rel_tokens and rel_tokens[0] in _COPULAS:
        positive_rel = rel_tokens
    else:
        positive_rel = ["is", *rel_tokens]
    positive = " ".join([subject, *positive_rel, target])
    negative = " ".join([subject, positive_rel[0], "not", *positive_rel[1:], target])
    return (positive, negative)


# The two spatial vocabularies with a geometric shortcut.  Within one
# axis the first set names the smaller-coordinate side (left / above).
HORIZONTAL_FIRST = frozenset({"to the left of"})
HORIZONTAL_SECOND = frozenset({"to the right of"})
VERTICAL_FIRST = frozenset({"above", "on top of"})
VERTICAL_SECOND = frozenset({"under", "below", "beneath", "underneath"})

#: Query arguments answered by box position instead of matching, with the
#: label pair (smaller-coordinate side first).
POSITION_QUERIES: dict[str, tuple[str, str]] = {
    "hposition": ("left", "right"),
    "vposition": ("top", "bottom"),
}


@dataclass(frozen=True)
class SpatialChoice:
    """A Choose whose two candidates form one spatial pair.

    ``axis`` is "h" or "v"; ``first_index`` says which candidate belongs
    to the smaller-coordinate set, so the executor can answer from center
    comparison alone.
    """

    axis: str
    first_index: int


def classify_spatial_choice(candidates: tuple[str, ...]) -> SpatialChoice | None:
    if len(candidates) != 2:
        return None
    a, b = (" ".join(c.lower().split()) for c in candidates)
    for axis, first, second in (
        ("h", HORIZONTAL_FIRST, HORIZONTAL_SECOND),
        ("v", VERTICAL_FIRST, VERTICAL_SECOND),
    ):
        if a in first and b in second:
            return SpatialChoice(axis=axis, first_index=0)
        if b in first and a in second:
            return SpatialChoice(axis=axis, first_index=1)
    return None


def position_query_labels(argument: str) -> tuple[str, str] | None:
    return POSITION_QUERIES.get(" ".join(argument.lower().split()))


class WrongAnnotatorCount(ValueError):
    """Soft accuracy is defined against exactly ten annotator answers."""


def soft_score(prediction: str, annotator_answers: list[str]) -> float:
    """Accuracy credit in [0, 1]: a third of a point per agreeing annotator,
    capped at three agreements."""
    if len(annotator_answers) != 10:
        raise WrongAnnotatorCount(
            f"expected 10 annotator answers, got {len(annotator_answers)}"
        )
    pred = normalize_answer(prediction)
    matches = sum(1 for a in annotator_answers if normalize_answer(a) == pred)
    return min(matches / 3.0, 1.0)
