"""Score calibration at the service boundary.

The protocol wants every score in [0, 1].  Models that already emit
probabilities pass through untouched; raw confidences outside the range
are min-max scaled per response, and raw similarities are softmaxed
across the request's texts (callers only compare scores within one
call, so any monotone rescaling is fair).  A response of identical
out-of-range confidences carries no ranking information and maps to
all-1.0 rather than dividing by zero.
"""

from __future__ import annotations

import math
from typing import Sequence


def _clamp(score: float) -> float:
    # Guards against float drift at the ends of a min-max or softmax.
    return min(max(score, 0.0), 1.0)


def calibrate_confidences(raw: Sequence[float]) -> list[float]:
    """Detector/grounder scores: pass through if in range, else min-max."""
    scores = [float(s) for s in raw]
    if all(0.0 <= s <= 1.0 for s in scores):
        return scores
    low, high = min(scores), max(scores)
    if high == low:
        return [1.0] * len(scores)
    return [_clamp((s - low) / (high - low)) for s in scores]


def softmax(raw: Sequence[float]) -> list[float]:
    scores = [float(s) for s in raw]
    if not scores:
        return []
    peak = max(scores)
    exps = [math.exp(s - peak) for s in scores]
    total = sum(exps)
    return [_clamp(e / total) for e in exps]


def calibrate_similarities(raw: Sequence[float]) -> list[float]:
    """Matcher scores: pass through if in range, else softmax."""
    scores = [float(s) for s in raw]
    if all(0.0 <= s <= 1.0 for s in scores):
        return scores
    return softmax(scores)
