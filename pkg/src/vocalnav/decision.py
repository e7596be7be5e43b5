"""Action selection, confidence scoring, and selection-success aggregation.

The confidence score is the reciprocal of the divergence between the model's
label distribution and a point mass on the reference label, which reduces to
1 / (-ln p[reference]); the probability is clamped away from 0 and 1 so the
score stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .backends import LABELS
from .prompting import TokenDistribution

_CLAMP_LO = 1e-9
_CLAMP_HI = 1.0 - 1e-9


@dataclass(frozen=True)
class Decision:
    clip_id: str
    chosen: str
    distribution: TokenDistribution
    confidence: float  # self-confidence: score of the chosen label

    def __post_init__(self):
        if self.chosen != select_action(self.distribution):
            raise ValueError("chosen label must be the distribution argmax")


@dataclass(frozen=True)
class EvaluationRecord:
    clip_id: str
    category: str  # "LU" | "VU" | other corpus tags
    truth: str
    decision: Decision

    @property
    def correct(self) -> bool:
        return self.decision.chosen == self.truth


@dataclass(frozen=True)
class CategoryScore:
    count: int
    pssr: float
    mean_confidence: float


@dataclass(frozen=True)
class PssrSummary:
    overall: CategoryScore
    by_category: dict[str, CategoryScore]


def select_action(dist: TokenDistribution) -> str:
    """Argmax label; exact ties go to the lexicographically earliest."""
    best = max(dist.probs.values())
    for label in LABELS:
        if dist.probs[label] == best:
            return label
    raise AssertionError("distribution has no maximum")


def confidence_score(dist: TokenDistribution, true_label: str) -> float:
    """Reciprocal divergence from a point mass on ``true_label``."""
    if true_label not in LABELS:
        raise ValueError(f"unknown label {true_label!r}")
    p = min(max(dist.probs[true_label], _CLAMP_LO), _CLAMP_HI)
    return 1.0 / (-math.log(p))


def decide(clip_id: str, dist: TokenDistribution) -> Decision:
    chosen = select_action(dist)
    return Decision(
        clip_id=clip_id,
        chosen=chosen,
        distribution=dist,
        confidence=confidence_score(dist, chosen),
    )


def pssr(records: list[EvaluationRecord]) -> PssrSummary:
    """Fraction of records whose chosen label matches the annotation.

    Reported overall and per category, alongside the mean confidence score
    measured against the annotation.
    """
    if not records:
        raise ValueError("cannot aggregate an empty record list")

    def score(group: list[EvaluationRecord]) -> CategoryScore:
        correct = sum(1 for r in group if r.correct)
        mean_cs = sum(
            confidence_score(r.decision.distribution, r.truth) for r in group
        ) / len(group)
        return CategoryScore(
            count=len(group), pssr=correct / len(group), mean_confidence=mean_cs
        )

    categories = sorted({r.category for r in records})
    return PssrSummary(
        overall=score(records),
        by_category={
            cat: score([r for r in records if r.category == cat]) for cat in categories
        },
    )
