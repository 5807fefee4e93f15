"""Agreement statistics and dataset composition reports.

Cohen's kappa and percent agreement are computed over a confusion matrix
between two annotators, restricted to questions both have labeled. All
ratios are evaluated in exact rational arithmetic: kappa is undefined
(None, never NaN) exactly when the expected agreement equals one, which
is decided by an integer comparison rather than a floating-point one, and
a perfectly diagonal matrix yields exactly 1.0.

Composition reports return fractions.Fraction proportions that sum to
exactly 1, with zero-count entries retained for every known value so
consumers can render complete tables.

The cross-tabulation counts questions by prompt category against the
label assigned by the question's designated human annotation: among the
current non-model annotations (annotator not starting with "llm:") the
one whose annotator sorts lexicographically first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, TypeVar

from .errors import CfqError
from .promptgen import CATEGORY_ORDER, PromptCategory
from .taxonomy import LABEL_ORDER, Annotation, LabelClass

K = TypeVar("K")

LLM_ANNOTATOR_PREFIX = "llm:"


class AnalyticsError(CfqError):
    pass


class EmptyMatrix(AnalyticsError):
    def __init__(self):
        super().__init__("confusion matrix has no observations")


class EmptyDataset(AnalyticsError):
    def __init__(self):
        super().__init__("no observations to report proportions over")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square matrix of paired label counts; rows are the first annotator."""

    classes: tuple
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.classes)
        if len(self.counts) != n or any(len(row) != n for row in self.counts):
            raise ValueError("counts must be square and match classes")
        if any(cell < 0 for row in self.counts for cell in row):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[K, K]], classes: Sequence[K]) -> "ConfusionMatrix":
        index = {cls_: i for i, cls_ in enumerate(classes)}
        grid = [[0] * len(classes) for _ in classes]
        for a, b in pairs:
            grid[index[a]][index[b]] += 1
        return cls(classes=tuple(classes), counts=tuple(tuple(row) for row in grid))

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.classes)))

    def row_marginals(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    def col_marginals(self) -> tuple[int, ...]:
        return tuple(sum(row[j] for row in self.counts) for j in range(len(self.classes)))


def is_human(annotator: str) -> bool:
    return not annotator.startswith(LLM_ANNOTATOR_PREFIX)


def confusion_matrix(
    store,
    annotator_a: str,
    annotator_b: str,
    challenge_id: Optional[str] = None,
) -> ConfusionMatrix:
    """Pair the two annotators' current labels over shared questions."""
    by_question_a = {a.question_id: a for a in store.annotations(annotator=annotator_a)}
    pairs = []
    for b in store.annotations(annotator=annotator_b):
        a = by_question_a.get(b.question_id)
        if a is None:
            continue
        if challenge_id is not None:
            if store.get_question(b.question_id).challenge_id != challenge_id:
                continue
        pairs.append((a.label, b.label))
    return ConfusionMatrix.from_pairs(pairs, LABEL_ORDER)


def percent_agreement(matrix: ConfusionMatrix) -> float:
    total = matrix.total
    if total == 0:
        raise EmptyMatrix()
    return float(Fraction(matrix.trace, total))


def cohen_kappa(matrix: ConfusionMatrix) -> Optional[float]:
    """Cohen's kappa, or None when chance agreement is exactly one.

    The degenerate case (both annotators constant on the same class) is
    detected with integer arithmetic: expected agreement equals one iff
    sum(row_i * col_i) == total**2.
    """
    total = matrix.total
    if total == 0:
        raise EmptyMatrix()
    rows = matrix.row_marginals()
    cols = matrix.col_marginals()
    chance_weight = sum(r * c for r, c in zip(rows, cols))
    if chance_weight == total * total:
        return None
    p_o = Fraction(matrix.trace, total)
    p_e = Fraction(chance_weight, total * total)
    return float((p_o - p_e) / (1 - p_e))


@dataclass(frozen=True)
class AgreementReport:
    annotator_a: str
    annotator_b: str
    matrix: ConfusionMatrix
    pairs: int
    percent_agreement: float
    kappa: Optional[float]


def agreement_report(
    store,
    annotator_a: str,
    annotator_b: str,
    challenge_id: Optional[str] = None,
) -> AgreementReport:
    matrix = confusion_matrix(store, annotator_a, annotator_b, challenge_id)
    return AgreementReport(
        annotator_a=annotator_a,
        annotator_b=annotator_b,
        matrix=matrix,
        pairs=matrix.total,
        percent_agreement=percent_agreement(matrix),
        kappa=cohen_kappa(matrix),
    )


def proportion_report(counts: Mapping[K, int]) -> dict[K, Fraction]:
    """Exact rational proportions; the values always sum to exactly 1."""
    total = sum(counts.values())
    if total == 0:
        raise EmptyDataset()
    return {key: Fraction(count, total) for key, count in counts.items()}


def _count(items: Iterable[K], universe: Sequence[K]) -> dict[K, int]:
    counts = {key: 0 for key in universe}
    for item in items:
        if item in counts:
            counts[item] += 1
        else:
            counts[item] = 1
    return counts


def label_proportions(
    store,
    challenge_id: Optional[str] = None,
    annotator: Optional[str] = None,
) -> dict[LabelClass, Fraction]:
    """Proportions of label classes among current annotations."""
    labels = [
        a.label
        for a in store.annotations(annotator=annotator)
        if challenge_id is None or store.get_question(a.question_id).challenge_id == challenge_id
    ]
    return proportion_report(_count(labels, LABEL_ORDER))


def theme_proportions(store, challenge_id: Optional[str] = None) -> dict[str, Fraction]:
    """Proportions of themes among current annotations that carry one."""
    themes = [
        a.theme
        for a in store.annotations()
        if a.theme is not None
        and (challenge_id is None or store.get_question(a.question_id).challenge_id == challenge_id)
    ]
    universe = [theme.id for theme in store.themes()]
    return proportion_report(_count(themes, universe))


def category_proportions(store, challenge_id: Optional[str] = None) -> dict[PromptCategory, Fraction]:
    """Proportions of prompt categories among stored questions."""
    categories = [q.category for q in store.questions(challenge_id=challenge_id)]
    return proportion_report(_count(categories, CATEGORY_ORDER))


def designated_human_annotation(annotations: Sequence[Annotation]) -> Optional[Annotation]:
    """The current annotation by the lexicographically first human annotator."""
    humans = [a for a in annotations if is_human(a.annotator)]
    if not humans:
        return None
    return min(humans, key=lambda a: a.annotator)


@dataclass(frozen=True)
class CrosstabReport:
    categories: tuple[PromptCategory, ...]
    labels: tuple[LabelClass, ...]
    counts: tuple[tuple[int, ...], ...]  # categories x labels

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def crosstab(store, challenge_id: Optional[str] = None) -> CrosstabReport:
    """Prompt category by label class, one designated human label per question."""
    row_index = {category: i for i, category in enumerate(CATEGORY_ORDER)}
    col_index = {label: j for j, label in enumerate(LABEL_ORDER)}
    grid = [[0] * len(LABEL_ORDER) for _ in CATEGORY_ORDER]
    for question in store.questions(challenge_id=challenge_id):
        designated = designated_human_annotation(store.annotations(question_id=question.id))
        if designated is None:
            continue
        grid[row_index[question.category]][col_index[designated.label]] += 1
    return CrosstabReport(
        categories=CATEGORY_ORDER,
        labels=LABEL_ORDER,
        counts=tuple(tuple(row) for row in grid),
    )
