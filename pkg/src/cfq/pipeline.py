"""End-to-end flows: generating questions, generating programs, and
batch label suggestions.

Generation walks challenge x category pairs in a fixed order (catalog
order, then the canonical category order), so a replay run against the
same fixtures and store produces bit-identical state. Each response is
archived in the store under its request fingerprint before parsing, rows
are anchored against the real source, and insertion deduplicates on
question identity, which makes reruns idempotent.

A model response that contains no table at all is recorded as a failed
entry rather than aborting the remaining pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import corpus, promptgen, qparser, taxonomy
from .bank import Store, make_question
from .gateway import Gateway
from .promptgen import CATEGORY_ORDER, PromptCategory
from .qparser import AnchorStatus
from .taxonomy import Annotation


@dataclass
class GenerationEntry:
    challenge_id: str
    category: PromptCategory
    fingerprint: str = ""
    cached: bool = False
    attempts: int = 0
    rows: int = 0
    malformed: int = 0
    inserted: int = 0
    duplicates: int = 0
    anchored: int = 0
    relocated: int = 0
    unanchored: int = 0
    error: Optional[str] = None


@dataclass
class GenerationReport:
    entries: list[GenerationEntry] = field(default_factory=list)

    @property
    def inserted(self) -> int:
        return sum(e.inserted for e in self.entries)

    @property
    def duplicates(self) -> int:
        return sum(e.duplicates for e in self.entries)

    @property
    def failures(self) -> int:
        return sum(1 for e in self.entries if e.error is not None)

    def summary_lines(self) -> list[str]:
        lines = []
        for entry in self.entries:
            head = f"{entry.challenge_id} {entry.category.value}:"
            if entry.error is not None:
                lines.append(f"{head} FAILED ({entry.error})")
                continue
            cached = " cached" if entry.cached else ""
            lines.append(
                f"{head} rows={entry.rows} malformed={entry.malformed} "
                f"inserted={entry.inserted} duplicates={entry.duplicates} "
                f"anchored={entry.anchored} relocated={entry.relocated} "
                f"unanchored={entry.unanchored}{cached}"
            )
        lines.append(
            f"total: inserted={self.inserted} duplicates={self.duplicates} "
            f"failures={self.failures}"
        )
        return lines


def _resolve_challenges(store: Store, challenge_ids: Optional[Iterable[str]]):
    if challenge_ids is None:
        return store.challenges()
    return [store.get_challenge(challenge_id) for challenge_id in challenge_ids]


def generate_questions(
    store: Store,
    gateway: Gateway,
    challenge_ids: Optional[Iterable[str]] = None,
    categories: Optional[Iterable[PromptCategory]] = None,
) -> GenerationReport:
    """Generate, parse, anchor, and store questions for the given pairs."""
    challenges = _resolve_challenges(store, challenge_ids)
    category_list = list(categories) if categories is not None else list(CATEGORY_ORDER)
    report = GenerationReport()
    for challenge in challenges:
        for category in category_list:
            entry = GenerationEntry(challenge_id=challenge.id, category=category)
            report.entries.append(entry)
            prompt = promptgen.build_question_prompt(category, challenge)
            response = gateway.complete(gateway.request_for(prompt))
            entry.fingerprint = response.fingerprint
            entry.cached = response.cached
            entry.attempts = response.attempts
            store.put_response(response.fingerprint, response.text)
            try:
                parsed = qparser.parse_tabular_response(response.text)
            except qparser.NoTableFound:
                entry.error = "NoTableFound"
                continue
            entry.rows = len(parsed.rows)
            entry.malformed = len(parsed.malformed)
            questions = []
            for row in parsed.rows:
                anchor = qparser.anchor_row(row, challenge)
                if anchor.status is AnchorStatus.ANCHORED:
                    entry.anchored += 1
                elif anchor.status is AnchorStatus.RELOCATED:
                    entry.relocated += 1
                else:
                    entry.unanchored += 1
                questions.append(
                    make_question(
                        challenge.id, category, row, anchor,
                        response.fingerprint, store.clock(),
                    )
                )
            put = store.put_questions(questions)
            entry.inserted = len(put.inserted)
            entry.duplicates = len(put.duplicates)
    return report


def _strip_code_fence(text: str) -> str:
    """Return the content of the first fenced code block, or the bare text."""
    lines = text.split("\n")
    start = None
    for i, line in enumerate(lines):
        if line.strip().startswith("```"):
            start = i
            break
    if start is None:
        return text.strip("\n")
    for j in range(start + 1, len(lines)):
        if lines[j].strip().startswith("```"):
            return "\n".join(lines[start + 1 : j])
    return "\n".join(lines[start + 1 :])


def generate_program(
    store: Store,
    gateway: Gateway,
    goal: str,
    title: str,
    category: corpus.FunctionalCategory,
) -> corpus.CodeChallenge:
    """Generate a novice-style program for a goal and add it as a challenge."""
    prompt = promptgen.build_program_prompt(goal)
    response = gateway.complete(gateway.request_for(prompt))
    store.put_response(response.fingerprint, response.text)
    source_text = _strip_code_fence(response.text)
    challenge = corpus.CodeChallenge(
        id=corpus.slugify(title),
        title=title,
        category=category,
        goal=goal,
        source=tuple(corpus.segment_source(source_text)),
        provenance=corpus.Provenance.LLM_GENERATED,
    )
    store.add_challenge(challenge)
    return challenge


def suggest_labels(
    store: Store,
    gateway: Gateway,
    challenge_ids: Optional[Iterable[str]] = None,
    refresh: bool = False,
) -> list[Annotation]:
    """Ask the model to label stored questions it has not labeled yet.

    With refresh=True, existing suggestions are superseded instead of
    skipped.
    """
    annotator = f"llm:{gateway.model}"
    results = []
    for challenge in _resolve_challenges(store, challenge_ids):
        for question in store.questions(challenge_id=challenge.id):
            if not refresh and store.annotations(question_id=question.id, annotator=annotator):
                continue
            results.append(taxonomy.suggest_label(store, question.id, challenge, gateway))
    return results
