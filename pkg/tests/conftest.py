"""Shared fixtures: a deterministic replay corpus for pipeline-level tests.

Each fixture response is a markdown table derived from the challenge's own
source: three well-formed anchored rows, one row with a wrong line number
whose code matches a unique source line (relocates), one row whose code
matches nothing (unanchored), and one malformed row. Question texts embed
the challenge id and category so identities never collide across pairs.
"""

from pathlib import Path

import pytest

from cfq import corpus, promptgen
from cfq.gateway import CompletionRequest, record_fixture
from cfq.qparser import normalize_code

FIXTURE_MODEL = "gpt-4"
FIXTURE_TEMPERATURE = 0.0
FIXTURE_MAX_OUTPUT = 2048

# per-response row profile produced by build_fixture_text
GOOD_ROWS = 3
RELOCATED_ROWS = 1
UNANCHORED_ROWS = 1
MALFORMED_ROWS = 1
PARSED_ROWS = GOOD_ROWS + RELOCATED_ROWS + UNANCHORED_ROWS


def _escape_cell(text: str) -> str:
    return text.replace("|", "\\|")


def _unique_line(challenge):
    counts = {}
    for line in challenge.source:
        counts[normalize_code(line.text)] = counts.get(normalize_code(line.text), 0) + 1
    for line in challenge.source:
        if line.text.strip() and counts[normalize_code(line.text)] == 1:
            return line
    raise AssertionError(f"challenge {challenge.id} has no unique line")


def build_fixture_text(challenge, category) -> str:
    nonblank = [line for line in challenge.source if line.text.strip()]
    good = nonblank[:GOOD_ROWS]
    assert len(good) == GOOD_ROWS, f"{challenge.id} too short for fixtures"
    unique = _unique_line(challenge)
    wrong_number = 1 if unique.number != 1 else len(challenge.source)

    rows = ["| LineNumber | LineCode | Question |", "| --- | --- | --- |"]
    for line in good:
        rows.append(
            f"| {line.number} | {_escape_cell(line.text)} | "
            f"What if line {line.number} of {challenge.id} changed? ({category.value}) |"
        )
    rows.append(
        f"| {wrong_number} | {_escape_cell(unique.text)} | "
        f"What if this statement moved in {challenge.id}? ({category.value} relocated) |"
    )
    rows.append(
        f"| 2 | int zz_unseen = 42; | "
        f"What if a hidden counter existed in {challenge.id}? ({category.value} unanchored) |"
    )
    rows.append(f"| x | {_escape_cell(good[0].text)} | This row is malformed on purpose |")
    return (
        "Here are counterfactual questions for the program.\n\n"
        + "\n".join(rows)
        + "\n\nLet me know if you need more.\n"
    )


def write_fixture_corpus(
    directory: Path,
    challenges=None,
    categories=None,
    model: str = FIXTURE_MODEL,
    temperature: float = FIXTURE_TEMPERATURE,
    max_output: int = FIXTURE_MAX_OUTPUT,
) -> int:
    """Write one replay fixture per challenge x category pair; returns count."""
    if challenges is None:
        challenges = corpus.bundled_catalog()
    if categories is None:
        categories = promptgen.CATEGORY_ORDER
    written = 0
    for challenge in challenges:
        for category in categories:
            prompt = promptgen.build_question_prompt(category, challenge)
            request = CompletionRequest(
                body=prompt.body, model=model, temperature=temperature, max_output=max_output
            )
            record_fixture(directory, request, build_fixture_text(challenge, category))
            written += 1
    return written


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    directory = tmp_path_factory.mktemp("replay-fixtures")
    write_fixture_corpus(directory)
    return directory
