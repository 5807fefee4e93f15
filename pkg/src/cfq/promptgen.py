"""Prompt construction.

Three prompt families, all deterministic:

* five question-generation prompts, one per category, sharing a fixed
  prefix and differing only in a category keyword phrase;
* a program-generation prompt that asks for a novice-style Java program
  from a goal description;
* a label-suggestion prompt that presents a program plus one question and
  asks for a single label token.

The question prompts are covered by byte-for-byte golden tests; do not
reword them casually.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .corpus import CodeChallenge, EmptySource
from .errors import CfqError
from .taxonomy import LABEL_DEFINITIONS, LabelClass

QUESTION_PROMPT_PREFIX = (
    "In tabular file format with the following columns (LineNumber, LineCode, Question) "
    "generate counterfactual questions to make students critically think about the program from"
)


class PromptCategory(Enum):
    CRITICAL_THINKING = "CriticalThinkingPerspective"
    SYNTAX_ANALYSIS = "SyntaxAnalysis"
    GOAL_ORIENTED = "GoalOrientedAnalysis"
    PROBLEM_SOLUTION = "ProblemSolutionMapping"
    INTRINSIC_ANALYSIS = "IntrinsicProgramAnalysis"

    @property
    def display(self) -> str:
        return _CATEGORY_INFO[self][0]

    @property
    def keywords(self) -> str:
        return _CATEGORY_INFO[self][1]


# The keyword phrase is concatenated after the shared prefix with a single
# space and a closing period, even where the result reads awkwardly; the
# construction is deliberately literal.
_CATEGORY_INFO = {
    PromptCategory.CRITICAL_THINKING: (
        "Critical Thinking and Perspective Taking",
        "different perspectives or aspects",
    ),
    PromptCategory.SYNTAX_ANALYSIS: (
        "Syntax Analysis",
        "syntactic perspectives or aspects",
    ),
    PromptCategory.GOAL_ORIENTED: (
        "Goal-Oriented Analysis",
        "such that final goal of the program is changed",
    ),
    PromptCategory.PROBLEM_SOLUTION: (
        "Problem-Solution Mapping",
        "could ask that have the same program as the solution",
    ),
    PromptCategory.INTRINSIC_ANALYSIS: (
        "Intrinsic Program Analysis",
        "based on the program and the answer to those questions lie within the program",
    ),
}

# Ordering used wherever categories act as a hierarchy (reports, documents).
CATEGORY_ORDER = (
    PromptCategory.CRITICAL_THINKING,
    PromptCategory.SYNTAX_ANALYSIS,
    PromptCategory.GOAL_ORIENTED,
    PromptCategory.PROBLEM_SOLUTION,
    PromptCategory.INTRINSIC_ANALYSIS,
)

NOVICE_PHRASE = "as a novice programmer would"


@dataclass(frozen=True)
class PromptText:
    body: str
    category: Optional[PromptCategory] = None
    challenge_id: Optional[str] = None

    def __post_init__(self):
        if not self.body:
            raise ValueError("prompt body must be non-empty")


class PromptError(CfqError):
    pass


class EmptyGoal(PromptError):
    def __init__(self):
        super().__init__("goal description is empty")


def _fenced(source_text: str) -> str:
    return f"```java\n{source_text}\n```"


def build_question_prompt(category: PromptCategory, challenge: CodeChallenge) -> PromptText:
    """Question-generation prompt: shared prefix, category keywords, then the
    program fenced verbatim after one blank line."""
    if not challenge.source:
        raise EmptySource()
    body = (
        f"{QUESTION_PROMPT_PREFIX} {category.keywords}."
        f"\n\n{_fenced(challenge.source_text)}"
    )
    return PromptText(body=body, category=category, challenge_id=challenge.id)


def build_program_prompt(goal: str) -> PromptText:
    """Program-generation prompt embedding the goal text verbatim."""
    if goal == "":
        raise EmptyGoal()
    body = (
        f"Write a Java program {NOVICE_PHRASE} write it. "
        "The program should fulfill the following goal:\n\n"
        f"{goal}\n\n"
        "Reply with only the Java source code."
    )
    return PromptText(body=body)


def build_label_suggestion_prompt(question_text: str, challenge: CodeChallenge) -> PromptText:
    """Label-suggestion prompt: program, question, the four label class
    definitions, and an instruction to answer with one token."""
    definitions = "\n\n".join(
        f"{label.value} ({label.display}): {LABEL_DEFINITIONS[label]}"
        for label in (LabelClass.S, LabelClass.PL, LabelClass.G, LabelClass.M)
    )
    body = (
        "A student question was asked about the following Java program.\n\n"
        f"{_fenced(challenge.source_text)}\n\n"
        f"Question: {question_text}\n\n"
        "Classify the question using exactly one of these label classes:\n\n"
        f"{definitions}\n\n"
        "Answer with exactly one token: S, PL, G, or M."
    )
    return PromptText(body=body, challenge_id=challenge.id)
