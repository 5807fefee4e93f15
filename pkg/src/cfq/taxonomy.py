"""Label classes and themes for categorizing generated questions, plus the
annotation records that bind them to questions.

The four label classes and six built-in themes are fixed; custom themes can
be registered at runtime. Label definitions are embedded verbatim because
they are displayed in the review UI and inside label-suggestion prompts.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from hashlib import sha256
from typing import TYPE_CHECKING, Callable, Optional

from .errors import CfqError

if TYPE_CHECKING:
    from .bank import Store
    from .corpus import CodeChallenge
    from .gateway import Gateway


class LabelClass(Enum):
    S = "S"
    PL = "PL"
    G = "G"
    M = "M"

    @property
    def display(self) -> str:
        return _LABEL_DISPLAY[self]

    @property
    def definition(self) -> str:
        return LABEL_DEFINITIONS[self]


_LABEL_DISPLAY = {
    LabelClass.S: "Syntax",
    LabelClass.PL: "Programming Logic",
    LabelClass.G: "Goal-oriented",
    LabelClass.M: "Miscellaneous",
}

LABEL_DEFINITIONS = {
    LabelClass.S: (
        "The ability of code to compile successfully depends on whether it adheres to the "
        "syntax rules of the programming language. The concept of syntax in a programming "
        "language includes the proper use of brackets, punctuation like semicolons or colons, "
        "variable declaration, and so on."
    ),
    LabelClass.PL: (
        "Logical comprehension and overall understanding of a piece of code or a program. "
        "The emphasis is not on specific syntax or language constructs, but rather on "
        "understanding how the pieces of the code fit together to create a functioning "
        "program. This could involve understanding the purpose of specific variables or "
        "functions, how control flow structures like loops or conditionals are used, or the "
        "logic behind a specific algorithm or data structure used in the code. In some cases, "
        "these questions could involve modifications or adaptations of existing code to meet "
        "new requirements or goals."
    ),
    LabelClass.G: (
        "Achieving a desired result regardless of the specifics of the code. This category is "
        "more focused on the problem-solving aspect of programming, where the specific "
        "language or implementation details are secondary to the overall objective."
    ),
    LabelClass.M: (
        "A catch-all category for questions that don't neatly fit into the other categories. "
        "This could involve questions about programming best practices, questions about "
        "specific development tools or environments, version control, debugging strategies, "
        "or questions about the broader principles and philosophies of software development."
    ),
}

LABEL_ORDER = (LabelClass.S, LabelClass.PL, LabelClass.G, LabelClass.M)


class Decision(Enum):
    PENDING = "Pending"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class Theme:
    id: str
    display_name: str
    description: str
    builtin: bool = False


BUILTIN_THEMES = (
    Theme("LU-Syntax", "Language Understanding - Syntax",
          "Grammar and punctuation rules of the programming language itself.", builtin=True),
    Theme("LU-Semantic", "Language Understanding - Semantic",
          "Meaning and purpose of specific language keywords or constructs.", builtin=True),
    Theme("LU-Other", "Language Understanding - Other",
          "Core concepts, conventions, and idiosyncrasies of the language beyond syntax and semantics.",
          builtin=True),
    Theme("LibraryFunction", "Library/Function Understanding",
          "How a specific library, module, or function works.", builtin=True),
    Theme("ExternalBehaviour", "External Behaviour",
          "How the program interacts with the outside world: inputs, outputs, and visible effects.",
          builtin=True),
    Theme("RefactoringInternal", "Refactoring, Internal Behaviour",
          "How the internal logic could be changed or restructured without changing what the program does.",
          builtin=True),
)

BUILTIN_THEME_IDS = tuple(t.id for t in BUILTIN_THEMES)


@dataclass(frozen=True)
class Annotation:
    """One labeling event by one annotator for one question.

    annotator is a free-form human id, or "llm:<model>" for model
    suggestions. At most one annotation per (question_id, annotator) is
    current; newer timestamps supersede, with the lexicographically larger
    annotation id breaking exact ties.
    """

    id: str
    question_id: str
    annotator: str
    label: LabelClass
    theme: Optional[str]
    decision: Decision
    timestamp: datetime


class TaxonomyError(CfqError):
    pass


class UnknownQuestion(TaxonomyError):
    def __init__(self, question_id):
        super().__init__(f"unknown question: {question_id}")
        self.question_id = question_id


class UnknownTheme(TaxonomyError):
    def __init__(self, theme_id):
        super().__init__(f"unknown theme: {theme_id}")
        self.theme_id = theme_id


class DuplicateTheme(TaxonomyError):
    def __init__(self, theme_id):
        super().__init__(f"theme already exists: {theme_id}")
        self.theme_id = theme_id


class ReservedId(TaxonomyError):
    def __init__(self, theme_id):
        super().__init__(f"theme id is reserved for a built-in: {theme_id}")
        self.theme_id = theme_id


class UnparsableLabel(TaxonomyError):
    def __init__(self, raw: str):
        super().__init__(f"no label token found in response: {raw!r}")
        self.raw = raw


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def make_annotation(question_id: str, annotator: str, label: LabelClass,
                    theme: Optional[str], decision: Decision,
                    timestamp: datetime) -> Annotation:
    digest = sha256("\x1f".join([
        question_id, annotator, label.value, theme or "", decision.value,
        timestamp.isoformat(),
    ]).encode("utf-8")).hexdigest()[:16]
    return Annotation(id=digest, question_id=question_id, annotator=annotator,
                      label=label, theme=theme, decision=decision, timestamp=timestamp)


def annotate(store: "Store", question_id: str, annotator: str, label: LabelClass,
             theme: Optional[str] = None, decision: Decision = Decision.PENDING,
             now: Optional[Callable[[], datetime]] = None) -> Annotation:
    """Store (or supersede) the annotation for (question_id, annotator).

    Returns whichever annotation is current after the write, which is the
    new one unless an existing record has a newer timestamp.
    """
    store.get_question(question_id)  # raises UnknownQuestion
    if theme is not None and store.get_theme(theme) is None:
        raise UnknownTheme(theme)
    if not annotator:
        raise ValueError("annotator must be non-empty")
    timestamp = (now or store.clock)()
    annotation = make_annotation(question_id, annotator, label, theme, decision, timestamp)
    return store.put_annotation(annotation)


def extract_label(text: str) -> LabelClass:
    """First whitespace-delimited token that uppercases to a label class."""
    for token in text.split():
        upper = token.upper()
        if upper in LabelClass.__members__:
            return LabelClass(upper)
    raise UnparsableLabel(text)


def suggest_label(store: "Store", question_id: str, challenge: "CodeChallenge",
                  gateway: "Gateway",
                  now: Optional[Callable[[], datetime]] = None) -> Annotation:
    """Ask the configured model to classify a question; store the suggestion
    as a Pending annotation under the "llm:<model>" annotator."""
    from .promptgen import build_label_suggestion_prompt

    question = store.get_question(question_id)
    prompt = build_label_suggestion_prompt(question.row.question, challenge)
    response = gateway.complete(gateway.request_for(prompt))
    label = extract_label(response.text)
    return annotate(store, question_id, f"llm:{gateway.model}", label,
                    theme=None, decision=Decision.PENDING, now=now)


def add_theme(store: "Store", theme_id: str, display_name: str, description: str) -> Theme:
    """Register a custom theme. Built-in ids are reserved."""
    if not theme_id:
        raise ValueError("theme id must be non-empty")
    if theme_id in BUILTIN_THEME_IDS:
        raise ReservedId(theme_id)
    if store.get_theme(theme_id) is not None:
        raise DuplicateTheme(theme_id)
    theme = Theme(id=theme_id, display_name=display_name, description=description, builtin=False)
    store.put_theme(theme)
    return theme
