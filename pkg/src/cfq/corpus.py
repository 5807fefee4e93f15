"""Catalog of code challenges: small programs with goal descriptions,
functional categories, and 1-based line segmentation.

The catalog file is a single YAML document (see data/challenges.yaml for
the bundled one). Source blocks are YAML literal scalars and are preserved
byte for byte apart from the single trailing newline the block syntax adds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

from .errors import CfqError


class FunctionalCategory(Enum):
    OBJECT_ARITHMETIC = "ObjectArithmetic"
    REPEATED_CALCULATION = "RepeatedCalculation"
    COMPARISONS_RULES = "ComparisonsRules"

    @property
    def display(self) -> str:
        return _CATEGORY_DISPLAY[self]


_CATEGORY_DISPLAY = {
    FunctionalCategory.OBJECT_ARITHMETIC: "Object and Arithmetic",
    FunctionalCategory.REPEATED_CALCULATION: "Repeated Calculation",
    FunctionalCategory.COMPARISONS_RULES: "Comparisons and Rules",
}


class Provenance(Enum):
    BUNDLED = "Bundled"
    LLM_GENERATED = "LlmGenerated"
    USER_IMPORTED = "UserImported"


_SLUG_RE = re.compile(r"^[a-z0-9-]+$")


@dataclass(frozen=True)
class SourceLine:
    """One numbered line of a challenge program, without trailing newline."""

    number: int
    text: str

    def __post_init__(self):
        if "\n" in self.text:
            raise ValueError("source line text may not contain newlines")
        if self.number < 1:
            raise ValueError("line numbers are 1-based")


@dataclass(frozen=True)
class CodeChallenge:
    id: str
    title: str
    category: FunctionalCategory
    goal: str
    source: tuple[SourceLine, ...]
    provenance: Provenance = Provenance.BUNDLED

    def __post_init__(self):
        if not _SLUG_RE.match(self.id):
            raise ValueError(f"invalid challenge id {self.id!r}")
        if not self.source:
            raise ValueError("challenge source may not be empty")
        for i, line in enumerate(self.source, start=1):
            if line.number != i:
                raise ValueError("source line numbers must be exactly 1..n")

    @property
    def source_text(self) -> str:
        return "\n".join(line.text for line in self.source)


Catalog = list[CodeChallenge]


class CatalogError(CfqError):
    pass


class FileMissing(CatalogError):
    def __init__(self, path):
        super().__init__(f"catalog file not found: {path}")
        self.path = path


class ParseError(CatalogError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"catalog parse error at line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(CatalogError):
    def __init__(self, challenge_id: str):
        super().__init__(f"duplicate challenge id: {challenge_id}")
        self.challenge_id = challenge_id


class EmptySource(CatalogError):
    def __init__(self):
        super().__init__("program source is empty")


class UnknownChallenge(CatalogError):
    def __init__(self, challenge_id: str):
        super().__init__(f"unknown challenge: {challenge_id}")
        self.challenge_id = challenge_id


def slugify(title: str) -> str:
    """Derive a catalog slug from a human title (lowercase, hyphenated)."""
    slug = re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")
    if not slug:
        raise ValueError(f"cannot derive a slug from {title!r}")
    return slug


def segment_source(raw: str) -> list[SourceLine]:
    """Split raw program text into numbered lines.

    A single trailing newline is stripped first so it does not produce an
    empty final line; interior whitespace and blank lines are preserved
    exactly.
    """
    if raw.endswith("\n"):
        raw = raw[:-1]
    if raw == "":
        raise EmptySource()
    return [SourceLine(number=i, text=text) for i, text in enumerate(raw.split("\n"), start=1)]


def get_challenge(catalog: Catalog, challenge_id: str) -> CodeChallenge:
    for challenge in catalog:
        if challenge.id == challenge_id:
            return challenge
    raise UnknownChallenge(challenge_id)


def load_catalog(path) -> Catalog:
    """Load and validate a catalog file. See the bundled file for the schema."""
    path = Path(path)
    if not path.exists():
        raise FileMissing(path)
    return parse_catalog(path.read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def _bundled_catalog() -> tuple[CodeChallenge, ...]:
    text = resources.files("cfq").joinpath("data/challenges.yaml").read_text(encoding="utf-8")
    return tuple(parse_catalog(text))


def bundled_catalog() -> Catalog:
    """The catalog shipped with the package (13 challenges, 3 categories)."""
    # challenges are frozen; only the list is fresh per call
    return list(_bundled_catalog())


# Catalog files are parsed via yaml.compose rather than yaml.safe_load so
# that validation failures can point at an actual line number.

def parse_catalog(text: str) -> Catalog:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise ParseError(line, str(getattr(exc, "problem", None) or exc))
    if root is None:
        raise ParseError(0, "catalog file is empty")
    challenges_node = _mapping_get(root, "challenges")
    if challenges_node is None:
        raise ParseError(root.start_mark.line + 1, "missing top-level 'challenges' list")
    if not isinstance(challenges_node, yaml.SequenceNode):
        raise ParseError(challenges_node.start_mark.line + 1, "'challenges' must be a list")

    catalog: Catalog = []
    seen: set[str] = set()
    for item in challenges_node.value:
        challenge = _parse_challenge(item)
        if challenge.id in seen:
            raise DuplicateId(challenge.id)
        seen.add(challenge.id)
        catalog.append(challenge)
    return catalog


def _mapping_get(node, key):
    if not isinstance(node, yaml.MappingNode):
        return None
    for key_node, value_node in node.value:
        if key_node.value == key:
            return value_node
    return None


def _scalar(node, name) -> str:
    if not isinstance(node, yaml.ScalarNode):
        raise ParseError(node.start_mark.line + 1, f"'{name}' must be a string")
    return str(node.value)


def _parse_challenge(node) -> CodeChallenge:
    if not isinstance(node, yaml.MappingNode):
        raise ParseError(node.start_mark.line + 1, "challenge entry must be a mapping")
    at = node.start_mark.line + 1
    fields = {}
    for name in ("id", "title", "category", "goal", "source"):
        value_node = _mapping_get(node, name)
        if value_node is None:
            raise ParseError(at, f"challenge is missing required field '{name}'")
        fields[name] = _scalar(value_node, name)

    if not _SLUG_RE.match(fields["id"]):
        raise ParseError(at, f"invalid challenge id {fields['id']!r} (lowercase letters, digits, hyphens)")
    try:
        category = FunctionalCategory(fields["category"])
    except ValueError:
        valid = ", ".join(c.value for c in FunctionalCategory)
        raise ParseError(at, f"unknown category {fields['category']!r} (expected one of: {valid})")

    provenance = Provenance.BUNDLED
    provenance_node = _mapping_get(node, "provenance")
    if provenance_node is not None:
        try:
            provenance = Provenance(_scalar(provenance_node, "provenance"))
        except ValueError:
            raise ParseError(provenance_node.start_mark.line + 1,
                             f"unknown provenance {provenance_node.value!r}")

    try:
        source = tuple(segment_source(fields["source"]))
    except EmptySource:
        raise ParseError(at, f"challenge {fields['id']!r} has an empty source block")

    return CodeChallenge(
        id=fields["id"],
        title=fields["title"],
        category=category,
        goal=fields["goal"],
        source=source,
        provenance=provenance,
    )
