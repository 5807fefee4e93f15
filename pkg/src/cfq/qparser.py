"""Parsing of tabular model responses and anchoring of rows to source lines.

The generation prompts ask for three columns (LineNumber, LineCode,
Question). Models deliver that as a markdown pipe table, TSV, or CSV,
usually wrapped in prose. The parser detects the format (markdown wins
over TSV, TSV over CSV), skips the header and any markdown separator row,
and classifies every remaining delimiter-bearing line as either a parsed
row or a malformed entry; lines without the active delimiter are ignored
as prose. It never raises on arbitrary text except for NoTableFound when
no data line is present at all.

Anchoring validates a model-reported (line number, line code) pair against
the real program. Matching is whitespace-insensitive (trim plus collapsing
runs of whitespace); a wrong line number with exactly one matching source
line relocates, and any ambiguity is reported as unanchored rather than
guessed.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .corpus import CodeChallenge
from .errors import CfqError


class TableFormat(Enum):
    MARKDOWN_PIPE = "MarkdownPipe"
    TSV = "Tsv"
    CSV = "Csv"


@dataclass(frozen=True)
class ParsedRow:
    line_number: int
    line_code: str
    question: str

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty after trimming")


class AnchorStatus(Enum):
    ANCHORED = "anchored"
    RELOCATED = "relocated"
    UNANCHORED = "unanchored"


@dataclass(frozen=True)
class AnchorResult:
    status: AnchorStatus
    line: Optional[int] = None

    def __post_init__(self):
        has_line = self.line is not None
        if (self.status is AnchorStatus.UNANCHORED) == has_line:
            raise ValueError("anchored/relocated results carry a line, unanchored does not")


ANCHORED = AnchorStatus.ANCHORED
RELOCATED = AnchorStatus.RELOCATED
UNANCHORED = AnchorStatus.UNANCHORED


@dataclass
class ParseReport:
    rows: list[ParsedRow] = field(default_factory=list)
    malformed: list[tuple[str, str]] = field(default_factory=list)
    format_detected: TableFormat = TableFormat.MARKDOWN_PIPE
    skipped: int = 0  # header and separator rows
    ignored: int = 0  # prose lines without the active delimiter


class NoTableFound(CfqError):
    def __init__(self):
        super().__init__("no tabular data found in response")


_HEADER_CELLS = ("linenumber", "linecode", "question")
# Markdown separator rows consist solely of pipes, dashes, colons, spaces.
_SEPARATOR_RE = re.compile(r"^[|\-:\s]+$")
_ESCAPED_PIPE = "\x00"


def _is_header(cells: list[str]) -> bool:
    normalized = tuple(c.strip().lower().replace(" ", "").replace("_", "") for c in cells)
    return normalized == _HEADER_CELLS


def _split_markdown(line: str) -> list[str]:
    protected = line.strip().replace("\\|", _ESCAPED_PIPE)
    cells = protected.split("|")
    if protected.startswith("|"):
        cells = cells[1:]
    if protected.endswith("|") and cells:
        cells = cells[:-1]
    return [c.replace(_ESCAPED_PIPE, "|").strip() for c in cells]


def _split_csv(line: str) -> Optional[list[str]]:
    try:
        parsed = next(csv.reader(io.StringIO(line)), [])
    except csv.Error:
        return None
    return [c.strip() for c in parsed]


def _classify(cells: list[str], raw_line: str, report: ParseReport) -> None:
    if _is_header(cells):
        report.skipped += 1
        return
    if len(cells) != 3:
        report.malformed.append((raw_line, f"WrongColumnCount({len(cells)})"))
        return
    number_cell, line_code, question = cells
    try:
        line_number = int(number_cell)
    except ValueError:
        report.malformed.append((raw_line, "NonNumericLineNumber"))
        return
    if not question.strip():
        report.malformed.append((raw_line, "EmptyQuestion"))
        return
    report.rows.append(ParsedRow(line_number=line_number, line_code=line_code, question=question))


def parse_tabular_response(raw: str) -> ParseReport:
    """Extract (LineNumber, LineCode, Question) rows from a model response.

    Raises NoTableFound when the text contains no data line in any of the
    three formats; otherwise always returns a report in which every
    delimiter-bearing line is accounted for as a row, a malformed entry, or
    a skipped header/separator.
    """
    lines = raw.split("\n")

    if any("|" in line for line in lines):
        fmt = TableFormat.MARKDOWN_PIPE
    elif any("\t" in line for line in lines):
        fmt = TableFormat.TSV
    elif any("," in line for line in lines):
        fmt = TableFormat.CSV
    else:
        raise NoTableFound()

    report = ParseReport(format_detected=fmt)
    for line in lines:
        if fmt is TableFormat.MARKDOWN_PIPE:
            if "|" not in line:
                report.ignored += 1
                continue
            if _SEPARATOR_RE.match(line) and "-" in line:
                report.skipped += 1
                continue
            _classify(_split_markdown(line), line, report)
        elif fmt is TableFormat.TSV:
            if "\t" not in line:
                report.ignored += 1
                continue
            _classify([c.strip() for c in line.split("\t")], line, report)
        else:
            if "," not in line:
                report.ignored += 1
                continue
            cells = _split_csv(line)
            if cells is None:
                report.malformed.append((line, "CsvError"))
                continue
            _classify(cells, line, report)

    if not report.rows and not report.malformed:
        raise NoTableFound()
    return report


def normalize_code(text: str) -> str:
    """Trim and collapse whitespace runs to single spaces."""
    return " ".join(text.split())


def anchor_row(row: ParsedRow, challenge: CodeChallenge) -> AnchorResult:
    """Validate a row's reported line number against the challenge source.

    Anchored when the reported number points at a line whose normalized
    text equals the row's; Relocated when the text matches exactly one
    other line; Unanchored otherwise, including when the text matches two
    or more lines (never a guess among duplicates).
    """
    target = normalize_code(row.line_code)
    source = challenge.source
    if 1 <= row.line_number <= len(source):
        if normalize_code(source[row.line_number - 1].text) == target:
            return AnchorResult(AnchorStatus.ANCHORED, row.line_number)
    matches = [line.number for line in source if normalize_code(line.text) == target]
    if len(matches) == 1:
        return AnchorResult(AnchorStatus.RELOCATED, matches[0])
    return AnchorResult(AnchorStatus.UNANCHORED)
