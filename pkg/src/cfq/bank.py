"""Persistent store for challenges, generated questions, annotations, themes,
and raw model responses.

A store is a directory holding store.json (all structured state, written
atomically via a temp file and rename) and responses/ (one JSON file per
response fingerprint with the raw model text). Opening with path=None
gives a purely in-memory store with identical behavior, which keeps tests
fast. A fresh store is seeded with the bundled challenge catalog and the
built-in themes.

Question identity is content-derived: sha256 over challenge id, prompt
category, and question text, truncated to 16 hex chars. Re-running a
generation therefore deduplicates instead of duplicating; the first
insertion's anchoring metadata wins. Annotations are keyed by
(question_id, annotator): a newer timestamp supersedes, and an exact
timestamp tie goes to the lexicographically larger annotation id so that
replays converge on one winner.

Datasets export to CSV (human-facing, timestamps dropped) and JSONL
(full fidelity, exact round-trip). Both import paths recompute derived
ids rather than trusting the file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime
from hashlib import sha256
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import corpus
from .corpus import CodeChallenge, DuplicateId, FunctionalCategory, Provenance, SourceLine, UnknownChallenge
from .errors import CfqError
from .promptgen import PromptCategory
from .qparser import AnchorResult, AnchorStatus, ParsedRow
from .taxonomy import (
    BUILTIN_THEMES,
    Annotation,
    Decision,
    DuplicateTheme,
    LabelClass,
    Theme,
    UnknownQuestion,
    UnknownTheme,
    make_annotation,
    utc_now,
)

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "question_id",
    "challenge_id",
    "functional_category",
    "prompt_category",
    "line_number",
    "anchored_line",
    "anchor_status",
    "line_code",
    "question",
    "annotator",
    "label",
    "theme",
    "decision",
)


class StoreError(CfqError):
    pass


class SchemaMismatch(StoreError):
    def __init__(self, found):
        super().__init__(f"store schema version {found!r} is not supported (expected {SCHEMA_VERSION})")
        self.found = found


class DatasetFormatError(StoreError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"dataset line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class GeneratedQuestion:
    id: str
    challenge_id: str
    category: PromptCategory
    row: ParsedRow
    anchor: AnchorResult
    response_fingerprint: str
    created_at: datetime


def question_id(challenge_id: str, category: PromptCategory, question_text: str) -> str:
    digest = sha256("\n".join([challenge_id, category.value, question_text]).encode("utf-8"))
    return digest.hexdigest()[:16]


def make_question(
    challenge_id: str,
    category: PromptCategory,
    row: ParsedRow,
    anchor: AnchorResult,
    response_fingerprint: str,
    created_at: datetime,
) -> GeneratedQuestion:
    return GeneratedQuestion(
        id=question_id(challenge_id, category, row.question),
        challenge_id=challenge_id,
        category=category,
        row=row,
        anchor=anchor,
        response_fingerprint=response_fingerprint,
        created_at=created_at,
    )


@dataclass
class PutReport:
    inserted: list[str]
    duplicates: list[str]


class Store:
    """Single-process store; mutations are serialized by a reentrant lock
    and saved atomically after every batch."""

    def __init__(self, path: Optional[Path], clock: Callable[[], datetime]):
        self.path = path
        self.clock = clock
        self._lock = threading.RLock()
        self._challenges: dict[str, CodeChallenge] = {}
        self._questions: dict[str, GeneratedQuestion] = {}
        self._annotations: dict[tuple[str, str], Annotation] = {}
        self._themes: dict[str, Theme] = {}
        self._responses: dict[str, str] = {}

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def open(cls, path: Optional[Path | str] = None, *, clock: Callable[[], datetime] = utc_now) -> "Store":
        """Open (or create) the store at path; path=None is in-memory."""
        store = cls(Path(path) if path is not None else None, clock)
        if store.path is not None and (store.path / "store.json").exists():
            store._load()
        else:
            store._seed()
            store._save()
        return store

    def _seed(self) -> None:
        for challenge in corpus.bundled_catalog():
            self._challenges[challenge.id] = challenge
        for theme in BUILTIN_THEMES:
            self._themes[theme.id] = theme

    def _load(self) -> None:
        raw = (self.path / "store.json").read_text(encoding="utf-8")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StoreError(f"store.json is not valid JSON: {exc}") from exc
        if data.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(data.get("schema_version"))
        for item in data["challenges"]:
            challenge = CodeChallenge(
                id=item["id"],
                title=item["title"],
                category=FunctionalCategory(item["category"]),
                goal=item["goal"],
                source=tuple(SourceLine(number=i + 1, text=t) for i, t in enumerate(item["source"])),
                provenance=Provenance(item["provenance"]),
            )
            self._challenges[challenge.id] = challenge
        for item in data["themes"]:
            self._themes[item["id"]] = Theme(
                id=item["id"],
                display_name=item["display_name"],
                description=item["description"],
                builtin=item["builtin"],
            )
        for item in data["questions"]:
            question = GeneratedQuestion(
                id=item["id"],
                challenge_id=item["challenge_id"],
                category=PromptCategory(item["category"]),
                row=ParsedRow(
                    line_number=item["line_number"],
                    line_code=item["line_code"],
                    question=item["question"],
                ),
                anchor=AnchorResult(
                    AnchorStatus(item["anchor_status"]),
                    item["anchored_line"],
                ),
                response_fingerprint=item["response_fingerprint"],
                created_at=datetime.fromisoformat(item["created_at"]),
            )
            self._questions[question.id] = question
        for item in data["annotations"]:
            annotation = Annotation(
                id=item["id"],
                question_id=item["question_id"],
                annotator=item["annotator"],
                label=LabelClass(item["label"]),
                theme=item["theme"],
                decision=Decision(item["decision"]),
                timestamp=datetime.fromisoformat(item["timestamp"]),
            )
            self._annotations[(annotation.question_id, annotation.annotator)] = annotation

    def _save(self) -> None:
        if self.path is None:
            return
        self.path.mkdir(parents=True, exist_ok=True)
        data = {
            "schema_version": SCHEMA_VERSION,
            "challenges": [
                {
                    "id": c.id,
                    "title": c.title,
                    "category": c.category.value,
                    "goal": c.goal,
                    "source": [line.text for line in c.source],
                    "provenance": c.provenance.value,
                }
                for c in self._challenges.values()
            ],
            "themes": [
                {
                    "id": t.id,
                    "display_name": t.display_name,
                    "description": t.description,
                    "builtin": t.builtin,
                }
                for t in self._themes.values()
            ],
            "questions": [
                {
                    "id": q.id,
                    "challenge_id": q.challenge_id,
                    "category": q.category.value,
                    "line_number": q.row.line_number,
                    "line_code": q.row.line_code,
                    "question": q.row.question,
                    "anchor_status": q.anchor.status.value,
                    "anchored_line": q.anchor.line,
                    "response_fingerprint": q.response_fingerprint,
                    "created_at": q.created_at.isoformat(),
                }
                for q in self._questions.values()
            ],
            "annotations": [
                {
                    "id": a.id,
                    "question_id": a.question_id,
                    "annotator": a.annotator,
                    "label": a.label.value,
                    "theme": a.theme,
                    "decision": a.decision.value,
                    "timestamp": a.timestamp.isoformat(),
                }
                for a in self._annotations.values()
            ],
        }
        target = self.path / "store.json"
        tmp = self.path / "store.json.tmp"
        tmp.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        os.replace(tmp, target)

    # -- challenges --------------------------------------------------------

    def challenges(self) -> list[CodeChallenge]:
        return list(self._challenges.values())

    def get_challenge(self, challenge_id: str) -> CodeChallenge:
        try:
            return self._challenges[challenge_id]
        except KeyError:
            raise UnknownChallenge(challenge_id) from None

    def add_challenge(self, challenge: CodeChallenge) -> None:
        with self._lock:
            if challenge.id in self._challenges:
                raise DuplicateId(challenge.id)
            self._challenges[challenge.id] = challenge
            self._save()

    # -- questions ---------------------------------------------------------

    def questions(
        self,
        challenge_id: Optional[str] = None,
        category: Optional[PromptCategory] = None,
        anchor_status: Optional[AnchorStatus] = None,
    ) -> list[GeneratedQuestion]:
        result = []
        for question in self._questions.values():
            if challenge_id is not None and question.challenge_id != challenge_id:
                continue
            if category is not None and question.category is not category:
                continue
            if anchor_status is not None and question.anchor.status is not anchor_status:
                continue
            result.append(question)
        return result

    def get_question(self, qid: str) -> GeneratedQuestion:
        try:
            return self._questions[qid]
        except KeyError:
            raise UnknownQuestion(qid) from None

    def put_questions(self, questions: Iterable[GeneratedQuestion]) -> PutReport:
        """Insert questions, deduplicating on id; first insertion wins."""
        report = PutReport(inserted=[], duplicates=[])
        questions = list(questions)
        with self._lock:
            # validate the whole batch before mutating anything
            for question in questions:
                self.get_challenge(question.challenge_id)
            for question in questions:
                if question.id in self._questions:
                    report.duplicates.append(question.id)
                    continue
                self._questions[question.id] = question
                report.inserted.append(question.id)
            self._save()
        return report

    # -- annotations -------------------------------------------------------

    def annotations(
        self,
        question_id: Optional[str] = None,
        annotator: Optional[str] = None,
    ) -> list[Annotation]:
        result = [
            a
            for a in self._annotations.values()
            if (question_id is None or a.question_id == question_id)
            and (annotator is None or a.annotator == annotator)
        ]
        result.sort(key=lambda a: (a.question_id, a.annotator))
        return result

    def put_annotation(self, annotation: Annotation) -> Annotation:
        """Apply supersession and return whichever annotation is current."""
        with self._lock:
            self.get_question(annotation.question_id)
            if annotation.theme is not None and annotation.theme not in self._themes:
                raise UnknownTheme(annotation.theme)
            key = (annotation.question_id, annotation.annotator)
            existing = self._annotations.get(key)
            if existing is not None:
                if (annotation.timestamp, annotation.id) <= (existing.timestamp, existing.id):
                    return existing
            self._annotations[key] = annotation
            self._save()
        return annotation

    # -- themes ------------------------------------------------------------

    def themes(self) -> list[Theme]:
        return list(self._themes.values())

    def get_theme(self, theme_id: str) -> Optional[Theme]:
        return self._themes.get(theme_id)

    def put_theme(self, theme: Theme) -> None:
        with self._lock:
            if theme.id in self._themes:
                raise DuplicateTheme(theme.id)
            self._themes[theme.id] = theme
            self._save()

    # -- raw responses -----------------------------------------------------

    def put_response(self, fingerprint: str, text: str) -> None:
        with self._lock:
            self._responses[fingerprint] = text
            if self.path is not None:
                directory = self.path / "responses"
                directory.mkdir(parents=True, exist_ok=True)
                target = directory / f"{fingerprint}.json"
                tmp = directory / f"{fingerprint}.json.tmp"
                payload = {"fingerprint": fingerprint, "text": text}
                tmp.write_text(json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8")
                os.replace(tmp, target)

    def get_response(self, fingerprint: str) -> Optional[str]:
        text = self._responses.get(fingerprint)
        if text is None and self.path is not None:
            target = self.path / "responses" / f"{fingerprint}.json"
            if target.exists():
                text = json.loads(target.read_text(encoding="utf-8"))["text"]
                self._responses[fingerprint] = text
        return text

    # -- dataset export / import -------------------------------------------

    def _export_rows(self):
        for question in sorted(self._questions.values(), key=lambda q: q.id):
            challenge = self._challenges.get(question.challenge_id)
            base = [
                question.id,
                question.challenge_id,
                challenge.category.value if challenge else "",
                question.category.value,
                str(question.row.line_number),
                "" if question.anchor.line is None else str(question.anchor.line),
                question.anchor.status.value,
                question.row.line_code,
                question.row.question,
            ]
            attached = self.annotations(question_id=question.id)
            if not attached:
                yield base + ["", "", "", ""]
                continue
            for annotation in attached:
                yield base + [
                    annotation.annotator,
                    annotation.label.value,
                    annotation.theme or "",
                    annotation.decision.value,
                ]

    def export_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self._export_rows():
            writer.writerow(row)
        return buffer.getvalue()

    def export_jsonl(self) -> str:
        lines = [json.dumps({"schema_version": SCHEMA_VERSION}, sort_keys=True, separators=(",", ":"))]
        for question in sorted(self._questions.values(), key=lambda q: q.id):
            lines.append(
                json.dumps(
                    {
                        "kind": "question",
                        "id": question.id,
                        "challenge_id": question.challenge_id,
                        "category": question.category.value,
                        "line_number": question.row.line_number,
                        "line_code": question.row.line_code,
                        "question": question.row.question,
                        "anchor_status": question.anchor.status.value,
                        "anchored_line": question.anchor.line,
                        "response_fingerprint": question.response_fingerprint,
                        "created_at": question.created_at.isoformat(),
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                    ensure_ascii=False,
                )
            )
        for annotation in self.annotations():
            lines.append(
                json.dumps(
                    {
                        "kind": "annotation",
                        "id": annotation.id,
                        "question_id": annotation.question_id,
                        "annotator": annotation.annotator,
                        "label": annotation.label.value,
                        "theme": annotation.theme,
                        "decision": annotation.decision.value,
                        "timestamp": annotation.timestamp.isoformat(),
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                    ensure_ascii=False,
                )
            )
        return "\n".join(lines) + "\n"

    def export_dataset(self, format: str = "csv") -> str:
        if format == "csv":
            return self.export_csv()
        if format == "jsonl":
            return self.export_jsonl()
        raise StoreError(f"unknown dataset format {format!r}")

    def _import_question_fields(self, line_no, challenge_id, category_raw, line_number_raw,
                                anchored_line_raw, anchor_status_raw, line_code, question_text):
        try:
            category = PromptCategory(category_raw)
        except ValueError:
            raise DatasetFormatError(line_no, f"unknown prompt category {category_raw!r}") from None
        try:
            line_number = int(line_number_raw)
        except ValueError:
            raise DatasetFormatError(line_no, f"non-numeric line number {line_number_raw!r}") from None
        try:
            status = AnchorStatus(anchor_status_raw)
        except ValueError:
            raise DatasetFormatError(line_no, f"unknown anchor status {anchor_status_raw!r}") from None
        anchored_line = None
        if anchored_line_raw not in ("", None):
            try:
                anchored_line = int(anchored_line_raw)
            except ValueError:
                raise DatasetFormatError(line_no, f"non-numeric anchored line {anchored_line_raw!r}") from None
        try:
            row = ParsedRow(line_number=line_number, line_code=line_code, question=question_text)
            anchor = AnchorResult(status, anchored_line)
        except ValueError as exc:
            raise DatasetFormatError(line_no, str(exc)) from None
        return challenge_id, category, row, anchor

    def import_csv(self, text: str) -> PutReport:
        """Import a dataset CSV. Timestamps are regenerated and response
        fingerprints left empty; question and annotation ids are recomputed."""
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(1, "empty file") from None
        if tuple(header) != CSV_COLUMNS:
            raise DatasetFormatError(1, f"unexpected header {header!r}")
        now = self.clock()
        questions = []
        pending = []
        seen = set()
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(CSV_COLUMNS):
                raise DatasetFormatError(line_no, f"expected {len(CSV_COLUMNS)} columns, got {len(cells)}")
            (_, challenge_id, _, category_raw, line_number_raw, anchored_line_raw,
             anchor_status_raw, line_code, question_text, annotator, label_raw,
             theme_raw, decision_raw) = cells
            challenge_id, category, row, anchor = self._import_question_fields(
                line_no, challenge_id, category_raw, line_number_raw,
                anchored_line_raw, anchor_status_raw, line_code, question_text)
            qid = question_id(challenge_id, category, row.question)
            if qid not in seen:
                seen.add(qid)
                questions.append(make_question(challenge_id, category, row, anchor, "", now))
            if annotator:
                try:
                    label = LabelClass(label_raw)
                except ValueError:
                    raise DatasetFormatError(line_no, f"unknown label {label_raw!r}") from None
                try:
                    decision = Decision(decision_raw)
                except ValueError:
                    raise DatasetFormatError(line_no, f"unknown decision {decision_raw!r}") from None
                theme = theme_raw or None
                pending.append(make_annotation(qid, annotator, label, theme, decision, now))
        with self._lock:
            report = self.put_questions(questions)
            for annotation in pending:
                self.put_annotation(annotation)
        return report

    def import_jsonl(self, text: str) -> PutReport:
        """Import a JSONL dataset with full fidelity (timestamps and
        response fingerprints preserved)."""
        lines = [line for line in text.split("\n") if line.strip()]
        if not lines:
            raise DatasetFormatError(1, "empty file")
        meta = self._parse_json_line(1, lines[0])
        if meta.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(meta.get("schema_version"))
        questions = []
        pending = []
        for line_no, line in enumerate(lines[1:], start=2):
            item = self._parse_json_line(line_no, line)
            kind = item.get("kind")
            if kind == "question":
                try:
                    _, category, row, anchor = self._import_question_fields(
                        line_no, item["challenge_id"], item["category"],
                        item["line_number"], item["anchored_line"],
                        item["anchor_status"], item["line_code"], item["question"])
                    created_at = datetime.fromisoformat(item["created_at"])
                    fingerprint = item["response_fingerprint"]
                except KeyError as exc:
                    raise DatasetFormatError(line_no, f"missing field {exc.args[0]!r}") from None
                questions.append(make_question(
                    item["challenge_id"], category, row, anchor, fingerprint, created_at))
            elif kind == "annotation":
                try:
                    annotation = make_annotation(
                        item["question_id"],
                        item["annotator"],
                        LabelClass(item["label"]),
                        item["theme"],
                        Decision(item["decision"]),
                        datetime.fromisoformat(item["timestamp"]),
                    )
                except KeyError as exc:
                    raise DatasetFormatError(line_no, f"missing field {exc.args[0]!r}") from None
                except ValueError as exc:
                    raise DatasetFormatError(line_no, str(exc)) from None
                pending.append(annotation)
            else:
                raise DatasetFormatError(line_no, f"unknown record kind {kind!r}")
        with self._lock:
            report = self.put_questions(questions)
            for annotation in pending:
                self.put_annotation(annotation)
        return report

    @staticmethod
    def _parse_json_line(line_no: int, line: str) -> dict:
        try:
            item = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(line_no, f"invalid JSON: {exc}") from None
        if not isinstance(item, dict):
            raise DatasetFormatError(line_no, "expected a JSON object")
        return item

    def import_dataset(self, text: str, format: str = "csv") -> PutReport:
        if format == "csv":
            return self.import_csv(text)
        if format == "jsonl":
            return self.import_jsonl(text)
        raise StoreError(f"unknown dataset format {format!r}")
