"""Enhanced textbook documents: a challenge's source interleaved with the
accepted questions anchored to each line.

A question participates when at least one of its current annotations has
decision Accepted. Its displayed label and theme come from the accepting
annotation whose annotator sorts lexicographically first, so the document
is stable no matter the order reviews arrived in. Questions whose anchor
is unresolved are collected in a trailing unanchored section instead of
being attached to a guessed line; every accepted question appears in the
document exactly once.

Renderers produce a JSON form that round-trips structurally through
document_from_json, and a self-contained HTML page with no external
resources.
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Optional

from .promptgen import CATEGORY_ORDER, PromptCategory
from .taxonomy import Decision, LabelClass

_CATEGORY_RANK = {category: i for i, category in enumerate(CATEGORY_ORDER)}


@dataclass(frozen=True)
class AttachedQuestion:
    question_id: str
    category: PromptCategory
    question: str
    label: LabelClass
    theme: Optional[str]
    annotator: str


@dataclass(frozen=True)
class LineEntry:
    number: int
    text: str
    questions: tuple[AttachedQuestion, ...]


@dataclass(frozen=True)
class EnhancedDocument:
    challenge_id: str
    title: str
    functional_category: str
    goal: str
    generated_at: datetime
    lines: tuple[LineEntry, ...]
    unanchored: tuple[AttachedQuestion, ...]


def _sort_key(attached: AttachedQuestion):
    return (_CATEGORY_RANK[attached.category], attached.question_id)


def enhance(store, challenge_id: str, now: Optional[Callable[[], datetime]] = None) -> EnhancedDocument:
    """Build the enhanced document for one challenge from accepted questions."""
    challenge = store.get_challenge(challenge_id)
    by_line: dict[int, list[AttachedQuestion]] = {}
    unanchored: list[AttachedQuestion] = []
    for question in store.questions(challenge_id=challenge_id):
        accepted = [
            a
            for a in store.annotations(question_id=question.id)
            if a.decision is Decision.ACCEPTED
        ]
        if not accepted:
            continue
        chosen = min(accepted, key=lambda a: a.annotator)
        attached = AttachedQuestion(
            question_id=question.id,
            category=question.category,
            question=question.row.question,
            label=chosen.label,
            theme=chosen.theme,
            annotator=chosen.annotator,
        )
        if question.anchor.line is not None and 1 <= question.anchor.line <= len(challenge.source):
            by_line.setdefault(question.anchor.line, []).append(attached)
        else:
            unanchored.append(attached)
    lines = tuple(
        LineEntry(
            number=line.number,
            text=line.text,
            questions=tuple(sorted(by_line.get(line.number, []), key=_sort_key)),
        )
        for line in challenge.source
    )
    return EnhancedDocument(
        challenge_id=challenge.id,
        title=challenge.title,
        functional_category=challenge.category.value,
        goal=challenge.goal,
        generated_at=(now or store.clock)(),
        lines=lines,
        unanchored=tuple(sorted(unanchored, key=_sort_key)),
    )


def _question_payload(attached: AttachedQuestion) -> dict:
    return {
        "question_id": attached.question_id,
        "category": attached.category.value,
        "question": attached.question,
        "label": attached.label.value,
        "theme": attached.theme,
        "annotator": attached.annotator,
    }


def render_json(document: EnhancedDocument) -> str:
    payload = {
        "challenge_id": document.challenge_id,
        "title": document.title,
        "functional_category": document.functional_category,
        "goal": document.goal,
        "generated_at": document.generated_at.isoformat(),
        "lines": [
            {
                "number": entry.number,
                "text": entry.text,
                "questions": [_question_payload(q) for q in entry.questions],
            }
            for entry in document.lines
        ],
        "unanchored": [_question_payload(q) for q in document.unanchored],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def _question_from_payload(item: dict) -> AttachedQuestion:
    return AttachedQuestion(
        question_id=item["question_id"],
        category=PromptCategory(item["category"]),
        question=item["question"],
        label=LabelClass(item["label"]),
        theme=item["theme"],
        annotator=item["annotator"],
    )


def document_from_json(text: str) -> EnhancedDocument:
    data = json.loads(text)
    return EnhancedDocument(
        challenge_id=data["challenge_id"],
        title=data["title"],
        functional_category=data["functional_category"],
        goal=data["goal"],
        generated_at=datetime.fromisoformat(data["generated_at"]),
        lines=tuple(
            LineEntry(
                number=item["number"],
                text=item["text"],
                questions=tuple(_question_from_payload(q) for q in item["questions"]),
            )
            for item in data["lines"]
        ),
        unanchored=tuple(_question_from_payload(q) for q in data["unanchored"]),
    )


_HTML_STYLE = """
body { font-family: Georgia, serif; max-width: 56rem; margin: 2rem auto; padding: 0 1rem; }
h1 { font-size: 1.6rem; }
.goal { font-style: italic; color: #444; }
.program { border-collapse: collapse; width: 100%; margin: 1.5rem 0; }
.program td.num { text-align: right; color: #999; padding-right: 0.8rem;
                  font-family: monospace; vertical-align: top; width: 2.5rem; }
.program td.code { font-family: monospace; white-space: pre; }
.questions { margin: 0.2rem 0 0.6rem 0; padding-left: 1.2rem; }
.questions li { font-family: Georgia, serif; white-space: normal; margin: 0.15rem 0; }
.badge { font-size: 0.75rem; color: #555; border: 1px solid #bbb; border-radius: 3px;
         padding: 0 0.3rem; margin-right: 0.4rem; }
.unanchored { margin-top: 2rem; border-top: 1px solid #ccc; padding-top: 1rem; }
footer { margin-top: 2rem; font-size: 0.8rem; color: #888; }
""".strip()


def _question_html(attached: AttachedQuestion) -> str:
    badge = attached.label.value if attached.theme is None else f"{attached.label.value} - {attached.theme}"
    return (
        f'<li><span class="badge">{html.escape(badge)}</span>'
        f"{html.escape(attached.question)}</li>"
    )


def render_html(document: EnhancedDocument) -> str:
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{html.escape(document.title)}</title>",
        f"<style>{_HTML_STYLE}</style>",
        "</head>",
        "<body>",
        f"<h1>{html.escape(document.title)}</h1>",
        f'<p class="goal">{html.escape(document.goal)}</p>',
        '<table class="program">',
    ]
    for entry in document.lines:
        parts.append("<tr>")
        parts.append(f'<td class="num">{entry.number}</td>')
        parts.append(f'<td class="code">{html.escape(entry.text) or "&nbsp;"}</td>')
        parts.append("</tr>")
        if entry.questions:
            items = "".join(_question_html(q) for q in entry.questions)
            parts.append(f'<tr><td class="num"></td><td><ul class="questions">{items}</ul></td></tr>')
    parts.append("</table>")
    if document.unanchored:
        items = "".join(_question_html(q) for q in document.unanchored)
        parts.append('<section class="unanchored">')
        parts.append("<h2>Questions about the whole program</h2>")
        parts.append(f'<ul class="questions">{items}</ul>')
        parts.append("</section>")
    parts.append(
        f"<footer>Generated {html.escape(document.generated_at.isoformat())} "
        f"from challenge {html.escape(document.challenge_id)}.</footer>"
    )
    parts.append("</body>")
    parts.append("</html>")
    return "\n".join(parts) + "\n"


def render(document: EnhancedDocument, format: str = "json") -> str:
    if format == "json":
        return render_json(document)
    if format == "html":
        return render_html(document)
    raise ValueError(f"unknown render format {format!r}")
