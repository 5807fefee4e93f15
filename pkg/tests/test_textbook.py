"""Tests for enhanced textbook documents."""

from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfq.bank import Store, make_question
from cfq.corpus import UnknownChallenge
from cfq.promptgen import CATEGORY_ORDER, PromptCategory
from cfq.qparser import AnchorResult, AnchorStatus, ParsedRow
from cfq.taxonomy import Decision, LabelClass, make_annotation
from cfq.textbook import (
    EnhancedDocument,
    document_from_json,
    enhance,
    render,
    render_html,
    render_json,
)

T0 = datetime(2026, 4, 4, 8, 0, 0, tzinfo=timezone.utc)
CHALLENGE = "student-profile"


def fixed_clock():
    return T0


def add_question(store, text, line=1, status=AnchorStatus.ANCHORED,
                 category=PromptCategory.SYNTAX_ANALYSIS, challenge=CHALLENGE):
    anchor_line = None if status is AnchorStatus.UNANCHORED else line
    question = make_question(
        challenge_id=challenge,
        category=category,
        row=ParsedRow(line_number=line, line_code="x", question=text),
        anchor=AnchorResult(status, anchor_line),
        response_fingerprint="",
        created_at=T0,
    )
    store.put_questions([question])
    return question


def decide(store, question, annotator, decision, label=LabelClass.S, theme=None):
    store.put_annotation(
        make_annotation(question.id, annotator, label, theme, decision, T0)
    )


@pytest.fixture
def store():
    return Store.open(None, clock=fixed_clock)


class TestEnhance:
    def test_only_accepted_questions_included(self, store):
        accepted = add_question(store, "Why accepted?", line=1)
        pending = add_question(store, "Why pending?", line=1)
        rejected = add_question(store, "Why rejected?", line=2)
        unlabeled = add_question(store, "Why unlabeled?", line=2)
        decide(store, accepted, "alice", Decision.ACCEPTED)
        decide(store, pending, "alice", Decision.PENDING)
        decide(store, rejected, "alice", Decision.REJECTED)

        document = enhance(store, CHALLENGE)
        ids = [q.question_id for entry in document.lines for q in entry.questions]
        assert ids == [accepted.id]
        assert document.unanchored == ()

    def test_metadata_from_first_accepting_annotator(self, store):
        question = add_question(store, "Why?")
        decide(store, question, "carol", Decision.ACCEPTED, label=LabelClass.M, theme="LU-Other")
        decide(store, question, "bob", Decision.ACCEPTED, label=LabelClass.PL, theme="LU-Syntax")
        decide(store, question, "alice", Decision.REJECTED, label=LabelClass.S)

        document = enhance(store, CHALLENGE)
        (attached,) = document.lines[0].questions
        assert attached.annotator == "bob"
        assert attached.label is LabelClass.PL
        assert attached.theme == "LU-Syntax"

    def test_unanchored_questions_in_trailing_section(self, store):
        floating = add_question(store, "What overall?", status=AnchorStatus.UNANCHORED)
        decide(store, floating, "alice", Decision.ACCEPTED)
        document = enhance(store, CHALLENGE)
        assert [q.question_id for q in document.unanchored] == [floating.id]
        assert all(not entry.questions for entry in document.lines)

    def test_relocated_question_attaches_to_anchor_line(self, store):
        question = add_question(store, "Why moved?", line=4, status=AnchorStatus.RELOCATED)
        decide(store, question, "alice", Decision.ACCEPTED)
        document = enhance(store, CHALLENGE)
        assert [q.question_id for q in document.lines[3].questions] == [question.id]

    def test_every_source_line_present(self, store):
        challenge = store.get_challenge(CHALLENGE)
        document = enhance(store, CHALLENGE)
        assert [entry.number for entry in document.lines] == [l.number for l in challenge.source]
        assert [entry.text for entry in document.lines] == [l.text for l in challenge.source]
        assert document.title == challenge.title
        assert document.functional_category == challenge.category.value

    def test_ordering_category_then_id(self, store):
        a = add_question(store, "Zed?", category=PromptCategory.SYNTAX_ANALYSIS)
        b = add_question(store, "Abc?", category=PromptCategory.SYNTAX_ANALYSIS)
        c = add_question(store, "Mid?", category=PromptCategory.CRITICAL_THINKING)
        for question in (a, b, c):
            decide(store, question, "alice", Decision.ACCEPTED)
        document = enhance(store, CHALLENGE)
        attached = document.lines[0].questions
        assert attached[0].question_id == c.id  # CriticalThinking ranks first
        assert [q.question_id for q in attached[1:]] == sorted([a.id, b.id])

    def test_generated_at_from_injected_clock(self, store):
        later = datetime(2027, 1, 1, tzinfo=timezone.utc)
        assert enhance(store, CHALLENGE).generated_at == T0
        assert enhance(store, CHALLENGE, now=lambda: later).generated_at == later

    def test_unknown_challenge(self, store):
        with pytest.raises(UnknownChallenge):
            enhance(store, "ghost")


class TestJsonRender:
    def test_structural_round_trip(self, store):
        question = add_question(store, "Why? <em>&amp;</em>", line=2)
        floating = add_question(store, "Overall?", status=AnchorStatus.UNANCHORED)
        decide(store, question, "alice", Decision.ACCEPTED, theme="LU-Syntax")
        decide(store, floating, "bob", Decision.ACCEPTED, label=LabelClass.G)
        document = enhance(store, CHALLENGE)

        text = render_json(document)
        assert document_from_json(text) == document

    def test_render_dispatch(self, store):
        document = enhance(store, CHALLENGE)
        assert render(document, format="json") == render_json(document)
        assert render(document, format="html") == render_html(document)
        with pytest.raises(ValueError):
            render(document, format="pdf")


class TestHtmlRender:
    def test_self_contained(self, store):
        question = add_question(store, "Why?")
        decide(store, question, "alice", Decision.ACCEPTED)
        page = render_html(enhance(store, CHALLENGE))
        assert page.startswith("<!DOCTYPE html>")
        for forbidden in ("http://", "https://", "<script", "<link", "<img"):
            assert forbidden not in page

    def test_question_text_exactly_once_and_escaped(self, store):
        question = add_question(store, 'Why use <b>"bold"</b> & not plain?')
        decide(store, question, "alice", Decision.ACCEPTED)
        page = render_html(enhance(store, CHALLENGE))
        assert page.count("Why use &lt;b&gt;&quot;bold&quot;&lt;/b&gt; &amp; not plain?") == 1
        assert "<b>" not in page

    def test_source_lines_escaped(self, store):
        page = render_html(enhance(store, CHALLENGE))
        challenge = store.get_challenge(CHALLENGE)
        # every source line appears (escaped) in the page
        import html as html_lib

        for line in challenge.source:
            if line.text:
                assert html_lib.escape(line.text) in page


@st.composite
def stores_with_decisions(draw):
    store = Store.open(None, clock=fixed_clock)
    challenge = store.get_challenge(CHALLENGE)
    n = draw(st.integers(min_value=0, max_value=12))
    expected_accepted = set()
    for i in range(n):
        status = draw(st.sampled_from(list(AnchorStatus)))
        line = draw(st.integers(min_value=1, max_value=len(challenge.source)))
        category = draw(st.sampled_from(list(PromptCategory)))
        question = add_question(store, f"Question {i}?", line=line, status=status,
                                category=category)
        decision = draw(st.sampled_from(list(Decision)))
        if draw(st.booleans()):
            decide(store, question, draw(st.sampled_from(["alice", "bob"])), decision)
            if decision is Decision.ACCEPTED:
                expected_accepted.add(question.id)
    return store, expected_accepted


class TestConservation:
    @given(stores_with_decisions())
    @settings(max_examples=60, deadline=None)
    def test_each_accepted_question_appears_exactly_once(self, built):
        store, expected = built
        document = enhance(store, CHALLENGE)
        seen = [q.question_id for entry in document.lines for q in entry.questions]
        seen += [q.question_id for q in document.unanchored]
        assert sorted(seen) == sorted(set(seen))
        assert set(seen) == expected

    @given(stores_with_decisions())
    @settings(max_examples=30, deadline=None)
    def test_json_round_trip_property(self, built):
        store, _ = built
        document = enhance(store, CHALLENGE)
        assert document_from_json(render_json(document)) == document
