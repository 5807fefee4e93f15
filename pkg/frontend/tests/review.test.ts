import { describe, expect, it, vi } from 'vitest';

import { Annotation, ApiClient, ApiError, Challenge, Question } from '../src/api.js';
import {
  ReviewSession,
  annotationBy,
  buildQueue,
  contextFor,
  suggestedLabel,
} from '../src/review.js';

function makeQuestion(overrides: Partial<Question> = {}): Question {
  return {
    id: 'q1',
    challenge_id: 'student-profile',
    category: 'SyntaxAnalysis',
    line_number: 3,
    line_code: 'int age = 20;',
    question: 'What if age were a String?',
    anchor_status: 'anchored',
    anchored_line: 3,
    response_fingerprint: 'fp',
    created_at: '2026-01-01T00:00:00+00:00',
    annotations: [],
    ...overrides,
  };
}

function makeAnnotation(overrides: Partial<Annotation> = {}): Annotation {
  return {
    id: 'a1',
    question_id: 'q1',
    annotator: 'alice',
    label: 'S',
    theme: null,
    decision: 'Pending',
    timestamp: '2026-01-01T00:00:00+00:00',
    ...overrides,
  };
}

const CHALLENGE: Challenge = {
  id: 'student-profile',
  title: 'Student Profile',
  category: 'ObjectArithmetic',
  goal: 'Model a student.',
  provenance: 'Bundled',
  source: [1, 2, 3, 4, 5, 6, 7].map((n) => ({ number: n, text: `line ${n}` })),
};

describe('queue building', () => {
  it('mirrors server questions and picks out suggestion and own annotation', () => {
    const question = makeQuestion({
      annotations: [
        makeAnnotation({ id: 'a1', annotator: 'llm:gpt-4', label: 'PL' }),
        makeAnnotation({ id: 'a2', annotator: 'alice', label: 'G' }),
        makeAnnotation({ id: 'a3', annotator: 'bob', label: 'M' }),
      ],
    });
    const [item] = buildQueue([question], 'alice');
    expect(item.suggestedLabel).toBe('PL');
    expect(item.currentAnnotation?.label).toBe('G');
    expect(annotationBy(question, 'carol')).toBeNull();
    expect(suggestedLabel(makeQuestion())).toBeNull();
  });

  it('filters by theme', () => {
    const tagged = makeQuestion({
      id: 'q2',
      annotations: [makeAnnotation({ theme: 'LU-Syntax' })],
    });
    const queue = buildQueue([makeQuestion(), tagged], 'alice', { theme: 'LU-Syntax' });
    expect(queue.map((item) => item.question.id)).toEqual(['q2']);
  });

  it('filters to unlabeled questions, ignoring model suggestions', () => {
    const labeled = makeQuestion({ id: 'q2', annotations: [makeAnnotation()] });
    const suggested = makeQuestion({
      id: 'q3',
      annotations: [makeAnnotation({ annotator: 'llm:gpt-4' })],
    });
    const queue = buildQueue([makeQuestion(), labeled, suggested], 'alice', {
      onlyUnlabeled: true,
    });
    expect(queue.map((item) => item.question.id)).toEqual(['q1', 'q3']);
  });
});

describe('source context', () => {
  it('shows two lines either side of the anchor', () => {
    const context = contextFor(makeQuestion({ anchored_line: 4 }), CHALLENGE);
    expect(context.map((line) => line.number)).toEqual([2, 3, 4, 5, 6]);
    expect(context.find((line) => line.isAnchor)?.number).toBe(4);
  });

  it('clamps the window at the edges of the file', () => {
    const context = contextFor(makeQuestion({ anchored_line: 1 }), CHALLENGE);
    expect(context.map((line) => line.number)).toEqual([1, 2, 3]);
  });

  it('is empty for unanchored questions', () => {
    const question = makeQuestion({ anchor_status: 'unanchored', anchored_line: null });
    expect(contextFor(question, CHALLENGE)).toEqual([]);
  });
});

function sessionWith(questions: Question[], submit = vi.fn()) {
  const api = {
    listQuestions: vi.fn().mockResolvedValue(questions),
    submitAnnotation: submit,
  } as unknown as ApiClient;
  return { session: new ReviewSession(api, 'alice'), submit };
}

describe('review session', () => {
  it('labels with exactly one API call and advances', async () => {
    const submit = vi
      .fn()
      .mockResolvedValue(makeAnnotation({ label: 'S', decision: 'Accepted' }));
    const { session } = sessionWith([makeQuestion(), makeQuestion({ id: 'q2' })], submit);
    await session.load();

    session.setLabel('S');
    const result = await session.accept();

    expect(result.ok).toBe(true);
    expect(submit).toHaveBeenCalledTimes(1);
    expect(submit).toHaveBeenCalledWith({
      question_id: 'q1',
      annotator: 'alice',
      label: 'S',
      theme: null,
      decision: 'Accepted',
    });
    expect(session.current?.question.id).toBe('q2');
  });

  it('sends the picked theme and the Rejected decision', async () => {
    const submit = vi.fn().mockResolvedValue(makeAnnotation({ decision: 'Rejected' }));
    const { session } = sessionWith([makeQuestion()], submit);
    await session.load();

    session.setLabel('M');
    session.setTheme('LU-Other');
    await session.reject();

    expect(submit).toHaveBeenCalledWith({
      question_id: 'q1',
      annotator: 'alice',
      label: 'M',
      theme: 'LU-Other',
      decision: 'Rejected',
    });
  });

  it('keeps the item in the queue when the API rejects the submit', async () => {
    const submit = vi
      .fn()
      .mockRejectedValue(new ApiError(404, 'UnknownQuestion', 'unknown question: q1'));
    const { session } = sessionWith([makeQuestion()], submit);
    await session.load();

    session.setLabel('S');
    const result = await session.accept();

    expect(result.ok).toBe(false);
    expect(result.error).toContain('UnknownQuestion');
    expect(session.lastError).toContain('UnknownQuestion');
    expect(session.current?.question.id).toBe('q1');
    expect(session.position).toBe(0);
  });

  it('refuses to submit without a label', async () => {
    const { session, submit } = sessionWith([makeQuestion()]);
    await session.load();

    const result = await session.accept();

    expect(result.ok).toBe(false);
    expect(submit).not.toHaveBeenCalled();
  });

  it('prefills the draft from the model suggestion', async () => {
    const question = makeQuestion({
      annotations: [makeAnnotation({ annotator: 'llm:gpt-4', label: 'PL' })],
    });
    const { session } = sessionWith([question]);
    await session.load();
    expect(session.draftLabel).toBe('PL');
  });

  it('skip advances without an API call', async () => {
    const { session, submit } = sessionWith([makeQuestion(), makeQuestion({ id: 'q2' })]);
    await session.load();

    session.skip();

    expect(submit).not.toHaveBeenCalled();
    expect(session.current?.question.id).toBe('q2');
    session.skip();
    expect(session.done).toBe(true);
    expect(session.current).toBeNull();
  });
});
