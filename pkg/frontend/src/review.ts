/**
 * Review queue: walk generated questions one at a time, pick a label
 * class and theme, then accept or reject. Every completed action is a
 * single POST to /api/annotations; nothing is kept client-side, so
 * there is never unsaved work. On an API failure the item stays in the
 * queue and the error is surfaced.
 */

import { Annotation, ApiClient, ApiError, Challenge, Question } from './api.js';

export interface ReviewFilter {
  challenge?: string;
  category?: string;
  theme?: string;
  anchorStatus?: string;
  onlyUnlabeled?: boolean;
}

export interface ReviewQueueItem {
  question: Question;
  /** Label suggested by a model annotator ("llm:*"), if any. */
  suggestedLabel: string | null;
  /** This reviewer's current annotation, if any. */
  currentAnnotation: Annotation | null;
}

export interface ContextLine {
  number: number;
  text: string;
  isAnchor: boolean;
}

export function isModelAnnotator(annotator: string): boolean {
  return annotator.startsWith('llm:');
}

/** The reviewer's own current annotation on a question, if present. */
export function annotationBy(question: Question, annotator: string): Annotation | null {
  return question.annotations.find((a) => a.annotator === annotator) ?? null;
}

/** First model-suggested label on a question, if present. */
export function suggestedLabel(question: Question): string | null {
  const suggestion = question.annotations.find((a) => isModelAnnotator(a.annotator));
  return suggestion ? suggestion.label : null;
}

function hasHumanAnnotation(question: Question): boolean {
  return question.annotations.some((a) => !isModelAnnotator(a.annotator));
}

function matchesTheme(question: Question, theme: string): boolean {
  return question.annotations.some((a) => a.theme === theme);
}

/** Build the review queue for one annotator from server-listed questions. */
export function buildQueue(
  questions: Question[],
  annotator: string,
  filter: ReviewFilter = {},
): ReviewQueueItem[] {
  return questions
    .filter((q) => !filter.challenge || q.challenge_id === filter.challenge)
    .filter((q) => !filter.category || q.category === filter.category)
    .filter((q) => !filter.anchorStatus || q.anchor_status === filter.anchorStatus)
    .filter((q) => !filter.theme || matchesTheme(q, filter.theme))
    .filter((q) => !filter.onlyUnlabeled || !hasHumanAnnotation(q))
    .map((question) => ({
      question,
      suggestedLabel: suggestedLabel(question),
      currentAnnotation: annotationBy(question, annotator),
    }));
}

/** Source lines within two lines of the anchor; empty when unanchored. */
export function contextFor(question: Question, challenge: Challenge): ContextLine[] {
  if (question.anchored_line === null) {
    return [];
  }
  const anchor = question.anchored_line;
  return challenge.source
    .filter((line) => Math.abs(line.number - anchor) <= 2)
    .map((line) => ({ number: line.number, text: line.text, isAnchor: line.number === anchor }));
}

export interface SubmitResult {
  ok: boolean;
  annotation: Annotation | null;
  error: string | null;
}

/**
 * One reviewer working through a queue. The draft label/theme live only
 * until accept() or reject() submits them in a single API call.
 */
export class ReviewSession {
  private queue: ReviewQueueItem[] = [];
  private index = 0;
  draftLabel: string | null = null;
  draftTheme: string | null = null;
  lastError: string | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly annotator: string,
  ) {}

  async load(filter: ReviewFilter = {}): Promise<number> {
    const questions = await this.api.listQuestions({
      challenge: filter.challenge,
      category: filter.category,
      anchorStatus: filter.anchorStatus,
    });
    this.queue = buildQueue(questions, this.annotator, filter);
    this.index = 0;
    this.resetDraft();
    return this.queue.length;
  }

  get length(): number {
    return this.queue.length;
  }

  get position(): number {
    return this.index;
  }

  get current(): ReviewQueueItem | null {
    return this.queue[this.index] ?? null;
  }

  get done(): boolean {
    return this.index >= this.queue.length;
  }

  private resetDraft(): void {
    const item = this.current;
    this.draftLabel = item?.currentAnnotation?.label ?? item?.suggestedLabel ?? null;
    this.draftTheme = item?.currentAnnotation?.theme ?? null;
    this.lastError = null;
  }

  /** Keyboard shortcut target: set the draft label class. */
  setLabel(label: string): void {
    this.draftLabel = label;
  }

  setTheme(theme: string | null): void {
    this.draftTheme = theme;
  }

  accept(): Promise<SubmitResult> {
    return this.submit('Accepted');
  }

  reject(): Promise<SubmitResult> {
    return this.submit('Rejected');
  }

  skip(): void {
    this.index += 1;
    this.resetDraft();
  }

  /** Submit the draft as exactly one annotation call, then advance. */
  private async submit(decision: string): Promise<SubmitResult> {
    const item = this.current;
    if (item === null) {
      return { ok: false, annotation: null, error: 'queue is empty' };
    }
    if (this.draftLabel === null) {
      this.lastError = 'pick a label class first';
      return { ok: false, annotation: null, error: this.lastError };
    }
    try {
      const annotation = await this.api.submitAnnotation({
        question_id: item.question.id,
        annotator: this.annotator,
        label: this.draftLabel,
        theme: this.draftTheme,
        decision,
      });
      item.currentAnnotation = annotation;
      this.index += 1;
      this.resetDraft();
      return { ok: true, annotation, error: null };
    } catch (error) {
      // item stays put; the caller shows the error inline
      this.lastError = error instanceof ApiError ? error.message : String(error);
      return { ok: false, annotation: null, error: this.lastError };
    }
  }
}
