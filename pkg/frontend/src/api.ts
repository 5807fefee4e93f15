/**
 * Typed client for the cfq JSON API.
 *
 * Every field here mirrors the server payloads one to one; the client
 * never invents, renames, or computes values. All statistics come from
 * the reports endpoints as-is.
 */

export interface SourceLine {
  number: number;
  text: string;
}

export interface Challenge {
  id: string;
  title: string;
  category: string;
  goal: string;
  provenance: string;
  source: SourceLine[];
}

export interface Annotation {
  id: string;
  question_id: string;
  annotator: string;
  label: string;
  theme: string | null;
  decision: string;
  timestamp: string;
}

export interface Question {
  id: string;
  challenge_id: string;
  category: string;
  line_number: number;
  line_code: string;
  question: string;
  anchor_status: string;
  anchored_line: number | null;
  response_fingerprint: string;
  created_at: string;
  annotations: Annotation[];
}

export interface Theme {
  id: string;
  display_name: string;
  description: string;
  builtin: boolean;
}

export interface LabelDefinition {
  id: string;
  display: string;
  definition: string;
}

export interface AgreementReport {
  annotator_a: string;
  annotator_b: string;
  classes: string[];
  matrix: number[][];
  pairs: number;
  percent_agreement: number;
  kappa: number | null;
}

export interface ProportionEntry {
  key: string;
  fraction: string;
  decimal: number;
}

export interface ProportionsReport {
  dimension: string;
  entries: ProportionEntry[];
}

export interface CrosstabReport {
  categories: string[];
  labels: string[];
  counts: number[][];
  total: number;
}

export interface Job {
  id: string;
  kind: string;
  status: string;
  result: Record<string, unknown> | null;
  error: string | null;
}

export interface AnnotationInput {
  question_id: string;
  annotator: string;
  label: string;
  theme?: string | null;
  decision?: string;
}

export interface QuestionFilter {
  challenge?: string;
  category?: string;
  anchorStatus?: string;
}

/** Error raised for any non-2xx API response. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly name: string,
    public readonly detail: string,
  ) {
    super(`${name}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly token: string | null = null,
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = {
      ...(init.headers as Record<string, string> | undefined),
    };
    if (init.body !== undefined) {
      headers['Content-Type'] = 'application/json';
    }
    if (this.token !== null) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    const response = await fetch(`${this.baseUrl}${path}`, { ...init, headers });
    if (!response.ok) {
      let name = 'ApiError';
      let detail = response.statusText;
      try {
        const payload = await response.json();
        name = payload.error ?? name;
        detail = payload.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, name, detail);
    }
    return response.json() as Promise<T>;
  }

  listChallenges(): Promise<Challenge[]> {
    return this.request('/api/challenges');
  }

  getChallenge(id: string): Promise<Challenge> {
    return this.request(`/api/challenges/${encodeURIComponent(id)}`);
  }

  listQuestions(filter: QuestionFilter = {}): Promise<Question[]> {
    const params = new URLSearchParams();
    if (filter.challenge) params.set('challenge', filter.challenge);
    if (filter.category) params.set('category', filter.category);
    if (filter.anchorStatus) params.set('anchor_status', filter.anchorStatus);
    const query = params.toString();
    return this.request(`/api/questions${query ? `?${query}` : ''}`);
  }

  getQuestion(id: string): Promise<Question> {
    return this.request(`/api/questions/${encodeURIComponent(id)}`);
  }

  submitAnnotation(input: AnnotationInput): Promise<Annotation> {
    return this.request('/api/annotations', {
      method: 'POST',
      body: JSON.stringify(input),
    });
  }

  listThemes(): Promise<Theme[]> {
    return this.request('/api/themes');
  }

  addTheme(id: string, displayName: string, description: string): Promise<Theme> {
    return this.request('/api/themes', {
      method: 'POST',
      body: JSON.stringify({ id, display_name: displayName, description }),
    });
  }

  listLabels(): Promise<LabelDefinition[]> {
    return this.request('/api/labels');
  }

  agreement(annotatorA: string, annotatorB: string, challenge?: string): Promise<AgreementReport> {
    const params = new URLSearchParams({ annotator_a: annotatorA, annotator_b: annotatorB });
    if (challenge) params.set('challenge', challenge);
    return this.request(`/api/reports/agreement?${params}`);
  }

  proportions(dimension: string, challenge?: string): Promise<ProportionsReport> {
    const params = new URLSearchParams({ dimension });
    if (challenge) params.set('challenge', challenge);
    return this.request(`/api/reports/proportions?${params}`);
  }

  crosstab(challenge?: string): Promise<CrosstabReport> {
    const params = new URLSearchParams();
    if (challenge) params.set('challenge', challenge);
    const query = params.toString();
    return this.request(`/api/reports/crosstab${query ? `?${query}` : ''}`);
  }

  startJob(kind: string, challenges?: string[], categories?: string[], refresh = false): Promise<Job> {
    return this.request('/api/jobs', {
      method: 'POST',
      body: JSON.stringify({ kind, challenges, categories, refresh }),
    });
  }

  getJob(id: string): Promise<Job> {
    return this.request(`/api/jobs/${encodeURIComponent(id)}`);
  }
}
