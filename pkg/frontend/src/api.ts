// Typed client for the survey service HTTP endpoints.

export interface SessionInfo {
  session_id: string;
  annotator_id: string;
  item_ids: string[];
  started_at: string;
}

export interface ItemPayload {
  item_id: string;
  task: 'intrusion' | 'rating';
  words: string[];
  n_remaining: number;
  n_total: number;
}

export type NextResult = ItemPayload | { done: true };

export interface SubmitRequest {
  item_id: string;
  response: number;
  familiar: boolean;
  duration: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

const RETRY_DELAYS_MS = [250, 1000, 4000];

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class SurveyClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
    private readonly retryDelaysMs: readonly number[] = RETRY_DELAYS_MS,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { 'content-type': 'application/json', ...init?.headers },
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as T;
  }

  createSession(annotatorId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>('/sessions', {
      method: 'POST',
      body: JSON.stringify({ annotator_id: annotatorId }),
    });
  }

  nextItem(sessionId: string): Promise<NextResult> {
    return this.request<NextResult>(`/sessions/${sessionId}/next`);
  }

  /**
   * Submit one answer. Submission is idempotent from the caller's point of
   * view: network failures are retried with backoff, and a 409 (the server
   * already recorded this item, e.g. an earlier attempt whose ack was lost)
   * resolves successfully so the flow skips forward.
   */
  async submitResponse(sessionId: string, body: SubmitRequest): Promise<void> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retryDelaysMs.length; attempt++) {
      try {
        await this.request(`/sessions/${sessionId}/responses`, {
          method: 'POST',
          body: JSON.stringify(body),
        });
        return;
      } catch (err) {
        if (err instanceof ApiError) {
          if (err.status === 409) return; // already recorded
          throw err; // 4xx/5xx other than conflict: not retryable here
        }
        lastError = err; // network failure: retry
        if (attempt < this.retryDelaysMs.length) {
          await sleep(this.retryDelaysMs[attempt]);
        }
      }
    }
    throw lastError;
  }

  async exportCsv(): Promise<string> {
    const resp = await this.fetchImpl(`${this.baseUrl}/export`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return resp.text();
  }
}
