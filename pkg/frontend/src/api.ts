// Thin client for the review gateway. The board never touches files:
// every read and the single mutating call go through these endpoints.

import type {
  ApiErrorBody,
  DecisionsDocument,
  EntryDoc,
  MetricsDoc,
  ReviewBatch,
  SkillDoc,
  SubmitResult,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.status = body.status;
    this.code = body.code;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = '', fetchImpl: FetchLike = (input, init) => fetch(input, init)) {
    this.base = base.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { status: response.status, code: 'http_error', message: response.statusText };
      }
      throw new ApiError(body);
    }
    return (await response.json()) as T;
  }

  pendingBatches(): Promise<ReviewBatch[]> {
    return this.request<ReviewBatch[]>('/api/batches?status=pending');
  }

  batch(batchId: string): Promise<ReviewBatch> {
    return this.request<ReviewBatch>(`/api/batches/${encodeURIComponent(batchId)}`);
  }

  submitDecisions(doc: DecisionsDocument, integrate: boolean): Promise<SubmitResult> {
    const query = integrate ? '?integrate=true' : '';
    return this.request<SubmitResult>(
      `/api/batches/${encodeURIComponent(doc.batch_id)}/decisions${query}`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(doc),
      },
    );
  }

  metrics(): Promise<MetricsDoc> {
    return this.request<MetricsDoc>('/api/metrics');
  }

  entriesByIds(ids: string[]): Promise<EntryDoc[]> {
    return this.request<EntryDoc[]>(`/api/entries?ids=${encodeURIComponent(ids.join(','))}`);
  }

  skill(name: string): Promise<SkillDoc | null> {
    return this.request<SkillDoc>(`/api/skills/${encodeURIComponent(name)}`).catch((err) => {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    });
  }

  decisionsSchema(): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>('/api/schemas/decisions');
  }
}
