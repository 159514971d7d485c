// Thin client for the annotation service; the queue owns retry policy.

import { DecisionBody, UiPage } from './types.js';

export type SubmitOutcome =
  | { kind: 'accepted' }
  | { kind: 'conflict' }
  | { kind: 'rejected'; detail: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async fetchPending(limit: number, cursor: string | null): Promise<UiPage> {
    const params = new URLSearchParams({ status: 'pending', limit: String(limit) });
    if (cursor) {
      params.set('cursor', cursor);
    }
    const resp = await this.fetchFn(`${this.baseUrl}/uis?${params.toString()}`);
    if (!resp.ok) {
      throw new Error(`pending page fetch failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as UiPage;
  }

  /** Network errors propagate as exceptions; HTTP outcomes are returned. */
  async submitDecision(recordId: string, body: DecisionBody): Promise<SubmitOutcome> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/uis/${encodeURIComponent(recordId)}/decision`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      },
    );
    if (resp.ok) {
      return { kind: 'accepted' };
    }
    if (resp.status === 409) {
      return { kind: 'conflict' };
    }
    if (resp.status === 422) {
      const detail = await resp.text().catch(() => '');
      return { kind: 'rejected', detail };
    }
    throw new Error(`decision failed: HTTP ${resp.status}`);
  }

  screenshotUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }
}
