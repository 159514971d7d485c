// Pending-record queue: prefetches ahead of the annotator and keeps every
// decision safe across conflicts and network loss.

import { AnnotationApi } from './api.js';
import { DecisionBody, UiRecord } from './types.js';

export type SubmitResult = 'advanced' | 'conflict' | 'rejected' | 'offline';

export interface QueueOptions {
  pageSize?: number;
  /** Refill the buffer when it drops to this many records. */
  prefetchAt?: number;
}

interface RetainedDecision {
  recordId: string;
  body: DecisionBody;
}

export class AnnotationQueue {
  private buffer: UiRecord[] = [];
  private cursor: string | null = null;
  private exhausted = false;
  private decidedCount = 0;
  private lastNotice = '';
  private lastRejection = '';
  private retained: RetainedDecision[] = [];
  private readonly pageSize: number;
  private readonly prefetchAt: number;

  constructor(
    private readonly api: AnnotationApi,
    options: QueueOptions = {},
  ) {
    this.pageSize = options.pageSize ?? 10;
    this.prefetchAt = options.prefetchAt ?? 2;
  }

  current(): UiRecord | null {
    return this.buffer[0] ?? null;
  }

  /** Next record after the current one; lets the view preload its image. */
  upNext(): UiRecord | null {
    return this.buffer[1] ?? null;
  }

  progress(): { decided: number; buffered: number } {
    return { decided: this.decidedCount, buffered: this.buffer.length };
  }

  notice(): string {
    return this.lastNotice;
  }

  rejection(): string {
    return this.lastRejection;
  }

  pendingRetries(): number {
    return this.retained.length;
  }

  async start(): Promise<void> {
    await this.refill();
  }

  /**
   * Submit a decision for the current record.
   *
   * accepted -> advance; 409 -> drop with a notice (someone else decided
   * it, nothing is lost); 422 -> stay and surface the field errors;
   * network failure -> retain the decision for later retry and advance so
   * annotation can continue on prefetched records.
   */
  async submit(body: DecisionBody): Promise<SubmitResult> {
    const record = this.current();
    if (!record) {
      this.lastNotice = 'queue is empty';
      return 'rejected';
    }
    this.lastNotice = '';
    this.lastRejection = '';
    await this.flushRetained();
    let outcome;
    try {
      outcome = await this.api.submitDecision(record.record_id, body);
    } catch {
      this.retained.push({ recordId: record.record_id, body });
      this.lastNotice = `offline: decision for ${record.record_id} kept for retry`;
      await this.advance();
      return 'offline';
    }
    if (outcome.kind === 'accepted') {
      this.decidedCount += 1;
      await this.advance();
      return 'advanced';
    }
    if (outcome.kind === 'conflict') {
      this.lastNotice = `${record.record_id} was already decided elsewhere; skipped`;
      await this.advance();
      return 'conflict';
    }
    this.lastRejection = outcome.detail || 'the service rejected the decision';
    return 'rejected';
  }

  /** Replay decisions kept through an outage; stops at the first failure. */
  async flushRetained(): Promise<void> {
    while (this.retained.length > 0) {
      const next = this.retained[0];
      let outcome;
      try {
        outcome = await this.api.submitDecision(next.recordId, next.body);
      } catch {
        return;
      }
      this.retained.shift();
      if (outcome.kind === 'accepted') {
        this.decidedCount += 1;
      }
    }
  }

  private async advance(): Promise<void> {
    this.buffer.shift();
    if (this.buffer.length <= this.prefetchAt && !this.exhausted) {
      await this.refill();
    }
  }

  private async refill(): Promise<void> {
    try {
      const page = await this.api.fetchPending(this.pageSize, this.cursor);
      const known = new Set(this.buffer.map((r) => r.record_id));
      for (const item of page.items) {
        if (!known.has(item.record_id)) {
          this.buffer.push(item);
        }
      }
      if (page.items.length > 0) {
        this.cursor = page.items[page.items.length - 1].record_id;
      }
      this.exhausted = page.next_cursor === null && page.items.length === 0;
    } catch {
      this.lastNotice = 'offline: could not fetch more records';
    }
  }
}
