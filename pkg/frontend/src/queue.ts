import { ApiError } from './api.js';
import type { CandidateAssets, CandidateView, StrokeDraft } from './types.js';

export type QueueStatus = 'idle' | 'loading' | 'reviewing' | 'empty' | 'offline';

export interface QueueEvents {
  onCandidate?: (c: CandidateView, assets: CandidateAssets) => void;
  onStatus?: (status: QueueStatus, notice?: string) => void;
}

/** The slice of the review API the queue consumes (mockable in tests). */
export interface QueueApi {
  fetchPending(limit: number): Promise<CandidateView[]>;
  fetchAssets(id: string): Promise<CandidateAssets>;
  postVerdict(id: string, verdict: 'accept' | 'reject'): Promise<CandidateView>;
  postScribble(id: string, strokes: StrokeDraft[]): Promise<CandidateAssets>;
}

/**
 * The review loop: hold a small leased batch, surface one candidate at a
 * time, post decisions immediately, and advance. Conflicts (expired lease,
 * decided elsewhere) drop the candidate and refresh the queue with a notice
 * instead of failing silently.
 */
export class ReviewQueue {
  private batch: CandidateView[] = [];
  private assets = new Map<string, CandidateAssets>();
  current: CandidateView | null = null;
  status: QueueStatus = 'idle';
  notice = '';
  decided: { id: string; verdict: 'accept' | 'reject' }[] = [];

  constructor(
    private api: QueueApi,
    private events: QueueEvents = {},
    private batchSize = 5,
    private now: () => number = () => Date.now() / 1000,
  ) {}

  private setStatus(status: QueueStatus, notice = ''): void {
    this.status = status;
    this.notice = notice;
    this.events.onStatus?.(status, notice);
  }

  leaseStale(c: CandidateView): boolean {
    return c.lease_expiry !== null && c.lease_expiry <= this.now();
  }

  async refresh(notice = ''): Promise<void> {
    this.setStatus('loading', notice);
    try {
      this.batch = await this.api.fetchPending(this.batchSize);
    } catch (err) {
      // offline or server error: keep state, show a retry banner, lose nothing
      this.setStatus('offline', err instanceof Error ? err.message : String(err));
      return;
    }
    this.assets.clear();
    await this.advance(notice);
  }

  async advance(notice = ''): Promise<void> {
    const next = this.batch.shift() ?? null;
    if (next === null) {
      this.current = null;
      this.setStatus('empty', notice || 'queue drained');
      return;
    }
    if (this.leaseStale(next)) {
      // our lease lapsed while the candidate sat in the local batch
      await this.refresh('lease expired, refetching');
      return;
    }
    try {
      const assets = await this.api.fetchAssets(next.id);
      this.current = next;
      this.assets.set(next.id, assets);
      this.setStatus('reviewing', notice);
      this.events.onCandidate?.(next, assets);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        await this.advance(`candidate ${next.id} vanished`);
        return;
      }
      this.setStatus('offline', err instanceof Error ? err.message : String(err));
    }
  }

  currentAssets(): CandidateAssets | null {
    return this.current ? (this.assets.get(this.current.id) ?? null) : null;
  }

  async decide(verdict: 'accept' | 'reject'): Promise<void> {
    if (!this.current) return;
    const id = this.current.id;
    try {
      await this.api.postVerdict(id, verdict);
      this.decided.push({ id, verdict });
      await this.advance();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // decided elsewhere or lease lost: surface it and refill the queue
        await this.refresh(`conflict on ${id}: ${err.detail}`);
        return;
      }
      this.setStatus('offline', err instanceof Error ? err.message : String(err));
    }
  }

  /** Submit reviewer strokes for the current candidate; returns the
   * server-rendered confirmation assets (new input with the stroke baked in). */
  async submitStrokes(strokes: StrokeDraft[]): Promise<CandidateAssets | null> {
    if (!this.current || strokes.length === 0) return null;
    const id = this.current.id;
    try {
      const assets = await this.api.postScribble(id, strokes);
      this.assets.set(id, assets);
      this.events.onCandidate?.(this.current, assets);
      return assets;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh(`conflict on ${id}: ${err.detail}`);
        return null;
      }
      this.setStatus('offline', err instanceof Error ? err.message : String(err));
      return null;
    }
  }
}
