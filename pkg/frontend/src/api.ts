import type {
  CandidateAssets,
  CandidateView,
  ExportEntry,
  PaletteColor,
  StrokeDraft,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

/** Typed wrapper over the review service; the UI talks to nothing else. */
export class ReviewApi {
  constructor(
    private baseUrl: string,
    public reviewer: string,
  ) {}

  async fetchPending(limit: number): Promise<CandidateView[]> {
    const params = new URLSearchParams({
      status: 'pending',
      limit: String(limit),
      reviewer: this.reviewer,
    });
    return asJson(await fetch(`${this.baseUrl}/candidates?${params}`));
  }

  async fetchAssets(id: string): Promise<CandidateAssets> {
    return asJson(await fetch(`${this.baseUrl}/candidates/${id}/assets`));
  }

  async postVerdict(id: string, verdict: 'accept' | 'reject'): Promise<CandidateView> {
    return asJson(
      await fetch(`${this.baseUrl}/candidates/${id}/verdict`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ verdict, reviewer: this.reviewer }),
      }),
    );
  }

  async postScribble(id: string, strokes: StrokeDraft[]): Promise<CandidateAssets> {
    return asJson(
      await fetch(`${this.baseUrl}/candidates/${id}/scribble`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ strokes, reviewer: this.reviewer }),
      }),
    );
  }

  async fetchPalette(): Promise<PaletteColor[]> {
    const body = await asJson<{ colors: PaletteColor[] }>(await fetch(`${this.baseUrl}/palette`));
    return body.colors;
  }

  async fetchExport(): Promise<ExportEntry[]> {
    const body = await asJson<{ entries: ExportEntry[] }>(await fetch(`${this.baseUrl}/export`));
    return body.entries;
  }
}
