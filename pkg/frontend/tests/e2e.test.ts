// Scripted review session against the real service: seeds a candidate
// store via the stage-2 stub pipeline, serves it with `forge review-serve`,
// accepts 3 / rejects 2 / draws one replacement stroke, then checks the
// export set and the stroke pixels in the re-rendered input.

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ReviewApi } from '../src/api.js';
import type { StrokeDraft } from '../src/types.js';
import { decodePng, pixelAt } from './png.js';

const repoRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '../..');
const PORT = 8731;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let storeDir = '';

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastErr: unknown = null;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/jobs/health`);
      if (resp.ok) return;
    } catch (err) {
      lastErr = err;
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error(`service did not come up: ${lastErr}`);
}

beforeAll(async () => {
  storeDir = mkdtempSync(path.join(tmpdir(), 'forge-ui-e2e-'));
  execFileSync(
    'forge',
    [
      'stage2-candidates',
      '--images',
      path.join(repoRoot, 'fixtures', 'real'),
      '--store',
      storeDir,
      '--seed',
      '1',
    ],
    { cwd: repoRoot, stdio: 'pipe' },
  );
  server = spawn('forge', ['review-serve', '--store', storeDir, '--port', String(PORT)], {
    cwd: repoRoot,
    stdio: 'pipe',
  });
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill('SIGTERM');
  if (storeDir) rmSync(storeDir, { recursive: true, force: true });
});

describe('scripted review session', () => {
  it('accepts 3, rejects 2, draws a stroke, and exports exactly the accepted ids', async () => {
    const api = new ReviewApi(BASE, 'ui-e2e');
    const palette = await api.fetchPalette();
    expect(palette.length).toBeGreaterThanOrEqual(4);

    const batch = await api.fetchPending(6);
    expect(batch.length).toBe(6);
    for (const c of batch) expect(c.lease_reviewer).toBe('ui-e2e');

    // replace the first candidate's scribble with a hand-drawn stroke
    const strokeColor = palette[2].rgb;
    const stroke: StrokeDraft = {
      points: [
        [12, 14],
        [58, 32],
        [92, 78],
      ],
      color: strokeColor,
      thickness: 5,
    };
    const updated = await api.postScribble(batch[0].id, [stroke]);
    expect(updated.id).toBe(batch[0].id);

    // server-side render: the returned input must carry the palette color
    // along the drawn path
    const png = decodePng(Uint8Array.from(Buffer.from(updated.input_png, 'base64')));
    const samples: [number, number][] = [];
    for (let i = 0; i + 1 < stroke.points.length; i++) {
      const [x0, y0] = stroke.points[i];
      const [x1, y1] = stroke.points[i + 1];
      for (const t of [0, 0.25, 0.5, 0.75, 1]) {
        samples.push([Math.round(x0 + (x1 - x0) * t), Math.round(y0 + (y1 - y0) * t)]);
      }
    }
    for (const [x, y] of samples) {
      const [r, g, b] = pixelAt(png, x, y);
      expect([r, g, b]).toEqual([...strokeColor]);
    }

    // decide: accept the stroked one plus two more, reject two, leave one
    const accepted = [batch[0].id, batch[1].id, batch[2].id];
    const rejected = [batch[3].id, batch[4].id];
    for (const id of accepted) {
      const view = await api.postVerdict(id, 'accept');
      expect(view.status).toBe('accepted');
    }
    for (const id of rejected) {
      const view = await api.postVerdict(id, 'reject');
      expect(view.status).toBe('rejected');
    }

    const entries = await api.fetchExport();
    expect(entries.map((e) => e.id).sort()).toEqual([...accepted].sort());
    for (const entry of entries) expect(entry.provenance).toBe('real-accepted');

    // the displayed status matches a subsequent direct read
    const pendingLeft = await api.fetchPending(6);
    expect(pendingLeft.map((c) => c.id)).toEqual([batch[5].id]);
  }, 60_000);

  it('rejects a verdict from a reviewer without the lease (409 surfaced)', async () => {
    const api = new ReviewApi(BASE, 'someone-else');
    const batch = await new ReviewApi(BASE, 'ui-e2e').fetchPending(1);
    expect(batch.length).toBe(1);
    await expect(api.postVerdict(batch[0].id, 'accept')).rejects.toMatchObject({ status: 409 });
  }, 60_000);
});
