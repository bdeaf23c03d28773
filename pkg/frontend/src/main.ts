import { ReviewApi } from './api.js';
import { ReviewQueue } from './queue.js';
import { StrokePad } from './strokes.js';
import type { CandidateAssets, CandidateView, PaletteColor } from './types.js';

const params = new URLSearchParams(location.search);
const serverUrl = params.get('server') ?? 'http://127.0.0.1:8080';
const reviewer = params.get('reviewer') ?? `reviewer-${Math.random().toString(36).slice(2, 8)}`;

const el = {
  status: document.getElementById('status') as HTMLDivElement,
  instruction: document.getElementById('instruction') as HTMLDivElement,
  meta: document.getElementById('meta') as HTMLDivElement,
  input: document.getElementById('input-img') as HTMLImageElement,
  target: document.getElementById('target-img') as HTMLImageElement,
  overlay: document.getElementById('overlay') as HTMLCanvasElement,
  palette: document.getElementById('palette') as HTMLDivElement,
  accept: document.getElementById('accept') as HTMLButtonElement,
  reject: document.getElementById('reject') as HTMLButtonElement,
  undo: document.getElementById('undo') as HTMLButtonElement,
  submitStrokes: document.getElementById('submit-strokes') as HTMLButtonElement,
  retry: document.getElementById('retry') as HTMLButtonElement,
};

const api = new ReviewApi(serverUrl, reviewer);
let pad: StrokePad | null = null;

function showStatus(text: string, kind: 'ok' | 'warn' | 'err' = 'ok'): void {
  el.status.textContent = text;
  el.status.dataset.kind = kind;
  el.retry.hidden = kind !== 'err';
}

function syncOverlay(): void {
  const rect = el.input.getBoundingClientRect();
  el.overlay.width = rect.width;
  el.overlay.height = rect.height;
  el.overlay.style.left = `${el.input.offsetLeft}px`;
  el.overlay.style.top = `${el.input.offsetTop}px`;
  if (pad && el.input.naturalWidth) {
    pad.setScale(el.input.naturalWidth / rect.width, el.input.naturalHeight / rect.height);
  }
}

function showCandidate(c: CandidateView, assets: CandidateAssets): void {
  el.instruction.textContent = assets.instruction;
  el.meta.textContent = `${c.id} · ${c.task} · lease until ${
    c.lease_expiry ? new Date(c.lease_expiry * 1000).toLocaleTimeString() : '-'
  }`;
  el.input.src = `data:image/png;base64,${assets.input_png}`;
  el.target.src = `data:image/png;base64,${assets.target_png}`;
  el.input.onload = syncOverlay;
  pad?.clear();
  drawStrokePreview();
}

const queue = new ReviewQueue(api, {
  onCandidate: showCandidate,
  onStatus: (status, notice) => {
    if (status === 'offline') showStatus(`service unreachable: ${notice}`, 'err');
    else if (status === 'empty') showStatus(notice || 'no pending candidates', 'warn');
    else if (status === 'loading') showStatus('loading…');
    else showStatus(notice || `reviewing as ${reviewer}`);
  },
});

function drawStrokePreview(): void {
  if (!pad) return;
  const ctx = el.overlay.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, el.overlay.width, el.overlay.height);
  const rect = el.input.getBoundingClientRect();
  const sx = el.input.naturalWidth ? rect.width / el.input.naturalWidth : 1;
  const sy = el.input.naturalHeight ? rect.height / el.input.naturalHeight : 1;
  for (const stroke of pad.drafts) {
    ctx.strokeStyle = `rgb(${stroke.color.join(',')})`;
    ctx.lineWidth = stroke.thickness * sx;
    ctx.lineCap = 'round';
    ctx.lineJoin = 'round';
    ctx.beginPath();
    stroke.points.forEach(([x, y], i) => {
      if (i === 0) ctx.moveTo(x * sx, y * sy);
      else ctx.lineTo(x * sx, y * sy);
    });
    ctx.stroke();
  }
}

function buildPalette(colors: PaletteColor[]): void {
  el.palette.replaceChildren();
  for (const color of colors) {
    const btn = document.createElement('button');
    btn.className = 'swatch';
    btn.title = color.name;
    btn.style.background = `rgb(${color.rgb.join(',')})`;
    btn.addEventListener('click', () => {
      pad?.setColor(color.rgb);
      document.querySelectorAll('.swatch').forEach((b) => b.classList.remove('active'));
      btn.classList.add('active');
    });
    el.palette.append(btn);
  }
}

let drawing = false;
el.overlay.addEventListener('pointerdown', (ev) => {
  if (!pad) return;
  drawing = true;
  el.overlay.setPointerCapture(ev.pointerId);
  pad.begin(ev.offsetX, ev.offsetY);
});
el.overlay.addEventListener('pointermove', (ev) => {
  if (drawing && pad) {
    pad.extend(ev.offsetX, ev.offsetY);
    drawStrokePreview();
  }
});
el.overlay.addEventListener('pointerup', () => {
  drawing = false;
  pad?.end();
  drawStrokePreview();
  el.submitStrokes.disabled = !pad?.canSubmit();
});

el.accept.addEventListener('click', () => void queue.decide('accept'));
el.reject.addEventListener('click', () => void queue.decide('reject'));
el.undo.addEventListener('click', () => {
  pad?.undo();
  drawStrokePreview();
  el.submitStrokes.disabled = !pad?.canSubmit();
});
el.submitStrokes.addEventListener('click', () => {
  if (!pad?.canSubmit()) return; // empty submissions never leave the client
  void queue.submitStrokes(pad.drafts).then((assets) => {
    if (assets) {
      pad?.clear();
      el.submitStrokes.disabled = true;
      showStatus('scribble saved; input re-rendered by the server');
    }
  });
});
el.retry.addEventListener('click', () => void queue.refresh('retrying'));

document.addEventListener('keydown', (ev) => {
  if (ev.target instanceof HTMLInputElement) return;
  if (ev.key === 'a' || ev.key === 'A') void queue.decide('accept');
  if (ev.key === 'r' || ev.key === 'R') void queue.decide('reject');
  if (ev.key === 'u' || ev.key === 'U') el.undo.click();
});
window.addEventListener('resize', () => {
  syncOverlay();
  drawStrokePreview();
});

async function start(): Promise<void> {
  showStatus('connecting…');
  try {
    const palette = await api.fetchPalette();
    pad = new StrokePad(palette, 1, 1);
    buildPalette(palette);
  } catch (err) {
    showStatus(`service unreachable: ${err instanceof Error ? err.message : err}`, 'err');
    return;
  }
  await queue.refresh();
}

void start();
