import type { PaletteColor, StrokeDraft } from './types.js';

/**
 * Freehand stroke capture over the input preview.
 *
 * Pointer positions arrive in canvas (CSS) coordinates and are converted to
 * image-pixel space before they are stored, so the server rasterizes exactly
 * what the reviewer drew regardless of how the preview is scaled.
 */
export class StrokePad {
  private strokes: StrokeDraft[] = [];
  private active: [number, number][] | null = null;
  color: [number, number, number];
  thickness = 4;

  constructor(
    private palette: PaletteColor[],
    /** image width / canvas width (and same for height) */
    private scaleX: number,
    private scaleY: number,
  ) {
    if (palette.length === 0) throw new Error('palette is empty');
    this.color = palette[0].rgb;
  }

  setScale(scaleX: number, scaleY: number): void {
    this.scaleX = scaleX;
    this.scaleY = scaleY;
  }

  /** Only palette colors are selectable; anything else is rejected. */
  setColor(rgb: [number, number, number]): void {
    const ok = this.palette.some((c) => c.rgb[0] === rgb[0] && c.rgb[1] === rgb[1] && c.rgb[2] === rgb[2]);
    if (!ok) throw new Error(`color ${rgb.join(',')} is not in the palette`);
    this.color = rgb;
  }

  toImage(canvasX: number, canvasY: number): [number, number] {
    return [canvasX * this.scaleX, canvasY * this.scaleY];
  }

  begin(canvasX: number, canvasY: number): void {
    this.active = [this.toImage(canvasX, canvasY)];
  }

  extend(canvasX: number, canvasY: number): void {
    if (this.active) this.active.push(this.toImage(canvasX, canvasY));
  }

  end(): void {
    if (this.active && this.active.length >= 2) {
      this.strokes.push({ points: this.active, color: this.color, thickness: this.thickness });
    }
    this.active = null; // single-point taps are dropped, not submitted
  }

  undo(): void {
    this.strokes.pop();
  }

  clear(): void {
    this.strokes = [];
    this.active = null;
  }

  get drafts(): StrokeDraft[] {
    return this.strokes.map((s) => ({ ...s, points: [...s.points] }));
  }

  get count(): number {
    return this.strokes.length;
  }

  /** Empty submissions are blocked on the client before any request is made. */
  canSubmit(): boolean {
    return this.strokes.length > 0;
  }
}
