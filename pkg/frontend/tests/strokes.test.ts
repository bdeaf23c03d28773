import { describe, expect, it } from 'vitest';

import { StrokePad } from '../src/strokes.js';
import type { PaletteColor } from '../src/types.js';

const PALETTE: PaletteColor[] = [
  { name: 'red', rgb: [240, 16, 16] },
  { name: 'blue', rgb: [16, 16, 240] },
];

describe('StrokePad', () => {
  it('converts canvas coordinates to image pixels', () => {
    // preview is shown at half size: image/canvas scale factor is 2
    const pad = new StrokePad(PALETTE, 2, 2);
    pad.begin(10, 20);
    pad.extend(15, 25);
    pad.end();
    expect(pad.drafts[0].points).toEqual([
      [20, 40],
      [30, 50],
    ]);
  });

  it('drops single-point taps instead of submitting them', () => {
    const pad = new StrokePad(PALETTE, 1, 1);
    pad.begin(5, 5);
    pad.end();
    expect(pad.count).toBe(0);
    expect(pad.canSubmit()).toBe(false);
  });

  it('undo removes only the last stroke', () => {
    const pad = new StrokePad(PALETTE, 1, 1);
    pad.begin(0, 0);
    pad.extend(5, 5);
    pad.end();
    pad.begin(10, 10);
    pad.extend(20, 20);
    pad.end();
    expect(pad.count).toBe(2);
    pad.undo();
    expect(pad.count).toBe(1);
    expect(pad.drafts[0].points[0]).toEqual([0, 0]);
  });

  it('restricts colors to the palette', () => {
    const pad = new StrokePad(PALETTE, 1, 1);
    pad.setColor([16, 16, 240]);
    expect(pad.color).toEqual([16, 16, 240]);
    expect(() => pad.setColor([1, 2, 3])).toThrow(/palette/);
  });

  it('records the active color and thickness on each stroke', () => {
    const pad = new StrokePad(PALETTE, 1, 1);
    pad.thickness = 6;
    pad.setColor([16, 16, 240]);
    pad.begin(0, 0);
    pad.extend(9, 9);
    pad.end();
    expect(pad.drafts[0].color).toEqual([16, 16, 240]);
    expect(pad.drafts[0].thickness).toBe(6);
  });

  it('rescaling applies to strokes drawn afterwards', () => {
    const pad = new StrokePad(PALETTE, 1, 1);
    pad.setScale(3, 3);
    pad.begin(2, 2);
    pad.extend(4, 4);
    pad.end();
    expect(pad.drafts[0].points).toEqual([
      [6, 6],
      [12, 12],
    ]);
  });
});
