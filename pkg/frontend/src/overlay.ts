// Box geometry for drawing view-hierarchy rectangles over the screenshot.

import { Box, ScreenSize } from './types.js';

export interface ScaledBox {
  left: number;
  top: number;
  width: number;
  height: number;
}

/**
 * Map screen-coordinate boxes onto the displayed image size.
 *
 * Every payload box yields exactly one entry: boxes reaching outside the
 * screen are clipped to the displayed area (possibly to zero size) but
 * never dropped, so the overlay count always equals the payload count.
 */
export function scaleBoxes(
  boxes: Box[],
  screen: ScreenSize,
  displayWidth: number,
  displayHeight: number,
): ScaledBox[] {
  const sx = displayWidth / screen.width;
  const sy = displayHeight / screen.height;
  return boxes.map((box) => {
    const left = clamp(box.left * sx, 0, displayWidth);
    const top = clamp(box.top * sy, 0, displayHeight);
    const right = clamp(box.right * sx, 0, displayWidth);
    const bottom = clamp(box.bottom * sy, 0, displayHeight);
    return { left, top, width: right - left, height: bottom - top };
  });
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}
