// Pure stroke rasterization: the exact pixels the service receives.
//
// Mirrors the service's brush semantics (round brush of the stroke width,
// sub-pixel stepping along segments) so what the user drew is what the model
// sees. No canvas APIs: the same code runs in the browser and in node tests.

import { CanvasState, Stroke } from "./types.js";

export function rasterizeStrokes(state: CanvasState): Uint8Array {
  const size = state.canvasSize;
  const gray = new Uint8Array(size * size);
  if (state.backgroundGray !== null) {
    if (state.backgroundGray.length !== size * size) {
      throw new Error("background pixel buffer does not match the canvas size");
    }
    gray.set(state.backgroundGray);
  }
  for (const stroke of state.strokes) {
    stampStroke(gray, size, stroke);
  }
  return gray;
}

function stampStroke(gray: Uint8Array, size: number, stroke: Stroke): void {
  const value = stroke.op === "add" ? 255 : 0;
  const radius = Math.max(0, (stroke.width - 1) / 2);
  const rInt = Math.ceil(radius);
  const r2 = Math.max(radius * radius, 0.25);
  const stamp = (x: number, y: number) => {
    const cx = Math.round(x);
    const cy = Math.round(y);
    for (let dy = -rInt; dy <= rInt; dy++) {
      for (let dx = -rInt; dx <= rInt; dx++) {
        if (dx * dx + dy * dy > r2) continue;
        const px = cx + dx;
        const py = cy + dy;
        if (px >= 0 && px < size && py >= 0 && py < size) {
          gray[py * size + px] = value;
        }
      }
    }
  };
  const pts = stroke.points;
  if (pts.length === 0) return;
  stamp(pts[0].x, pts[0].y);
  for (let i = 1; i < pts.length; i++) {
    const a = pts[i - 1];
    const b = pts[i];
    const dist = Math.hypot(b.x - a.x, b.y - a.y);
    const steps = Math.max(1, Math.ceil(dist / 0.5));
    for (let k = 1; k <= steps; k++) {
      const t = k / steps;
      stamp(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    }
  }
}
