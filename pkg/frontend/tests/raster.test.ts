import { inflateSync } from "node:zlib";
import { describe, expect, it } from "vitest";

import { blankEdgeB64, pngFromGray } from "../src/api.js";
import { rasterizeStrokes } from "../src/raster.js";
import { emptyState } from "../src/session.js";
import { CanvasState } from "../src/types.js";

function stateWith(strokes: CanvasState["strokes"], size = 16): CanvasState {
  const state = emptyState(size);
  state.strokes = strokes;
  return state;
}

describe("stroke rasterization", () => {
  it("stamps a single dot for a one-point stroke", () => {
    const gray = rasterizeStrokes(
      stateWith([{ op: "add", width: 1, points: [{ x: 5, y: 7 }] }]),
    );
    expect(gray[7 * 16 + 5]).toBe(255);
    expect(gray.reduce((a, b) => a + (b > 0 ? 1 : 0), 0)).toBe(1);
  });

  it("draws a horizontal line", () => {
    const gray = rasterizeStrokes(
      stateWith([{ op: "add", width: 1, points: [{ x: 2, y: 8 }, { x: 13, y: 8 }] }]),
    );
    for (let x = 2; x <= 13; x++) expect(gray[8 * 16 + x]).toBe(255);
  });

  it("erase removes previously added pixels", () => {
    const gray = rasterizeStrokes(
      stateWith([
        { op: "add", width: 1, points: [{ x: 2, y: 8 }, { x: 13, y: 8 }] },
        { op: "erase", width: 3, points: [{ x: 7, y: 8 }] },
      ]),
    );
    expect(gray[8 * 16 + 7]).toBe(0);
    expect(gray[8 * 16 + 2]).toBe(255);
  });

  it("wider brushes cover more pixels", () => {
    const thin = rasterizeStrokes(
      stateWith([{ op: "add", width: 1, points: [{ x: 3, y: 8 }, { x: 12, y: 8 }] }]),
    );
    const thick = rasterizeStrokes(
      stateWith([{ op: "add", width: 5, points: [{ x: 3, y: 8 }, { x: 12, y: 8 }] }]),
    );
    const count = (g: Uint8Array) => g.reduce((a, b) => a + (b > 0 ? 1 : 0), 0);
    expect(count(thick)).toBeGreaterThan(2 * count(thin));
  });

  it("clips strokes at the canvas border", () => {
    const gray = rasterizeStrokes(
      stateWith([{ op: "add", width: 3, points: [{ x: 14, y: 8 }, { x: 30, y: 8 }] }]),
    );
    expect(gray.length).toBe(256);
    expect(gray[8 * 16 + 15]).toBe(255);
  });

  it("composites strokes over the uploaded background", () => {
    const state = emptyState(8);
    state.backgroundGray = new Array(64).fill(40);
    state.strokes = [{ op: "add", width: 1, points: [{ x: 2, y: 2 }] }];
    const gray = rasterizeStrokes(state);
    expect(gray[2 * 8 + 2]).toBe(255);
    expect(gray[0]).toBe(40);
  });

  it("rejects a background buffer of the wrong size", () => {
    const state = emptyState(8);
    state.backgroundGray = [1, 2, 3];
    expect(() => rasterizeStrokes(state)).toThrow(/size/);
  });
});

// Decode our own encoder's output with node's zlib as an independent check.
function decodePng(b64: string): { size: number; gray: Uint8Array } {
  const bytes = Buffer.from(b64, "base64");
  expect([...bytes.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  let offset = 8;
  let size = 0;
  const idat: Buffer[] = [];
  while (offset < bytes.length) {
    const length = bytes.readUInt32BE(offset);
    const type = bytes.subarray(offset + 4, offset + 8).toString("ascii");
    const data = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      size = data.readUInt32BE(0);
      expect(data.readUInt32BE(4)).toBe(size);
      expect(data[8]).toBe(8); // bit depth
      expect(data[9]).toBe(0); // grayscale
    } else if (type === "IDAT") {
      idat.push(Buffer.from(data));
    }
    offset += 12 + length;
  }
  const raw = inflateSync(Buffer.concat(idat));
  const gray = new Uint8Array(size * size);
  for (let y = 0; y < size; y++) {
    expect(raw[y * (size + 1)]).toBe(0); // filter byte
    gray.set(raw.subarray(y * (size + 1) + 1, (y + 1) * (size + 1)), y * size);
  }
  return { size, gray };
}

describe("png encoder", () => {
  it("round-trips pixel buffers through an independent decoder", () => {
    const size = 32;
    const gray = new Uint8Array(size * size);
    for (let i = 0; i < gray.length; i++) gray[i] = (i * 37) % 256;
    const decoded = decodePng(pngFromGray(size, gray));
    expect(decoded.size).toBe(size);
    expect([...decoded.gray]).toEqual([...gray]);
  });

  it("blank canvas encodes to an all-zero edge map", () => {
    const decoded = decodePng(blankEdgeB64(16));
    expect(decoded.gray.every((v) => v === 0)).toBe(true);
  });

  it("is deterministic", () => {
    const gray = new Uint8Array(64).fill(9);
    expect(pngFromGray(8, gray)).toBe(pngFromGray(8, gray));
  });

  it("rejects mismatched buffer sizes", () => {
    expect(() => pngFromGray(8, new Uint8Array(3))).toThrow(/size/);
  });
});
