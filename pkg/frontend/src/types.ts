// Shared types for the sketchpad session and the service wire format.

export type StrokeOp = "add" | "erase";

export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  op: StrokeOp;
  points: Point[];
  width: number;
}

// Style selection: a single gallery reference, or a two-reference blend
// controlled by gamma (gamma = 1 means pure first reference).
export interface StyleChoice {
  referenceId: string | null;
  blend: { ref1Id: string; ref2Id: string; gamma: number } | null;
}

export interface CanvasState {
  strokes: Stroke[];
  // standardized edge of an uploaded photo: base64 PNG for display plus the
  // decoded grayscale pixels (row-major, 0..255) for payload rasterization
  backgroundEdgeB64: string | null;
  backgroundGray: number[] | null;
  style: StyleChoice;
  canvasSize: number;
}

export interface SynthesizeRequestPayload {
  sketch_png_b64: string;
  invert: boolean;
  reference_id?: string;
  style?: { ref1_id: string; ref2_id: string; gamma: number };
}

export interface ReferenceEntry {
  id: string;
  thumbnail_png_b64: string;
}

export interface ServiceResult {
  photo_png_b64: string;
  edge_png_b64: string;
}
