// Session store: canvas state with undo/redo and deterministic replay.
//
// Every mutation snapshots the previous state onto the undo stack, so undo
// restores it exactly. Serialization captures the full state; restoring it
// into a fresh store and replaying yields an identical canvas and an
// identical synthesis payload (the determinism the tests pin down).

import { CanvasState, Stroke } from "./types.js";

export const DEFAULT_CANVAS_SIZE = 64;

export function emptyState(canvasSize: number = DEFAULT_CANVAS_SIZE): CanvasState {
  return {
    strokes: [],
    backgroundEdgeB64: null,
    backgroundGray: null,
    style: { referenceId: null, blend: null },
    canvasSize,
  };
}

function cloneState(state: CanvasState): CanvasState {
  return {
    strokes: state.strokes.map((s) => ({
      op: s.op,
      width: s.width,
      points: s.points.map((p) => ({ x: p.x, y: p.y })),
    })),
    backgroundEdgeB64: state.backgroundEdgeB64,
    backgroundGray: state.backgroundGray === null ? null : [...state.backgroundGray],
    style: {
      referenceId: state.style.referenceId,
      blend: state.style.blend ? { ...state.style.blend } : null,
    },
    canvasSize: state.canvasSize,
  };
}

export class SessionStore {
  private state: CanvasState;
  private undoStack: CanvasState[] = [];
  private redoStack: CanvasState[] = [];

  constructor(canvasSize: number = DEFAULT_CANVAS_SIZE) {
    this.state = emptyState(canvasSize);
  }

  current(): CanvasState {
    return cloneState(this.state);
  }

  private commit(next: CanvasState): void {
    this.undoStack.push(cloneState(this.state));
    this.redoStack = [];
    this.state = next;
  }

  addStroke(stroke: Stroke): void {
    const next = cloneState(this.state);
    next.strokes.push({
      op: stroke.op,
      width: stroke.width,
      points: stroke.points.map((p) => ({ x: p.x, y: p.y })),
    });
    this.commit(next);
  }

  setBackground(edgeB64: string | null, gray: number[] | null): void {
    const next = cloneState(this.state);
    next.backgroundEdgeB64 = edgeB64;
    next.backgroundGray = gray === null ? null : [...gray];
    this.commit(next);
  }

  pickReference(referenceId: string): void {
    const next = cloneState(this.state);
    next.style = { referenceId, blend: null };
    this.commit(next);
  }

  pickBlend(ref1Id: string, ref2Id: string, gamma: number): void {
    const next = cloneState(this.state);
    next.style = { referenceId: null, blend: { ref1Id, ref2Id, gamma } };
    this.commit(next);
  }

  setGamma(gamma: number): void {
    if (!this.state.style.blend) {
      throw new Error("setGamma requires an active two-reference blend");
    }
    const next = cloneState(this.state);
    next.style.blend = { ...next.style.blend!, gamma };
    this.commit(next);
  }

  clearStrokes(): void {
    const next = cloneState(this.state);
    next.strokes = [];
    this.commit(next);
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): void {
    const prev = this.undoStack.pop();
    if (prev === undefined) return;
    this.redoStack.push(cloneState(this.state));
    this.state = prev;
  }

  redo(): void {
    const next = this.redoStack.pop();
    if (next === undefined) return;
    this.undoStack.push(cloneState(this.state));
    this.state = next;
  }

  // --- persistence -----------------------------------------------------------

  serialize(): string {
    return JSON.stringify({ version: 1, state: this.state });
  }

  static restore(serialized: string): SessionStore {
    const parsed = JSON.parse(serialized) as { version: number; state: CanvasState };
    if (parsed.version !== 1) {
      throw new Error(`unsupported session version ${parsed.version}`);
    }
    const store = new SessionStore(parsed.state.canvasSize);
    store.state = cloneState(parsed.state);
    return store;
  }
}

// The canvas is rendered by replaying draw commands derived purely from the
// state; two states with equal commands render identical canvases.
export interface DrawCommand {
  kind: "background" | "stroke";
  payload: string;
}

export function renderCommands(state: CanvasState): DrawCommand[] {
  const commands: DrawCommand[] = [];
  if (state.backgroundEdgeB64 !== null) {
    commands.push({ kind: "background", payload: state.backgroundEdgeB64 });
  }
  for (const stroke of state.strokes) {
    commands.push({
      kind: "stroke",
      payload: JSON.stringify({
        op: stroke.op,
        width: stroke.width,
        points: stroke.points.map((p) => [p.x, p.y]),
      }),
    });
  }
  return commands;
}

export function statesEqual(a: CanvasState, b: CanvasState): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
