// Service client: payload construction is pure (node-testable), transport is
// a thin fetch wrapper with single-flight semantics (a newer request aborts
// the one in flight) and retry with backoff when the service is unreachable.

import { rasterizeStrokes } from "./raster.js";
import { CanvasState, ReferenceEntry, ServiceResult, SynthesizeRequestPayload } from "./types.js";

// --- minimal grayscale PNG encoder -------------------------------------------
// Fixed layout (8-bit grayscale, stored deflate blocks): deterministic bytes
// for a given pixel buffer, identical in browser and node.

export function pngFromGray(size: number, gray: Uint8Array): string {
  if (gray.length !== size * size) {
    throw new Error("pixel buffer does not match size");
  }
  const raw = new Uint8Array(size * (size + 1));
  for (let y = 0; y < size; y++) {
    raw[y * (size + 1)] = 0; // filter: none
    raw.set(gray.subarray(y * size, (y + 1) * size), y * (size + 1) + 1);
  }
  const png = [
    ...[0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a],
    ...chunk("IHDR", [...be32(size), ...be32(size), 8, 0, 0, 0, 0]),
    ...chunk("IDAT", Array.from(zlibStored(raw))),
    ...chunk("IEND", []),
  ];
  return bytesToBase64(new Uint8Array(png));
}

export function blankEdgeB64(size: number): string {
  return pngFromGray(size, new Uint8Array(size * size));
}

function be32(v: number): number[] {
  return [(v >>> 24) & 0xff, (v >>> 16) & 0xff, (v >>> 8) & 0xff, v & 0xff];
}

function chunk(type: string, data: number[]): number[] {
  const body = [...type.split("").map((c) => c.charCodeAt(0)), ...data];
  return [...be32(data.length), ...body, ...be32(crc32(new Uint8Array(body)))];
}

function zlibStored(data: Uint8Array): Uint8Array {
  const out: number[] = [0x78, 0x01];
  let offset = 0;
  do {
    const block = data.subarray(offset, offset + 65535);
    offset += block.length;
    const final = offset >= data.length ? 1 : 0;
    out.push(final, block.length & 0xff, (block.length >>> 8) & 0xff);
    out.push(~block.length & 0xff, (~block.length >>> 8) & 0xff);
    for (const byte of block) out.push(byte);
  } while (offset < data.length);
  let a = 1;
  let b = 0;
  for (const byte of data) {
    a = (a + byte) % 65521;
    b = (b + a) % 65521;
  }
  out.push(...be32((((b << 16) >>> 0) | a) >>> 0));
  return new Uint8Array(out);
}

let crcTable: Uint32Array | null = null;

function crc32(bytes: Uint8Array): number {
  if (!crcTable) {
    crcTable = new Uint32Array(256);
    for (let n = 0; n < 256; n++) {
      let c = n;
      for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
      crcTable[n] = c >>> 0;
    }
  }
  let crc = 0xffffffff;
  for (const byte of bytes) crc = crcTable[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  return (crc ^ 0xffffffff) >>> 0;
}

function bytesToBase64(bytes: Uint8Array): string {
  const alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const b0 = bytes[i];
    const b1 = i + 1 < bytes.length ? bytes[i + 1] : 0;
    const b2 = i + 2 < bytes.length ? bytes[i + 2] : 0;
    out += alphabet[b0 >> 2];
    out += alphabet[((b0 & 3) << 4) | (b1 >> 4)];
    out += i + 1 < bytes.length ? alphabet[((b1 & 15) << 2) | (b2 >> 6)] : "=";
    out += i + 2 < bytes.length ? alphabet[b2 & 63] : "=";
  }
  return out;
}

// --- payload construction (pure) ----------------------------------------------

// The canvas composition travels as a light-on-dark sketch; `invert: true`
// tells the standardizer that bright pixels are ink.
export function buildSynthesizeRequest(state: CanvasState): SynthesizeRequestPayload {
  const payload: SynthesizeRequestPayload = {
    sketch_png_b64: pngFromGray(state.canvasSize, rasterizeStrokes(state)),
    invert: true,
  };
  if (state.style.blend !== null) {
    payload.style = {
      ref1_id: state.style.blend.ref1Id,
      ref2_id: state.style.blend.ref2Id,
      gamma: state.style.blend.gamma,
    };
  } else if (state.style.referenceId !== null) {
    payload.reference_id = state.style.referenceId;
  } else {
    throw new Error("pick a reference (or a blend) before synthesizing");
  }
  return payload;
}

// --- transport -------------------------------------------------------------------

export class ServiceError extends Error {
  constructor(
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface RequestOptions {
  retries?: number;
  backoffMs?: number;
}

export class ServiceClient {
  private controller: AbortController | null = null;

  constructor(private baseUrl: string) {}

  async health(): Promise<{ status: string; model_stage: string }> {
    const res = await fetch(`${this.baseUrl}/health`);
    return (await res.json()) as { status: string; model_stage: string };
  }

  async references(): Promise<ReferenceEntry[]> {
    const res = await fetch(`${this.baseUrl}/references`);
    if (!res.ok) throw new Error(`references failed: ${res.status}`);
    return (await res.json()) as ReferenceEntry[];
  }

  async standardize(imageB64: string): Promise<string> {
    const res = await this.post("/standardize", { image_png_b64: imageB64 }, { retries: 2 });
    return (res as { edge_png_b64: string }).edge_png_b64;
  }

  // At most one synthesis request is in flight; a newer call aborts the older.
  async synthesize(state: CanvasState, opts: RequestOptions = {}): Promise<ServiceResult> {
    this.controller?.abort();
    this.controller = new AbortController();
    return (await this.post("/synthesize", buildSynthesizeRequest(state), {
      signal: this.controller.signal,
      retries: opts.retries ?? 2,
      backoffMs: opts.backoffMs ?? 500,
    })) as ServiceResult;
  }

  private async post(
    path: string,
    payload: unknown,
    opts: { signal?: AbortSignal; retries?: number; backoffMs?: number } = {},
  ): Promise<unknown> {
    const retries = opts.retries ?? 0;
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= retries; attempt++) {
      try {
        const res = await fetch(`${this.baseUrl}${path}`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(payload),
          signal: opts.signal,
        });
        const body = (await res.json()) as Record<string, unknown>;
        if (!res.ok) {
          const err = body?.error as { code?: string; message?: string } | undefined;
          throw new ServiceError(err?.code ?? "unknown", err?.message ?? `HTTP ${res.status}`);
        }
        return body;
      } catch (error) {
        if (error instanceof ServiceError) throw error; // structured errors are final
        if ((error as Error).name === "AbortError") throw error;
        lastError = error;
        if (attempt < retries) {
          await sleep((opts.backoffMs ?? 500) * 2 ** attempt);
        }
      }
    }
    throw lastError ?? new Error("request failed");
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
