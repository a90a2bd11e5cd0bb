/**
 * Typed client for the edit service HTTP API.
 *
 * The service is the single source of truth for session state; this module
 * only moves bytes and JSON. All label/color knowledge comes from /classes.
 */

export interface ClassEntry {
  index: number;
  name: string;
  color: [number, number, number];
}

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
  map_width: number;
  map_height: number;
  revision: number;
  map_png_base64: string;
}

export interface StrokePayload {
  label: number;
  radius: number;
  path: [number, number][];
}

export interface StrokeAck {
  revision: number;
  changed_pixel_count: number;
}

export interface ColorizeResult {
  revision: number;
  width: number;
  height: number;
  colorizer_forward_ms: number;
  image_png_base64: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function base64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && body.detail !== undefined) {
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ApiError(detail, res.status);
}

export class EditServiceClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async createSession(png: Uint8Array | Blob): Promise<SessionInfo> {
    const res = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: png as BodyInit,
    });
    await raiseForStatus(res);
    return res.json();
  }

  async postStrokes(sessionId: string, strokes: StrokePayload[]): Promise<StrokeAck> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/strokes`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(strokes),
    });
    await raiseForStatus(res);
    return res.json();
  }

  async colorize(sessionId: string): Promise<ColorizeResult> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/colorize`, {
      method: "POST",
    });
    await raiseForStatus(res);
    return res.json();
  }

  async fetchMapPng(sessionId: string): Promise<{ png: Uint8Array; revision: number }> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/map`);
    await raiseForStatus(res);
    const revision = Number(res.headers.get("x-revision") ?? "0");
    return { png: new Uint8Array(await res.arrayBuffer()), revision };
  }

  async fetchClasses(): Promise<ClassEntry[]> {
    const res = await fetch(`${this.baseUrl}/classes`);
    await raiseForStatus(res);
    return res.json();
  }
}
