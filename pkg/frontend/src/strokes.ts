/**
 * Gesture capture and stroke synchronization.
 *
 * applyStrokeToLabels mirrors the server's paint geometry operation for
 * operation in IEEE double arithmetic, so a local replay of the strokes a
 * session has sent produces exactly the server's map. The UI relies on that
 * for instant previews; the tests rely on it for the round-trip property.
 */

import type { StrokeAck, StrokePayload } from "./api.js";

export interface Point {
  x: number;
  y: number;
}

/**
 * Thin a raw pointer trail to at most one point per pixel of movement:
 * a point is kept only when it is at least one pixel from the last kept
 * point. A click without drag stays a single point. The brush radius is
 * at least 1, so dropping a sub-pixel tail never uncovers painted ground.
 */
export function downsamplePath(points: Point[]): [number, number][] {
  if (points.length === 0) return [];
  const first = points[0]!;
  const kept: [number, number][] = [[first.x, first.y]];
  let [lx, ly] = kept[0]!;
  for (let i = 1; i < points.length; i++) {
    const p = points[i]!;
    const dx = p.x - lx;
    const dy = p.y - ly;
    if (dx * dx + dy * dy >= 1) {
      kept.push([p.x, p.y]);
      lx = p.x;
      ly = p.y;
    }
  }
  return kept;
}

/**
 * Paint a stroke onto a label buffer, returning how many pixels changed.
 *
 * Pixels within stroke.radius of any segment of the (endpoint-clamped)
 * path take the stroke label. Single-point paths paint a disc. This is the
 * client half of the shared-semantics invariant; keep it in lockstep with
 * the server.
 */
export function applyStrokeToLabels(
  labels: Uint8Array,
  width: number,
  height: number,
  stroke: StrokePayload,
  numClasses = 60,
): number {
  if (stroke.radius < 1) throw new RangeError(`stroke radius must be >= 1, got ${stroke.radius}`);
  if (stroke.path.length === 0) throw new RangeError("stroke path must contain at least one point");
  if (stroke.label < 0 || stroke.label >= numClasses) {
    throw new RangeError(`stroke label ${stroke.label} out of range for ${numClasses} classes`);
  }
  const r = stroke.radius;
  const r2 = r * r;
  const pts = stroke.path.map(([x, y]) => [
    Math.min(Math.max(x, 0), width - 1),
    Math.min(Math.max(y, 0), height - 1),
  ]);
  const segments: [number[], number[]][] = [];
  if (pts.length > 1) {
    for (let i = 0; i + 1 < pts.length; i++) segments.push([pts[i]!, pts[i + 1]!]);
  } else {
    segments.push([pts[0]!, pts[0]!]);
  }

  let changed = 0;
  for (const [[x0, y0], [x1, y1]] of segments as [[number, number], [number, number]][]) {
    const loX = Math.max(Math.floor(Math.min(x0, x1) - r), 0);
    const hiX = Math.min(Math.ceil(Math.max(x0, x1) + r), width - 1);
    const loY = Math.max(Math.floor(Math.min(y0, y1) - r), 0);
    const hiY = Math.min(Math.ceil(Math.max(y0, y1) + r), height - 1);
    if (loX > hiX || loY > hiY) continue;
    const vx = x1 - x0;
    const vy = y1 - y0;
    const segLen2 = vx * vx + vy * vy;
    for (let y = loY; y <= hiY; y++) {
      for (let x = loX; x <= hiX; x++) {
        let d2: number;
        if (segLen2 === 0) {
          d2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
        } else {
          const t = Math.min(Math.max(((x - x0) * vx + (y - y0) * vy) / segLen2, 0), 1);
          const px = x - (x0 + t * vx);
          const py = y - (y0 + t * vy);
          d2 = px * px + py * py;
        }
        if (d2 <= r2) {
          const i = y * width + x;
          if (labels[i] !== stroke.label) {
            labels[i] = stroke.label;
            changed++;
          }
        }
      }
    }
  }
  return changed;
}

export interface StrokeQueueOptions {
  retryDelayMs?: number;
  onAck?: (ack: StrokeAck) => void;
  onError?: (error: unknown) => void;
}

/**
 * FIFO queue of gestures with a single in-flight POST.
 *
 * Queued strokes are sent in order, batched into one request per flush. A
 * failed POST keeps every stroke in the queue (marked unsynced) and retries
 * after a delay; an edit is only dropped from the queue once the server has
 * acknowledged it.
 */
export class StrokeQueue {
  revision: number | null = null;
  changedTotal = 0;
  unsynced = false;

  private queue: StrokePayload[] = [];
  private inFlight = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly post: (strokes: StrokePayload[]) => Promise<StrokeAck>,
    private readonly options: StrokeQueueOptions = {},
  ) {}

  enqueue(stroke: StrokePayload): void {
    if (this.stopped) throw new Error("stroke queue is stopped");
    this.queue.push(stroke);
    void this.flush();
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  get busy(): boolean {
    return this.inFlight || this.queue.length > 0;
  }

  /** Resolves once every queued stroke has been acknowledged. */
  async idle(): Promise<void> {
    while (this.busy && !this.stopped) {
      await new Promise((resolve) => setTimeout(resolve, 5));
    }
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.stopped || this.queue.length === 0) return;
    this.inFlight = true;
    const batch = this.queue.slice();
    try {
      const ack = await this.post(batch);
      this.queue.splice(0, batch.length);
      this.revision = ack.revision;
      this.changedTotal += ack.changed_pixel_count;
      this.unsynced = false;
      this.options.onAck?.(ack);
      this.inFlight = false;
      if (this.queue.length > 0) void this.flush();
    } catch (error) {
      this.inFlight = false;
      this.unsynced = true;
      this.options.onError?.(error);
      if (!this.stopped) {
        this.retryTimer = setTimeout(() => {
          this.retryTimer = null;
          void this.flush();
        }, this.options.retryDelayMs ?? 1000);
      }
    }
  }
}
