import { describe, expect, it } from "vitest";

import type { StrokePayload } from "../src/api.js";
import { EditServiceClient } from "../src/api.js";
import { buildColorIndex } from "../src/palette.js";
import { StrokeQueue, applyStrokeToLabels } from "../src/strokes.js";
import { decodeMapPng, makeRng, randomRgbPng, serverUrl } from "./helpers.js";

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

// The editor applies every stroke to its local label grid immediately and
// syncs the same stroke to the server in the background. Both sides run the
// same disc-around-segment rasterization on float64 coordinates, and JSON
// transports doubles exactly, so after any number of gestures the server map
// and the local map must be identical down to the last pixel.
describe("stroke round-trip", () => {
  it("replays 100 randomized gestures bit-exactly against the server", async () => {
    const client = new EditServiceClient(serverUrl());
    const classes = await client.fetchClasses();
    const colorIndex = buildColorIndex(classes);

    const session = await client.createSession(randomRgbPng(96, 72, 11));
    const w = session.map_width;
    const h = session.map_height;
    const initial = decodeMapPng(Buffer.from(session.map_png_base64, "base64"), colorIndex);
    expect(initial.width).toBe(w);
    expect(initial.height).toBe(h);
    const local = initial.labels;

    const queue = new StrokeQueue((batch) => client.postStrokes(session.id, batch));
    const rng = makeRng(2024);
    const coord = (limit: number) => rng() * (limit - 1);

    let localChanged = 0;
    for (let i = 0; i < 100; i++) {
      const n = rng() < 0.35 ? 1 : 2 + Math.floor(rng() * 5);
      const path: [number, number][] = [];
      for (let p = 0; p < n; p++) path.push([coord(w), coord(h)]);
      const stroke: StrokePayload = {
        label: Math.floor(rng() * 60),
        radius: 1 + rng() * 5,
        path,
      };
      localChanged += applyStrokeToLabels(local, w, h, stroke);
      queue.enqueue(stroke);
      if (rng() < 0.3) await sleep(3); // let some batches flush mid-stream
    }

    await queue.idle();
    expect(queue.unsynced).toBe(false);
    expect(queue.pendingCount).toBe(0);
    // The server reports the net pixel diff per request, so overlapping
    // strokes inside one batch can cancel; the total can only be at most
    // the gross per-stroke count.
    expect(queue.changedTotal).toBeGreaterThan(0);
    expect(queue.changedTotal).toBeLessThanOrEqual(localChanged);

    const { png, revision } = await client.fetchMapPng(session.id);
    expect(revision).toBe(queue.revision);
    const remote = decodeMapPng(png, colorIndex).labels;

    let mismatches = 0;
    let firstBad = -1;
    for (let i = 0; i < local.length; i++) {
      if (remote[i] !== local[i]) {
        mismatches++;
        if (firstBad < 0) firstBad = i;
      }
    }
    expect(
      mismatches,
      `first mismatch at index ${firstBad}: local=${local[firstBad]} remote=${remote[firstBad]}`,
    ).toBe(0);
  }, 120_000);
});
