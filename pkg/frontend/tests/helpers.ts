/**
 * Shared test utilities: the running server's URL, PNG encode/decode via
 * pngjs, and a small deterministic RNG for reproducible gestures.
 */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { PNG } from "pngjs";

import { labelsFromRgba } from "../src/palette.js";

export function serverUrl(): string {
  const path = fileURLToPath(new URL("./.server.json", import.meta.url));
  return JSON.parse(readFileSync(path, "utf-8")).url;
}

/** Deterministic 32-bit RNG (mulberry32), uniform in [0, 1). */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomRgbPng(width: number, height: number, seed: number): Uint8Array {
  const rng = makeRng(seed);
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = Math.floor(rng() * 256);
    png.data[i * 4 + 1] = Math.floor(rng() * 256);
    png.data[i * 4 + 2] = Math.floor(rng() * 256);
    png.data[i * 4 + 3] = 255;
  }
  return new Uint8Array(PNG.sync.write(png));
}

export function decodeMapPng(
  bytes: Uint8Array,
  colorIndex: Map<number, number>,
): { labels: Uint8Array; width: number; height: number } {
  const png = PNG.sync.read(Buffer.from(bytes));
  return {
    labels: labelsFromRgba(png.data, png.width, png.height, colorIndex),
    width: png.width,
    height: png.height,
  };
}
