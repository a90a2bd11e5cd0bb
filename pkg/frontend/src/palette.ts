/**
 * Class color handling.
 *
 * Display colors come exclusively from the service's /classes table. Map
 * PNGs are palette-indexed with those same colors, so an RGBA decode maps
 * back to labels without loss: the table guarantees color uniqueness.
 */

import type { ClassEntry } from "./api.js";

export function colorKey(r: number, g: number, b: number): number {
  return (r << 16) | (g << 8) | b;
}

export function buildColorIndex(classes: ClassEntry[]): Map<number, number> {
  const index = new Map<number, number>();
  for (const entry of classes) {
    const [r, g, b] = entry.color;
    const key = colorKey(r, g, b);
    if (index.has(key)) throw new Error(`duplicate class color for label ${entry.index}`);
    index.set(key, entry.index);
  }
  return index;
}

/** Recover labels from RGBA pixels of a decoded map PNG. */
export function labelsFromRgba(
  rgba: Uint8Array | Uint8ClampedArray,
  width: number,
  height: number,
  colorIndex: Map<number, number>,
): Uint8Array {
  if (rgba.length !== width * height * 4) {
    throw new Error(`expected ${width * height * 4} RGBA bytes, got ${rgba.length}`);
  }
  const labels = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const key = colorKey(rgba[i * 4]!, rgba[i * 4 + 1]!, rgba[i * 4 + 2]!);
    const label = colorIndex.get(key);
    if (label === undefined) {
      throw new Error(`pixel ${i} has a color not present in the class table`);
    }
    labels[i] = label;
  }
  return labels;
}

/** Render labels as an RGBA overlay layer in class colors at the given alpha. */
export function overlayRgba(
  labels: Uint8Array,
  classes: ClassEntry[],
  alpha = 0.5,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(labels.length * 4);
  const a = Math.round(alpha * 255);
  for (let i = 0; i < labels.length; i++) {
    const entry = classes[labels[i]!];
    if (entry === undefined) throw new Error(`label ${labels[i]} missing from the class table`);
    out[i * 4] = entry.color[0];
    out[i * 4 + 1] = entry.color[1];
    out[i * 4 + 2] = entry.color[2];
    out[i * 4 + 3] = a;
  }
  return out;
}
