/**
 * Canvas editor wiring: upload an image, paint semantic strokes over the
 * working-resolution map, pick labels from the map, and recolorize.
 *
 * The server owns the map. Local paints are previews drawn with the same
 * geometry the server applies; every acknowledgment is checked against the
 * expected revision and any mismatch triggers a full map refetch.
 */

import { ApiError, EditServiceClient, base64ToBytes } from "./api.js";
import type { ClassEntry, SessionInfo, StrokePayload } from "./api.js";
import { buildColorIndex, labelsFromRgba, overlayRgba } from "./palette.js";
import { StrokeQueue, applyStrokeToLabels, downsamplePath } from "./strokes.js";
import type { Point } from "./strokes.js";

type BrushMode = "paint" | "pick";

interface BrushState {
  label: number;
  radius: number;
  mode: BrushMode;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const serviceUrl =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8765";

const ui = {
  service: el<HTMLInputElement>("service-url"),
  file: el<HTMLInputElement>("file-input"),
  classSelect: el<HTMLSelectElement>("class-select"),
  radius: el<HTMLInputElement>("brush-radius"),
  modePaint: el<HTMLButtonElement>("mode-paint"),
  modePick: el<HTMLButtonElement>("mode-pick"),
  overlayToggle: el<HTMLInputElement>("overlay-toggle"),
  autoToggle: el<HTMLInputElement>("auto-toggle"),
  recolorize: el<HTMLButtonElement>("recolorize"),
  revision: el<HTMLSpanElement>("revision"),
  forwardMs: el<HTMLSpanElement>("forward-ms"),
  syncState: el<HTMLSpanElement>("sync-state"),
  banner: el<HTMLDivElement>("error-banner"),
  gray: el<HTMLCanvasElement>("gray-canvas"),
  overlay: el<HTMLCanvasElement>("overlay-canvas"),
  result: el<HTMLImageElement>("result-image"),
};

let client = new EditServiceClient(serviceUrl);
let classes: ClassEntry[] = [];
let colorIndex = new Map<number, number>();
let session: SessionInfo | null = null;
let labels: Uint8Array | null = null;
let sourceBitmap: ImageBitmap | null = null;
let queue: StrokeQueue | null = null;
let expectedRevision = 0;
let colorizeInFlight = false;
let autoTimer: ReturnType<typeof setTimeout> | null = null;

const brush: BrushState = { label: 1, radius: 4, mode: "paint" };

function showError(message: string): void {
  ui.banner.textContent = message;
  ui.banner.hidden = false;
}

function clearError(): void {
  ui.banner.hidden = true;
}

function setRevision(revision: number): void {
  ui.revision.textContent = String(revision);
}

async function decodeMapPng(png: Uint8Array): Promise<Uint8Array> {
  if (!session) throw new Error("no active session");
  const bitmap = await createImageBitmap(new Blob([png.slice().buffer], { type: "image/png" }));
  const canvas = document.createElement("canvas");
  canvas.width = session.map_width;
  canvas.height = session.map_height;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  const rgba = ctx.getImageData(0, 0, canvas.width, canvas.height).data;
  return labelsFromRgba(rgba, session.map_width, session.map_height, colorIndex);
}

function drawOverlay(): void {
  if (!session || !labels || !sourceBitmap) return;
  const ctx = ui.overlay.getContext("2d")!;
  ctx.clearRect(0, 0, ui.overlay.width, ui.overlay.height);
  ctx.drawImage(sourceBitmap, 0, 0, ui.overlay.width, ui.overlay.height);
  if (!ui.overlayToggle.checked) return;
  const layer = document.createElement("canvas");
  layer.width = session.map_width;
  layer.height = session.map_height;
  const layerCtx = layer.getContext("2d")!;
  layerCtx.putImageData(
    new ImageData(overlayRgba(labels, classes, 0.5), session.map_width, session.map_height),
    0,
    0,
  );
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(layer, 0, 0, ui.overlay.width, ui.overlay.height);
}

async function refetchMap(): Promise<void> {
  if (!session) return;
  const { png, revision } = await client.fetchMapPng(session.id);
  labels = await decodeMapPng(png);
  expectedRevision = revision;
  setRevision(revision);
  drawOverlay();
}

function scheduleAutoColorize(): void {
  if (!ui.autoToggle.checked) return;
  if (autoTimer !== null) clearTimeout(autoTimer);
  autoTimer = setTimeout(() => {
    autoTimer = null;
    void recolorize();
  }, 600);
}

async function recolorize(): Promise<void> {
  if (!session || !queue || colorizeInFlight) return;
  colorizeInFlight = true;
  ui.recolorize.disabled = true;
  try {
    await queue.idle();
    const result = await client.colorize(session.id);
    ui.result.src = `data:image/png;base64,${result.image_png_base64}`;
    ui.result.width = result.width;
    ui.result.height = result.height;
    ui.forwardMs.textContent = `${result.colorizer_forward_ms.toFixed(1)} ms`;
    setRevision(result.revision);
    clearError();
  } catch (error) {
    showError(error instanceof ApiError ? `recolorize failed: ${error.message}` : String(error));
  } finally {
    colorizeInFlight = false;
    ui.recolorize.disabled = false;
  }
}

function mapPointFromEvent(event: PointerEvent): Point {
  const rect = ui.overlay.getBoundingClientRect();
  const sx = session!.map_width / rect.width;
  const sy = session!.map_height / rect.height;
  const x = Math.min(Math.max((event.clientX - rect.left) * sx, 0), session!.map_width - 1);
  const y = Math.min(Math.max((event.clientY - rect.top) * sy, 0), session!.map_height - 1);
  return { x, y };
}

function finishGesture(rawPoints: Point[]): void {
  if (!session || !labels || !queue) return;
  const path = downsamplePath(rawPoints);
  if (path.length === 0) return;
  const stroke: StrokePayload = { label: brush.label, radius: brush.radius, path };
  applyStrokeToLabels(labels, session.map_width, session.map_height, stroke, classes.length);
  drawOverlay();
  queue.enqueue(stroke);
}

function attachPointerHandlers(): void {
  let rawPoints: Point[] | null = null;
  ui.overlay.addEventListener("pointerdown", (event) => {
    if (!session || !labels) return;
    if (brush.mode === "pick") {
      const p = mapPointFromEvent(event);
      const label = labels[Math.round(p.y) * session.map_width + Math.round(p.x)]!;
      brush.label = label;
      ui.classSelect.value = String(label);
      return;
    }
    ui.overlay.setPointerCapture(event.pointerId);
    rawPoints = [mapPointFromEvent(event)];
  });
  ui.overlay.addEventListener("pointermove", (event) => {
    if (rawPoints) rawPoints.push(mapPointFromEvent(event));
  });
  const finish = (event: PointerEvent) => {
    if (!rawPoints) return;
    rawPoints.push(mapPointFromEvent(event));
    finishGesture(rawPoints);
    rawPoints = null;
    scheduleAutoColorize();
  };
  ui.overlay.addEventListener("pointerup", finish);
  ui.overlay.addEventListener("pointercancel", () => {
    rawPoints = null;
  });
}

function setMode(mode: BrushMode): void {
  brush.mode = mode;
  ui.modePaint.classList.toggle("active", mode === "paint");
  ui.modePick.classList.toggle("active", mode === "pick");
  ui.overlay.style.cursor = mode === "paint" ? "crosshair" : "copy";
}

function populateClassSelect(): void {
  ui.classSelect.innerHTML = "";
  for (const entry of classes) {
    const option = document.createElement("option");
    option.value = String(entry.index);
    option.textContent = `${entry.index}: ${entry.name}`;
    const [r, g, b] = entry.color;
    option.style.background = `rgb(${r}, ${g}, ${b})`;
    ui.classSelect.appendChild(option);
  }
  ui.classSelect.value = String(brush.label);
}

async function openSession(file: File): Promise<void> {
  const bytes = new Uint8Array(await file.arrayBuffer());
  let info: SessionInfo;
  try {
    info = await client.createSession(bytes);
  } catch (error) {
    showError(error instanceof ApiError ? `upload rejected: ${error.message}` : String(error));
    return;
  }
  clearError();
  queue?.stop();
  session = info;
  expectedRevision = info.revision;
  setRevision(info.revision);
  ui.forwardMs.textContent = "";
  ui.result.removeAttribute("src");

  sourceBitmap = await createImageBitmap(new Blob([bytes.buffer], { type: file.type || "image/png" }));
  ui.gray.width = info.width;
  ui.gray.height = info.height;
  ui.gray.getContext("2d")!.drawImage(sourceBitmap, 0, 0);
  ui.overlay.width = info.width;
  ui.overlay.height = info.height;

  labels = await decodeMapPng(base64ToBytes(info.map_png_base64));
  drawOverlay();

  queue = new StrokeQueue((strokes) => client.postStrokes(session!.id, strokes), {
    retryDelayMs: 1500,
    onAck: (ack) => {
      ui.syncState.textContent = "synced";
      clearError();
      expectedRevision += 1;
      setRevision(ack.revision);
      if (ack.revision !== expectedRevision) {
        // the server saw a different request sequence; its map is the truth
        void refetchMap().catch((error) => showError(String(error)));
      }
    },
    onError: () => {
      ui.syncState.textContent = "unsynced, retrying";
      showError("stroke sync failed; retrying");
    },
  });
  ui.syncState.textContent = "synced";
}

async function connect(): Promise<void> {
  client = new EditServiceClient(ui.service.value);
  try {
    classes = await client.fetchClasses();
    colorIndex = buildColorIndex(classes);
    populateClassSelect();
    clearError();
  } catch (error) {
    showError(`cannot reach service at ${ui.service.value}: ${String(error)}`);
  }
}

function main(): void {
  ui.service.value = serviceUrl;
  ui.service.addEventListener("change", () => void connect());
  ui.file.addEventListener("change", () => {
    const file = ui.file.files?.[0];
    if (file) void openSession(file);
  });
  ui.classSelect.addEventListener("change", () => {
    brush.label = Number(ui.classSelect.value);
  });
  ui.radius.addEventListener("change", () => {
    brush.radius = Math.max(1, Number(ui.radius.value) || 1);
    ui.radius.value = String(brush.radius);
  });
  ui.modePaint.addEventListener("click", () => setMode("paint"));
  ui.modePick.addEventListener("click", () => setMode("pick"));
  ui.overlayToggle.addEventListener("change", drawOverlay);
  ui.recolorize.addEventListener("click", () => void recolorize());
  attachPointerHandlers();
  setMode("paint");
  void connect();
}

main();
