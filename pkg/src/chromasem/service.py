"""Session-oriented HTTP service for the interactive edit loop.

A session holds one uploaded image, its working-resolution semantic map and
a result cache keyed by revision. The map is the single source of truth:
clients send strokes, the server applies them with the same apply_stroke
the library exposes, so client-side replays match bit for bit.
"""

from __future__ import annotations

import base64
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .checkpoint import TARGET_COLORIZER, TARGET_SEGMENTER, load_model
from .colornet import ColorNet
from .colorspace import decode_image, encode_png
from .errors import ChromasemError, FormatError
from .pipeline import WORKING_SIDE, colorize_pipeline, segment_working
from .segnet import GridNet
from .semantic_map import SemanticMap, Stroke, apply_stroke, load_class_table
from .semantic_map import save_map as encode_map_png

MAX_UPLOAD_BYTES = 64 * 1024 * 1024


class StrokeIn(BaseModel):
    label: int = Field(ge=0)
    radius: float = Field(ge=1)
    path: list[tuple[float, float]] = Field(min_length=1)


@dataclass
class Session:
    id: str
    rgb: np.ndarray
    map: SemanticMap
    revision: int = 0
    result: tuple[int, bytes, float] | None = None  # revision, png, forward ms
    lock: threading.Lock = field(default_factory=threading.Lock)
    touched: float = field(default_factory=time.monotonic)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def create_app(
    seg_weights: str | Path | GridNet,
    color_weights: str | Path | ColorNet,
    max_image_side: int = 2048,
    working_side: int = WORKING_SIDE,
    idle_ttl_seconds: float = 3600.0,
) -> FastAPI:
    """Build the service with weights loaded once and shared read-only."""
    if isinstance(seg_weights, (str, Path)):
        seg_weights, _ = load_model(seg_weights, expect=TARGET_SEGMENTER)
    if isinstance(color_weights, (str, Path)):
        color_weights, _ = load_model(color_weights, expect=TARGET_COLORIZER)
    segmenter: GridNet = seg_weights
    colorizer: ColorNet = color_weights
    table = load_class_table()

    app = FastAPI(title="chromasem edit service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def _evict_idle() -> None:
        now = time.monotonic()
        with registry_lock:
            for sid in [s for s, v in sessions.items() if now - v.touched > idle_ttl_seconds]:
                del sessions[sid]

    def _get(sid: str) -> Session:
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        sess.touched = time.monotonic()
        return sess

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request) -> dict:
        _evict_idle()
        data = await request.body()
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="upload too large")
        try:
            rgb = decode_image(data)
        except FormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        h, w = rgb.shape[:2]
        if max(h, w) > max_image_side:
            raise HTTPException(
                status_code=413,
                detail=f"image side {max(h, w)} exceeds limit {max_image_side}",
            )
        sem, _ = segment_working(rgb, segmenter, working_side)
        sess = Session(id=secrets.token_hex(8), rgb=rgb, map=sem)
        with registry_lock:
            sessions[sess.id] = sess
        return {
            "id": sess.id,
            "width": w,
            "height": h,
            "map_width": sem.width,
            "map_height": sem.height,
            "revision": sess.revision,
            "map_png_base64": _b64(encode_map_png(sem, table)),
        }

    @app.post("/sessions/{sid}/strokes")
    def post_strokes(sid: str, strokes: list[StrokeIn]) -> dict:
        sess = _get(sid)
        with sess.lock:
            before = sess.map.labels
            m = sess.map
            for s in strokes:
                for x, y in s.path:
                    if not (0 <= x < m.width and 0 <= y < m.height):
                        raise HTTPException(
                            status_code=422,
                            detail=f"point ({x}, {y}) outside map {m.width}x{m.height}",
                        )
                try:
                    m = apply_stroke(m, Stroke(label=s.label, radius=s.radius, path=s.path))
                except (ChromasemError, ValueError) as exc:
                    raise HTTPException(status_code=422, detail=str(exc)) from exc
            sess.map = m
            sess.revision += 1
            changed = int((m.labels != before).sum())
            return {"revision": sess.revision, "changed_pixel_count": changed}

    @app.post("/sessions/{sid}/colorize")
    def colorize(sid: str) -> dict:
        sess = _get(sid)
        with sess.lock:
            if sess.result is None or sess.result[0] != sess.revision:
                out = colorize_pipeline(
                    sess.rgb,
                    None,
                    colorizer,
                    user_map=sess.map,
                    working_side=working_side,
                )
                sess.result = (
                    sess.revision,
                    encode_png(out.image),
                    out.colorizer_forward_ms,
                )
            revision, png, ms = sess.result
            return {
                "revision": revision,
                "width": sess.rgb.shape[1],
                "height": sess.rgb.shape[0],
                "colorizer_forward_ms": ms,
                "image_png_base64": _b64(png),
            }

    @app.get("/sessions/{sid}/map")
    def get_map(sid: str) -> Response:
        sess = _get(sid)
        with sess.lock:
            png = encode_map_png(sess.map, table)
            return Response(
                content=png,
                media_type="image/png",
                headers={"X-Revision": str(sess.revision)},
            )

    @app.get("/classes")
    def get_classes() -> list[dict]:
        return table.to_json()

    return app
