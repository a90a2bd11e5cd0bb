"""End-to-end composition: segment, optionally substitute a user map, colorize.

Images of arbitrary size are handled by resizing the shorter side to the
working resolution (352 by default), padding bottom/right with edge
replication to reach 16-divisibility, and cropping back after inference.
Only the chroma planes are resized back to the original dimensions; the
output keeps the input's own luma plane, so lightness is preserved exactly
up to 8-bit quantization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import cv2
import numpy as np
import torch
import torch.nn as nn

from .colornet import ColorNet, build_colornet
from .colorspace import denormalize_merge, lab_to_rgb, luma_plane
from .errors import ShapeError
from .segnet import GridNet, build_gridnet, predict_map
from .semantic_map import SemanticMap, encode_map
from .weights import NetWeights

WORKING_SIDE = 352
_DIVISOR = 16


@dataclass
class PipelineResult:
    """Colorized image at input size plus the map actually used (working size)."""

    image: np.ndarray
    map: SemanticMap
    colorizer_forward_ms: float = 0.0
    segmenter_forward_ms: float = 0.0


def _as_segmenter(w: NetWeights | GridNet | None) -> GridNet | None:
    if w is None or isinstance(w, nn.Module):
        return w
    return build_gridnet(weights=w)


def _as_colorizer(w: NetWeights | ColorNet | None) -> ColorNet | None:
    if w is None or isinstance(w, nn.Module):
        return w
    return build_colornet(weights=w)


def working_size(height: int, width: int, working_side: int = WORKING_SIDE) -> tuple[int, int]:
    """Size after scaling the shorter image side to working_side (before padding)."""
    if height <= width:
        return working_side, max(_DIVISOR, round(width * working_side / height))
    return max(_DIVISOR, round(height * working_side / width)), working_side


def _pad_to_divisible(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape[:2]
    ph = (-h) % _DIVISOR
    pw = (-w) % _DIVISOR
    if ph == 0 and pw == 0:
        return arr
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (arr.ndim - 2)
    return np.pad(arr, pad, mode="edge")


def _resize_rgb(rgb: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    if rgb.shape[:2] == size:
        return rgb
    return cv2.resize(rgb, (size[1], size[0]), interpolation=cv2.INTER_LINEAR)


def _resize_labels(labels: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    if labels.shape == size:
        return labels
    return cv2.resize(labels, (size[1], size[0]), interpolation=cv2.INTER_NEAREST)


def segment_working(
    rgb: np.ndarray,
    segmenter: NetWeights | GridNet,
    working_side: int = WORKING_SIDE,
) -> tuple[SemanticMap, float]:
    """Predict a coarse map at working resolution; also returns forward ms."""
    model = _as_segmenter(segmenter)
    wh, ww = working_size(rgb.shape[0], rgb.shape[1], working_side)
    x = _pad_to_divisible(luma_plane(_resize_rgb(rgb, (wh, ww))))
    t0 = time.perf_counter()
    logits = gridnet_forward_model(model, x)
    ms = (time.perf_counter() - t0) * 1000.0
    labels = predict_map(logits, model.cfg.num_classes).labels[:wh, :ww]
    return SemanticMap(labels, model.cfg.num_classes), ms


def segment_image(
    rgb: np.ndarray,
    segmenter: NetWeights | GridNet,
    working_side: int = WORKING_SIDE,
) -> SemanticMap:
    """Predict a coarse map for an image, returned at the image's own size."""
    m, _ = segment_working(rgb, segmenter, working_side)
    labels = _resize_labels(m.labels, (rgb.shape[0], rgb.shape[1]))
    return SemanticMap(labels, m.num_classes)


def _to_nchw(plane: np.ndarray, dtype: torch.dtype) -> torch.Tensor:
    t = torch.from_numpy(np.ascontiguousarray(plane, dtype=np.float64))
    return t.permute(2, 0, 1)[None].to(dtype)


def gridnet_forward_model(model: GridNet, x: np.ndarray) -> np.ndarray:
    """Run a built segmenter on an HxWx1 plane, returning HxWxC logits."""
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        logits = model(_to_nchw(x, dtype))
    return logits[0].permute(1, 2, 0).to(torch.float32).numpy()


def colornet_forward_model(model: ColorNet, gray: np.ndarray, sem: np.ndarray) -> np.ndarray:
    """Run a built colorizer on HxWx1 gray and semantic planes."""
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        out = model(_to_nchw(gray, dtype), _to_nchw(sem, dtype))
    return out[0].permute(1, 2, 0).to(torch.float32).numpy()


def colorize_pipeline(
    rgb: np.ndarray,
    seg_weights: NetWeights | GridNet | None,
    color_weights: NetWeights | ColorNet,
    user_map: SemanticMap | None = None,
    working_side: int = WORKING_SIDE,
) -> PipelineResult:
    """Colorize an image through segment -> (optional user map) -> colorize -> merge.

    The returned map is the one fed to the colorizer, at working resolution;
    passing it back as user_map reproduces the output bit for bit.
    """
    if color_weights is None:
        raise ValueError("colorizer weights are required")
    if seg_weights is None and user_map is None:
        raise ValueError("segmenter weights are required when no user map is given")
    colorizer = _as_colorizer(color_weights)

    h0, w0 = rgb.shape[:2]
    wh, ww = working_size(h0, w0, working_side)
    work_rgb = _resize_rgb(rgb, (wh, ww))
    x_pad = _pad_to_divisible(luma_plane(work_rgb))

    seg_ms = 0.0
    if user_map is not None:
        if (user_map.height, user_map.width) == (wh, ww):
            labels = user_map.labels
        elif (user_map.height, user_map.width) == (h0, w0):
            labels = _resize_labels(user_map.labels, (wh, ww))
        else:
            raise ShapeError(
                f"user map is {(user_map.height, user_map.width)}, expected image "
                f"size {(h0, w0)} or working size {(wh, ww)}"
            )
        used = SemanticMap(labels, user_map.num_classes)
    else:
        segmenter = _as_segmenter(seg_weights)
        t0 = time.perf_counter()
        logits = gridnet_forward_model(segmenter, x_pad)
        seg_ms = (time.perf_counter() - t0) * 1000.0
        used = SemanticMap(
            predict_map(logits, segmenter.cfg.num_classes).labels[:wh, :ww],
            segmenter.cfg.num_classes,
        )

    sem_plane = encode_map(
        SemanticMap(_pad_to_divisible(used.labels), used.num_classes)
    )
    t0 = time.perf_counter()
    chroma_pad = colornet_forward_model(colorizer, x_pad, sem_plane)
    color_ms = (time.perf_counter() - t0) * 1000.0

    chroma = chroma_pad[:wh, :ww].astype(np.float64)
    if (wh, ww) != (h0, w0):
        chroma = cv2.resize(chroma, (w0, h0), interpolation=cv2.INTER_LINEAR)
    x_full = luma_plane(rgb)
    image = lab_to_rgb(denormalize_merge(x_full, chroma))
    return PipelineResult(
        image=image,
        map=used,
        colorizer_forward_ms=color_ms,
        segmenter_forward_ms=seg_ms,
    )
