"""Grid-shaped semantic segmenter over grayscale input.

The network is a GridNet: a grid of feature maps with five rows (scales)
and six columns, the first three columns downsampling between rows with
stride-2 convolutions and the last three upsampling with stride-2
transposed convolutions. Lateral blocks along a row are two-convolution
residual units. Row 0 keeps full resolution and a 1x1 head maps it to
per-pixel class logits. Cross-entropy over pixels is the training loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import InvalidLabelError, ShapeError
from .semantic_map import DEFAULT_NUM_CLASSES, SemanticMap
from .weights import NetWeights, he_init_module


@dataclass(frozen=True)
class GridNetConfig:
    rows: int = 5
    columns: int = 6
    row_depths: tuple[int, ...] = (16, 32, 64, 128, 256)
    kernel: int = 3
    padding: int = 1
    num_classes: int = DEFAULT_NUM_CLASSES
    leaky_slope: float = 0.01

    def __post_init__(self) -> None:
        if self.rows != len(self.row_depths):
            raise ValueError("rows must equal len(row_depths)")
        if self.columns % 2 != 0:
            raise ValueError("columns must be even (half down, half up)")

    @property
    def scale_factor(self) -> int:
        """Input sides must be divisible by this (one halving per row below row 0)."""
        return 2 ** (self.rows - 1)


class ResidualUnit(nn.Module):
    """Two 3x3 convolutions with a residual add: x + conv2(lrelu(conv1(x)))."""

    def __init__(self, channels: int, cfg: GridNetConfig):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, cfg.kernel, padding=cfg.padding)
        self.conv2 = nn.Conv2d(channels, channels, cfg.kernel, padding=cfg.padding)
        self.slope = cfg.leaky_slope

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.leaky_relu(self.conv1(x), self.slope))


class GridNet(nn.Module):
    def __init__(self, cfg: GridNetConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or GridNetConfig()
        depths = cfg.row_depths
        self.stem = nn.Conv2d(1, depths[0], cfg.kernel, padding=cfg.padding)
        self.lateral = nn.ModuleDict()
        self.down = nn.ModuleDict()
        self.up = nn.ModuleDict()
        half = cfg.columns // 2
        for j in range(cfg.columns):
            for i in range(cfg.rows):
                if j < half:
                    if i == 0 or j > 0:
                        self.lateral[f"r{i}c{j}"] = ResidualUnit(depths[i], cfg)
                    if i > 0:
                        self.down[f"r{i}c{j}"] = nn.Conv2d(
                            depths[i - 1], depths[i], cfg.kernel,
                            stride=2, padding=cfg.padding,
                        )
                else:
                    self.lateral[f"r{i}c{j}"] = ResidualUnit(depths[i], cfg)
                    if i < cfg.rows - 1:
                        self.up[f"r{i}c{j}"] = nn.ConvTranspose2d(
                            depths[i + 1], depths[i], cfg.kernel,
                            stride=2, padding=cfg.padding, output_padding=1,
                        )
        self.head = nn.Conv2d(depths[0], cfg.num_classes, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        if x.shape[-2] % cfg.scale_factor or x.shape[-1] % cfg.scale_factor:
            raise ShapeError(
                f"input sides must be divisible by {cfg.scale_factor}, "
                f"got {tuple(x.shape[-2:])}"
            )
        act = lambda t: F.leaky_relu(t, cfg.leaky_slope)  # noqa: E731
        half = cfg.columns // 2
        rows: list[torch.Tensor | None] = [None] * cfg.rows
        for j in range(cfg.columns):
            if j < half:
                prev = rows[0] if j > 0 else act(self.stem(x))
                nxt: list[torch.Tensor | None] = [None] * cfg.rows
                nxt[0] = self.lateral[f"r0c{j}"](prev)
                for i in range(1, cfg.rows):
                    down = act(self.down[f"r{i}c{j}"](nxt[i - 1]))
                    if j > 0:
                        nxt[i] = self.lateral[f"r{i}c{j}"](rows[i]) + down
                    else:
                        nxt[i] = down
                rows = nxt
            else:
                nxt = [None] * cfg.rows
                nxt[cfg.rows - 1] = self.lateral[f"r{cfg.rows - 1}c{j}"](rows[cfg.rows - 1])
                for i in range(cfg.rows - 2, -1, -1):
                    up = act(self.up[f"r{i}c{j}"](nxt[i + 1]))
                    nxt[i] = self.lateral[f"r{i}c{j}"](rows[i]) + up
                rows = nxt
        return self.head(rows[0])


def build_gridnet(
    cfg: GridNetConfig | None = None,
    weights: NetWeights | None = None,
    precision: int = 32,
) -> GridNet:
    model = GridNet(cfg)
    if precision == 64:
        model.double()
    elif precision != 32:
        raise ValueError(f"precision must be 32 or 64, got {precision}")
    if weights is not None:
        weights.load_into(model)
    model.eval()
    return model


def init_gridnet(cfg: GridNetConfig | None = None, seed: int = 0) -> NetWeights:
    """He-initialized parameters, bit-identical for a given seed."""
    cfg = cfg or GridNetConfig()
    model = GridNet(cfg)
    he_init_module(model, seed, cfg.leaky_slope)
    return NetWeights.from_module(model)


def _plane_to_tensor(plane: np.ndarray, dtype: torch.dtype) -> torch.Tensor:
    plane = np.asarray(plane)
    if plane.ndim == 2:
        plane = plane[..., None]
    if plane.ndim != 3 or plane.shape[2] != 1:
        raise ShapeError(f"expected an HxWx1 plane, got shape {plane.shape}")
    return torch.from_numpy(np.ascontiguousarray(plane, dtype=np.float64)).permute(
        2, 0, 1
    )[None].to(dtype)


def gridnet_forward(
    weights: NetWeights, x: np.ndarray, cfg: GridNetConfig | None = None
) -> np.ndarray:
    """Run the segmenter on an HxWx1 normalized luma plane; returns HxWxC logits."""
    cfg = cfg or GridNetConfig()
    model = build_gridnet(cfg, weights)
    with torch.no_grad():
        logits = model(_plane_to_tensor(x, torch.float32))
    return logits[0].permute(1, 2, 0).numpy()


def predict_map(logits: np.ndarray, num_classes: int | None = None) -> SemanticMap:
    """Per-pixel argmax over the class axis; ties break to the lowest index."""
    logits = np.asarray(logits)
    if logits.ndim != 3:
        raise ShapeError(f"expected HxWxC logits, got shape {logits.shape}")
    labels = np.argmax(logits, axis=-1)
    return SemanticMap(labels, num_classes or logits.shape[-1])


def seg_loss_tensor(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel cross-entropy for NCHW logits against NHW integer labels."""
    return F.cross_entropy(logits, target, reduction="mean")


def seg_loss(logits: np.ndarray, target: SemanticMap) -> float:
    """Mean over pixels of -log softmax(logits)[target label]."""
    logits = np.asarray(logits)
    if logits.ndim != 3:
        raise ShapeError(f"expected HxWxC logits, got shape {logits.shape}")
    if logits.shape[:2] != (target.height, target.width):
        raise ShapeError(
            f"logits {logits.shape[:2]} and target {(target.height, target.width)} "
            "spatial sizes differ"
        )
    if int(target.labels.max()) >= logits.shape[-1]:
        raise InvalidLabelError(
            f"target label {int(target.labels.max())} out of range for "
            f"{logits.shape[-1]} logit channels"
        )
    logits_t = torch.from_numpy(
        np.ascontiguousarray(logits, dtype=np.float64)
    ).permute(2, 0, 1)[None]
    target_t = torch.from_numpy(target.labels.astype(np.int64))[None]
    return float(seg_loss_tensor(logits_t, target_t))
