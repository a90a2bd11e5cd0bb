"""Two-stream chroma regression network with a shared encoder.

The gray plane and the encoded semantic plane each pass through ONE encoder
(a single parameter set applied to both streams), so the encoder learns
features that tie gray context to semantic identity. At every scale the
gray features are instance-normalized before fusion with the raw semantic
features: per-instance contrast statistics are removed from the gray
stream, which is what suppresses color bleeding from contrast accidents.

Encoder depths run [32, 64, 128, 256, 512]; because every decoder stage
consumes the concatenation of upsampled features with a fused skip of equal
width, the decoder input depths are exactly the doubled reverse
[1024, 512, 256, 128, 64]. The bottleneck itself is the concatenation of
the instance-normalized gray features with the semantic features at the
deepest scale. The output head maps to 2 chroma channels through tanh, so
predictions live in (-1, 1) like the normalized targets. Training minimizes
a Huber loss (quadratic within delta, linear outside).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ShapeError
from .weights import NetWeights, he_init_module


@dataclass(frozen=True)
class ColorNetConfig:
    encoder_depths: tuple[int, ...] = (32, 64, 128, 256, 512)
    kernel: int = 3
    padding: int = 1
    leaky_slope: float = 0.01
    in_epsilon: float = 1e-5
    output_channels: int = 2
    use_instance_norm: bool = True

    @property
    def decoder_input_depths(self) -> tuple[int, ...]:
        return tuple(2 * c for c in reversed(self.encoder_depths))

    @property
    def scale_factor(self) -> int:
        return 2 ** (len(self.encoder_depths) - 1)


def instance_norm_tensor(f: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Per-instance, per-channel standardization of an NCHW tensor.

    Uses the population (biased) variance and no learned affine terms.
    """
    mean = f.mean(dim=(2, 3), keepdim=True)
    var = ((f - mean) ** 2).mean(dim=(2, 3), keepdim=True)
    return (f - mean) / torch.sqrt(var + eps)


def instance_norm(f: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """instance_norm_tensor on an HxWxC array; single instance, channels last."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3:
        raise ShapeError(f"expected an HxWxC field, got shape {f.shape}")
    t = torch.from_numpy(f).permute(2, 0, 1)[None]
    return instance_norm_tensor(t, eps)[0].permute(1, 2, 0).numpy()


class EncoderLevel(nn.Module):
    """Two 3x3 convolutions, each followed by leaky ReLU.

    The first convolution halves the spatial size (stride 2) except at the
    first level, which keeps full resolution.
    """

    def __init__(self, c_in: int, c_out: int, cfg: ColorNetConfig, downsample: bool):
        super().__init__()
        stride = 2 if downsample else 1
        self.conv_a = nn.Conv2d(c_in, c_out, cfg.kernel, stride=stride, padding=cfg.padding)
        self.conv_b = nn.Conv2d(c_out, c_out, cfg.kernel, padding=cfg.padding)
        self.slope = cfg.leaky_slope

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.leaky_relu(self.conv_a(x), self.slope)
        return F.leaky_relu(self.conv_b(x), self.slope)


class DecoderLevel(nn.Module):
    """Stride-2 transposed convolution then a 3x3 convolution, leaky ReLUs after each."""

    def __init__(self, c_in: int, c_out: int, cfg: ColorNetConfig):
        super().__init__()
        self.up = nn.ConvTranspose2d(
            c_in, c_out, cfg.kernel, stride=2, padding=cfg.padding, output_padding=1
        )
        self.conv = nn.Conv2d(c_out, c_out, cfg.kernel, padding=cfg.padding)
        self.slope = cfg.leaky_slope

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.leaky_relu(self.up(x), self.slope)
        return F.leaky_relu(self.conv(x), self.slope)


class ColorNet(nn.Module):
    def __init__(self, cfg: ColorNetConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or ColorNetConfig()
        depths = cfg.encoder_depths
        self.encoder = nn.ModuleList(
            EncoderLevel(
                1 if i == 0 else depths[i - 1], depths[i], cfg, downsample=i > 0
            )
            for i in range(len(depths))
        )
        # 1x1 fusion of concat(IN(gray_i), sem_i) back down to the level width,
        # for every level that feeds a skip connection (all but the deepest).
        self.fuse = nn.ModuleList(
            nn.Conv2d(2 * depths[i], depths[i], kernel_size=1)
            for i in range(len(depths) - 1)
        )
        dec_in = cfg.decoder_input_depths
        self.decoder = nn.ModuleList(
            DecoderLevel(dec_in[i], depths[len(depths) - 2 - i], cfg)
            for i in range(len(depths) - 1)
        )
        final_in = dec_in[-1]
        self.final_a = nn.Conv2d(final_in, final_in // 2, cfg.kernel, padding=cfg.padding)
        self.final_b = nn.Conv2d(final_in // 2, cfg.output_channels, cfg.kernel, padding=cfg.padding)

    def encode(self, plane: torch.Tensor) -> list[torch.Tensor]:
        features = []
        h = plane
        for level in self.encoder:
            h = level(h)
            features.append(h)
        return features

    def _norm(self, f: torch.Tensor) -> torch.Tensor:
        if self.cfg.use_instance_norm:
            return instance_norm_tensor(f, self.cfg.in_epsilon)
        return f

    def forward(
        self, gray: torch.Tensor, sem: torch.Tensor, trace: dict | None = None
    ) -> torch.Tensor:
        cfg = self.cfg
        if gray.shape[-2:] != sem.shape[-2:]:
            raise ShapeError(
                f"gray {tuple(gray.shape[-2:])} and semantic {tuple(sem.shape[-2:])} "
                "sizes differ"
            )
        if gray.shape[-2] % cfg.scale_factor or gray.shape[-1] % cfg.scale_factor:
            raise ShapeError(
                f"input sides must be divisible by {cfg.scale_factor}, "
                f"got {tuple(gray.shape[-2:])}"
            )
        g = self.encode(gray)
        s = self.encode(sem)
        skips = [
            F.leaky_relu(self.fuse[i](torch.cat([self._norm(g[i]), s[i]], dim=1)), cfg.leaky_slope)
            for i in range(len(self.fuse))
        ]
        h = torch.cat([self._norm(g[-1]), s[-1]], dim=1)
        if trace is not None:
            trace["encoder_channels"] = [int(f.shape[1]) for f in g]
            trace["encoder_sizes"] = [tuple(f.shape[-2:]) for f in g]
            trace["decoder_input_channels"] = [int(h.shape[1])]
        for i, level in enumerate(self.decoder):
            h = level(h)
            h = torch.cat([h, skips[len(skips) - 1 - i]], dim=1)
            if trace is not None:
                trace["decoder_input_channels"].append(int(h.shape[1]))
        h = F.leaky_relu(self.final_a(h), cfg.leaky_slope)
        return torch.tanh(self.final_b(h))


def build_colornet(
    cfg: ColorNetConfig | None = None,
    weights: NetWeights | None = None,
    precision: int = 32,
) -> ColorNet:
    model = ColorNet(cfg)
    if precision == 64:
        model.double()
    elif precision != 32:
        raise ValueError(f"precision must be 32 or 64, got {precision}")
    if weights is not None:
        weights.load_into(model)
    model.eval()
    return model


def init_colornet(cfg: ColorNetConfig | None = None, seed: int = 0) -> NetWeights:
    """He-initialized parameters, bit-identical for a given seed.

    The encoder exists once; both streams run through the same parameters.
    """
    cfg = cfg or ColorNetConfig()
    model = ColorNet(cfg)
    he_init_module(model, seed, cfg.leaky_slope)
    return NetWeights.from_module(model)


def _plane(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p)
    if p.ndim == 2:
        p = p[..., None]
    if p.ndim != 3 or p.shape[2] != 1:
        raise ShapeError(f"{name} plane must be HxWx1, got shape {p.shape}")
    return p


def encoder_forward(
    weights: NetWeights, plane: np.ndarray, cfg: ColorNetConfig | None = None
) -> list[np.ndarray]:
    """Run one plane through the shared encoder; returns the 5-level pyramid."""
    cfg = cfg or ColorNetConfig()
    model = build_colornet(cfg, weights)
    p = _plane(plane, "input")
    if p.shape[0] % cfg.scale_factor or p.shape[1] % cfg.scale_factor:
        raise ShapeError(
            f"input sides must be divisible by {cfg.scale_factor}, got {p.shape[:2]}"
        )
    t = torch.from_numpy(np.ascontiguousarray(p, dtype=np.float64)).permute(2, 0, 1)[None]
    with torch.no_grad():
        pyramid = model.encode(t.to(torch.float32))
    return [f[0].permute(1, 2, 0).numpy() for f in pyramid]


def colornet_forward(
    weights: NetWeights,
    gray: np.ndarray,
    sem: np.ndarray,
    cfg: ColorNetConfig | None = None,
    trace: dict | None = None,
) -> np.ndarray:
    """Predict HxWx2 chroma in [-1, 1] from normalized gray and encoded map planes."""
    cfg = cfg or ColorNetConfig()
    model = build_colornet(cfg, weights)
    g = _plane(gray, "gray")
    s = _plane(sem, "semantic")
    if g.shape[:2] != s.shape[:2]:
        raise ShapeError(f"gray {g.shape[:2]} and semantic {s.shape[:2]} sizes differ")
    to_t = lambda p: torch.from_numpy(  # noqa: E731
        np.ascontiguousarray(p, dtype=np.float64)
    ).permute(2, 0, 1)[None].to(torch.float32)
    with torch.no_grad():
        out = model(to_t(g), to_t(s), trace=trace)
    return out[0].permute(1, 2, 0).numpy()


def huber_loss_tensor(
    predicted: torch.Tensor, target: torch.Tensor, delta: float = 1.0
) -> torch.Tensor:
    """Mean Huber loss: 0.5 r^2 within |r| <= delta, delta|r| - 0.5 delta^2 outside."""
    residual = target - predicted
    abs_r = residual.abs()
    quadratic = 0.5 * residual**2
    linear = delta * abs_r - 0.5 * delta**2
    return torch.where(abs_r <= delta, quadratic, linear).mean()


def huber_loss(predicted: np.ndarray, target: np.ndarray, delta: float = 1.0) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ShapeError(
            f"prediction shape {predicted.shape} differs from target {target.shape}"
        )
    return float(
        huber_loss_tensor(torch.from_numpy(predicted), torch.from_numpy(target), delta)
    )
