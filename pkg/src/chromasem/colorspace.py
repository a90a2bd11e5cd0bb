"""Conversions between 8-bit sRGB, CIE Lab, and the normalized network space.

The luma/chroma decomposition used everywhere else in the package lives
here: L carries the grayscale content, (a, b) carry the color. Network
inputs and targets are the same planes affinely mapped into [-1, 1]
(x = L/50 - 1, y = (a/128, b/128)).

Conversions use the sRGB standard (IEC 61966-2-1 piecewise companding,
D65 white point, 2-degree observer) and are exact inverses of each other
up to 8-bit quantization. Out-of-gamut reconstructions clamp.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ShapeError

# Linear sRGB -> XYZ for D65, 2-degree observer. The inverse is computed
# numerically so the round trip is exact to float precision.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


@dataclass
class LabImage:
    """Per-pixel CIE Lab planes: L in [0, 100], a and b in [-128, 128]."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        if not (self.L.shape == self.a.shape == self.b.shape) or self.L.ndim != 2:
            raise ShapeError(
                f"Lab planes must share an HxW shape, got {self.L.shape}, "
                f"{self.a.shape}, {self.b.shape}"
            )

    @property
    def height(self) -> int:
        return self.L.shape[0]

    @property
    def width(self) -> int:
        return self.L.shape[1]


@dataclass
class NetPlanes:
    """Network-space planes: x is HxWx1 luma, y is HxWx2 chroma, all in [-1, 1]."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        if self.x.ndim != 3 or self.x.shape[2] != 1:
            raise ShapeError(f"x plane must be HxWx1, got {self.x.shape}")
        if self.y.ndim != 3 or self.y.shape[2] != 2:
            raise ShapeError(f"y planes must be HxWx2, got {self.y.shape}")
        if self.x.shape[:2] != self.y.shape[:2]:
            raise ShapeError(
                f"x and y spatial sizes differ: {self.x.shape[:2]} vs {self.y.shape[:2]}"
            )


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA**2) + 4.0 / 29.0)


def _lab_finv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3.0 * _DELTA**2 * (t - 4.0 / 29.0))


def rgb_to_lab(rgb: np.ndarray) -> LabImage:
    """Convert an HxWx3 8-bit sRGB image to CIE Lab planes.

    Total and deterministic: every uint8 input maps to a finite Lab triple.
    """
    rgb = _require_rgb(rgb)
    linear = _srgb_to_linear(rgb.astype(np.float64) / 255.0)
    xyz = linear @ _RGB_TO_XYZ.T
    fxyz = _lab_f(xyz / _WHITE_D65)
    L = 116.0 * fxyz[..., 1] - 16.0
    a = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    b = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return LabImage(L=L, a=a, b=b)


def lab_to_rgb(lab: LabImage) -> np.ndarray:
    """Convert Lab planes back to an HxWx3 8-bit sRGB image.

    Out-of-gamut values clamp per channel before quantization, so the
    function is total on any finite Lab input.
    """
    fy = (lab.L + 16.0) / 116.0
    fx = fy + lab.a / 500.0
    fz = fy - lab.b / 200.0
    xyz = np.stack([_lab_finv(fx), _lab_finv(fy), _lab_finv(fz)], axis=-1) * _WHITE_D65
    linear = xyz @ _XYZ_TO_RGB.T
    srgb = _linear_to_srgb(linear)
    return np.clip(np.round(srgb * 255.0), 0, 255).astype(np.uint8)


def normalize(lab: LabImage) -> NetPlanes:
    """Map Lab planes into network space: x = L/50 - 1, y = (a/128, b/128).

    Outputs are clamped to [-1, 1].
    """
    x = np.clip(lab.L / 50.0 - 1.0, -1.0, 1.0)[..., None]
    y = np.clip(
        np.stack([lab.a / 128.0, lab.b / 128.0], axis=-1), -1.0, 1.0
    )
    return NetPlanes(x=x, y=y)


def denormalize_merge(x: np.ndarray, y: np.ndarray) -> LabImage:
    """Invert normalize(): rebuild Lab planes from network-space x and y.

    Exact affine inverse; raises ShapeError when the planes disagree in size
    (that is a caller bug, not a data condition).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 2:
        x = x[..., None]
    if x.ndim != 3 or x.shape[2] != 1 or y.ndim != 3 or y.shape[2] != 2:
        raise ShapeError(f"expected HxWx1 and HxWx2 planes, got {x.shape} and {y.shape}")
    if x.shape[:2] != y.shape[:2]:
        raise ShapeError(
            f"luma and chroma spatial sizes differ: {x.shape[:2]} vs {y.shape[:2]}"
        )
    L = (x[..., 0] + 1.0) * 50.0
    a = y[..., 0] * 128.0
    b = y[..., 1] * 128.0
    return LabImage(L=L, a=a, b=b)


def luma_plane(rgb: np.ndarray) -> np.ndarray:
    """Extract the normalized HxWx1 luma plane of an RGB image, dropping chroma."""
    return normalize(rgb_to_lab(rgb)).x


def _require_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 image, got shape {rgb.shape}")
    if rgb.shape[0] < 1 or rgb.shape[1] < 1:
        raise ShapeError(f"image must be at least 1x1, got shape {rgb.shape}")
    return rgb


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or JPEG bytes to an HxWx3 uint8 array.

    Grayscale and paletted inputs are expanded to RGB.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"cannot decode image: {exc}") from exc


def read_image(path: str | Path) -> np.ndarray:
    """Read a PNG or JPEG file as an HxWx3 uint8 array."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read image file {path}: {exc}") from exc
    return decode_image(data)


def encode_png(rgb: np.ndarray) -> bytes:
    """Encode an HxWx3 uint8 array as PNG bytes."""
    rgb = _require_rgb(rgb)
    buf = io.BytesIO()
    Image.fromarray(rgb.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_png(path: str | Path, rgb: np.ndarray) -> None:
    """Write an HxWx3 uint8 array to a PNG file."""
    Path(path).write_bytes(encode_png(rgb))
