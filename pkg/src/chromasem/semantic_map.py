"""The editable per-pixel class-label field and its stroke/serialization ops.

A semantic map is the user-facing artifact of the whole system: the
segmenter predicts one, the user repairs it with brush strokes, and the
colorizer consumes it as a single encoded plane. Label semantics follow
PASCAL-Context: index 0 is background, indices 1..59 are the 59 most
frequent classes. Painting label 0 is how a region's semantic information
is removed.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, InvalidLabelError, ShapeError

DEFAULT_NUM_CLASSES = 60


@dataclass(frozen=True)
class ClassEntry:
    index: int
    name: str
    color: tuple[int, int, int]


@dataclass(frozen=True)
class ClassTable:
    """Dense index -> (name, display color) table for background + 59 classes."""

    entries: tuple[ClassEntry, ...]

    def __post_init__(self) -> None:
        indices = [e.index for e in self.entries]
        if indices != list(range(len(self.entries))):
            raise FormatError("class table indices must be dense from 0")
        colors = {e.color for e in self.entries}
        if len(colors) != len(self.entries):
            raise FormatError("class table display colors must be unique")

    @property
    def num_classes(self) -> int:
        return len(self.entries)

    def name_of(self, index: int) -> str:
        return self.entries[index].name

    def color_of(self, index: int) -> tuple[int, int, int]:
        return self.entries[index].color

    def palette(self) -> list[int]:
        """Flat [r0,g0,b0, r1,g1,b1, ...] list padded to 256 entries for PNG."""
        flat = [c for e in self.entries for c in e.color]
        flat += [0] * (768 - len(flat))
        return flat

    def to_json(self) -> list[dict]:
        return [
            {"index": e.index, "name": e.name, "color": list(e.color)}
            for e in self.entries
        ]


def load_class_table() -> ClassTable:
    """Load the bundled PASCAL-Context class table (background + 59 classes)."""
    raw = resources.files("chromasem.data").joinpath("pascal_context_classes.json")
    entries = json.loads(raw.read_text())
    return ClassTable(
        entries=tuple(
            ClassEntry(index=e["index"], name=e["name"], color=tuple(e["color"]))
            for e in entries
        )
    )


@dataclass
class SemanticMap:
    """HxW field of class labels, each in [0, num_classes)."""

    labels: np.ndarray
    num_classes: int = DEFAULT_NUM_CLASSES

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise ShapeError(f"labels must be HxW, got shape {self.labels.shape}")
        if self.labels.shape[0] < 1 or self.labels.shape[1] < 1:
            raise ShapeError(f"map must be at least 1x1, got {self.labels.shape}")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise FormatError(f"labels must be integer, got dtype {self.labels.dtype}")
        if self.labels.size and int(self.labels.max()) >= self.num_classes:
            raise InvalidLabelError(
                f"label {int(self.labels.max())} out of range for "
                f"{self.num_classes} classes"
            )
        if self.labels.size and int(self.labels.min()) < 0:
            raise InvalidLabelError(f"negative label {int(self.labels.min())}")
        self.labels = self.labels.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def copy(self) -> "SemanticMap":
        return SemanticMap(self.labels.copy(), self.num_classes)


@dataclass
class Stroke:
    """One brush action: a class label swept along a point path with a radius."""

    label: int
    radius: float
    path: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError(f"stroke radius must be >= 1, got {self.radius}")
        if not self.path:
            raise ValueError("stroke path must contain at least one point")


def new_map(
    height: int, width: int, fill: int, num_classes: int = DEFAULT_NUM_CLASSES
) -> SemanticMap:
    """Create a uniform map of the given fill label."""
    if height < 1 or width < 1:
        raise ShapeError(f"map must be at least 1x1, got {height}x{width}")
    if not 0 <= fill < num_classes:
        raise InvalidLabelError(f"fill label {fill} out of range for {num_classes} classes")
    return SemanticMap(np.full((height, width), fill, dtype=np.uint8), num_classes)


def encode_map(m: SemanticMap) -> np.ndarray:
    """Encode labels into the colorizer's single input plane.

    s = 2*label/(C-1) - 1: strictly increasing in the label index, so the
    encoding is injective; label 0 maps to -1 and label C-1 to +1.
    """
    scale = m.num_classes - 1
    return (2.0 * m.labels.astype(np.float64) / scale - 1.0)[..., None]


def _disc_mask(shape: tuple[int, int], stroke: Stroke) -> np.ndarray:
    """Boolean mask of pixels within stroke.radius of the swept path."""
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    r = float(stroke.radius)
    pts = [
        (min(max(float(x), 0.0), w - 1.0), min(max(float(y), 0.0), h - 1.0))
        for x, y in stroke.path
    ]
    segments = list(zip(pts, pts[1:])) if len(pts) > 1 else [(pts[0], pts[0])]
    for (x0, y0), (x1, y1) in segments:
        lo_x = max(int(np.floor(min(x0, x1) - r)), 0)
        hi_x = min(int(np.ceil(max(x0, x1) + r)), w - 1)
        lo_y = max(int(np.floor(min(y0, y1) - r)), 0)
        hi_y = min(int(np.ceil(max(y0, y1) + r)), h - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        ys, xs = np.mgrid[lo_y : hi_y + 1, lo_x : hi_x + 1]
        vx, vy = x1 - x0, y1 - y0
        seg_len2 = vx * vx + vy * vy
        if seg_len2 == 0.0:
            d2 = (xs - x0) ** 2 + (ys - y0) ** 2
        else:
            t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / seg_len2, 0.0, 1.0)
            d2 = (xs - (x0 + t * vx)) ** 2 + (ys - (y0 + t * vy)) ** 2
        mask[lo_y : hi_y + 1, lo_x : hi_x + 1] |= d2 <= r * r
    return mask


def apply_stroke(m: SemanticMap, stroke: Stroke) -> SemanticMap:
    """Return a new map with stroke.label painted over the swept disc.

    Pixels farther than the radius from every path segment are unchanged.
    Applying the same stroke twice is idempotent.
    """
    if not 0 <= stroke.label < m.num_classes:
        raise InvalidLabelError(
            f"stroke label {stroke.label} out of range for {m.num_classes} classes"
        )
    out = m.labels.copy()
    out[_disc_mask(out.shape, stroke)] = stroke.label
    return SemanticMap(out, m.num_classes)


def save_map(m: SemanticMap, table: ClassTable | None = None) -> bytes:
    """Serialize a map as an 8-bit indexed PNG whose pixel values are labels.

    The palette carries the class display colors so the file previews as a
    color-coded map, but only the index values are semantic.
    """
    img = Image.fromarray(m.labels, mode="P")
    img.putpalette((table or load_class_table()).palette())
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def load_map(data: bytes, num_classes: int = DEFAULT_NUM_CLASSES) -> SemanticMap:
    """Parse an indexed (or plain grayscale) PNG back into a SemanticMap.

    Pixel values are label indices; any value >= num_classes is rejected.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.mode not in ("P", "L"):
                raise FormatError(
                    f"semantic map PNG must be single-channel indexed, got mode {img.mode}"
                )
            labels = np.asarray(img, dtype=np.int64)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"cannot decode semantic map: {exc}") from exc
    return SemanticMap(labels, num_classes)


def save_map_file(m: SemanticMap, path: str | Path, table: ClassTable | None = None) -> None:
    Path(path).write_bytes(save_map(m, table))


def load_map_file(path: str | Path, num_classes: int = DEFAULT_NUM_CLASSES) -> SemanticMap:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read map file {path}: {exc}") from exc
    return load_map(data, num_classes)
