"""Synthetic labeled scenes for desk-scale training and verification runs.

Scenes are flat-colored shapes on a light background. Each label's color is
fixed and the four lumas are well separated, so a segmenter can learn the
label field from the gray plane alone and a colorizer has unambiguous
chroma targets per region.
"""

from __future__ import annotations

import numpy as np

from .semantic_map import DEFAULT_NUM_CLASSES, SemanticMap
from .training import Sample

# label -> RGB; lumas land near L = 93, 27, 55, 84.
SCENE_COLORS: dict[int, tuple[int, int, int]] = {
    0: (235, 235, 235),
    1: (120, 24, 24),
    2: (52, 150, 52),
    3: (230, 208, 60),
}


def make_scene(
    seed: int, size: int = 96, num_classes: int = DEFAULT_NUM_CLASSES
) -> Sample:
    """One deterministic scene: background plus 2-3 colored shapes."""
    rng = np.random.default_rng(seed)
    labels = np.zeros((size, size), dtype=np.uint8)
    n_shapes = int(rng.integers(2, 4))
    shape_labels = rng.permutation([1, 2, 3])[:n_shapes]
    ys, xs = np.mgrid[0:size, 0:size]
    for label in shape_labels:
        cx, cy = rng.uniform(0.2 * size, 0.8 * size, size=2)
        extent = rng.uniform(size / 6.0, size / 3.0)
        if rng.random() < 0.5:
            mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= extent**2
        else:
            mask = (np.abs(xs - cx) <= extent) & (np.abs(ys - cy) <= 0.7 * extent)
        labels[mask] = label
    rgb = np.zeros((size, size, 3), dtype=np.uint8)
    for label, color in SCENE_COLORS.items():
        rgb[labels == label] = color
    return Sample(rgb=rgb, map=SemanticMap(labels, num_classes), name=f"scene{seed}")


def make_dataset(
    count: int, seed: int = 0, size: int = 96, num_classes: int = DEFAULT_NUM_CLASSES
) -> list[Sample]:
    return [make_scene(seed * 1000 + i, size, num_classes) for i in range(count)]
