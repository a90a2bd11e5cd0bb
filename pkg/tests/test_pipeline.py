"""Full pipeline: resize, pad, segment, substitute, colorize, merge."""

import copy

import numpy as np
import pytest
import torch

from chromasem.errors import ShapeError
from chromasem.pipeline import (
    colorize_pipeline,
    segment_image,
    segment_working,
    working_size,
)
from chromasem.colorspace import luma_plane
from chromasem.semantic_map import SemanticMap, new_map


def synth_rgb(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_working_size_scales_shorter_side():
    assert working_size(40, 56, 32) == (32, 45)
    assert working_size(56, 40, 32) == (45, 32)
    assert working_size(64, 64, 32) == (32, 32)
    # default working side
    assert working_size(352, 500) == (352, 500)
    assert working_size(704, 1000) == (352, 500)


def test_output_keeps_input_size(small_segmenter, small_colorizer):
    rgb = synth_rgb(40, 56)
    res = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    assert res.image.shape == rgb.shape
    assert res.image.dtype == np.uint8
    # the map used by the colorizer lives at working resolution
    assert (res.map.height, res.map.width) == (32, 45)
    assert res.colorizer_forward_ms > 0
    assert res.segmenter_forward_ms > 0


def test_map_substitution_identity(small_segmenter, small_colorizer):
    rgb = synth_rgb(40, 56, seed=1)
    first = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    again = colorize_pipeline(
        rgb, None, small_colorizer, user_map=first.map, working_side=32
    )
    assert np.array_equal(first.image, again.image)
    assert np.array_equal(first.map.labels, again.map.labels)
    assert again.segmenter_forward_ms == 0.0


def test_edited_map_changes_output(small_segmenter, small_colorizer):
    rgb = synth_rgb(48, 48, seed=2)
    base = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    edited = base.map.labels.copy()
    edited[:, :] = (edited + 7) % base.map.num_classes
    res = colorize_pipeline(
        rgb,
        None,
        small_colorizer,
        user_map=SemanticMap(edited, base.map.num_classes),
        working_side=32,
    )
    assert not np.array_equal(base.image, res.image)


def test_luma_preserved_exactly_up_to_quantization(small_segmenter, small_colorizer):
    # Zeroing the chroma head forces a,b = 0, so the output is the gray
    # rendering of the input's own lightness; any difference is 8-bit
    # quantization in the Lab -> sRGB direction.
    muted = copy.deepcopy(small_colorizer)
    with torch.no_grad():
        muted.final_b.weight.zero_()
        muted.final_b.bias.zero_()
    rgb = synth_rgb(40, 56, seed=3)
    res = colorize_pipeline(rgb, small_segmenter, muted, working_side=32)
    dL = 50.0 * np.abs(luma_plane(res.image) - luma_plane(rgb))
    assert float(dL.max()) < 1.0


def test_user_map_at_image_size_is_resized(small_colorizer):
    rgb = synth_rgb(40, 56, seed=4)
    m = new_map(40, 56, fill=13)
    res = colorize_pipeline(rgb, None, small_colorizer, user_map=m, working_side=32)
    assert (res.map.height, res.map.width) == (32, 45)
    assert np.all(res.map.labels == 13)


def test_user_map_wrong_size_rejected(small_colorizer):
    rgb = synth_rgb(40, 56, seed=5)
    m = new_map(17, 23, fill=0)
    with pytest.raises(ShapeError):
        colorize_pipeline(rgb, None, small_colorizer, user_map=m, working_side=32)


def test_weights_required():
    rgb = synth_rgb(32, 32)
    with pytest.raises(ValueError):
        colorize_pipeline(rgb, None, None, working_side=32)


def test_segmenter_required_without_map(small_colorizer):
    rgb = synth_rgb(32, 32)
    with pytest.raises(ValueError):
        colorize_pipeline(rgb, None, small_colorizer, working_side=32)


def test_pipeline_deterministic(small_segmenter, small_colorizer):
    rgb = synth_rgb(36, 52, seed=6)
    a = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    b = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.map.labels, b.map.labels)


def test_segment_image_returns_input_size(small_segmenter):
    rgb = synth_rgb(40, 56, seed=7)
    m = segment_image(rgb, small_segmenter, working_side=32)
    assert (m.height, m.width) == (40, 56)
    work, ms = segment_working(rgb, small_segmenter, working_side=32)
    assert (work.height, work.width) == (32, 45)
    assert ms > 0


def test_small_image_padding_roundtrip(small_segmenter, small_colorizer):
    # 20x20 scales to 32x32 (already divisible); 20x30 scales to 32x48
    rgb = synth_rgb(20, 30, seed=8)
    res = colorize_pipeline(rgb, small_segmenter, small_colorizer, working_side=32)
    assert res.image.shape == (20, 30, 3)
    assert (res.map.height, res.map.width) == (32, 48)
