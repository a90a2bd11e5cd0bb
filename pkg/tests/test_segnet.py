import numpy as np
import pytest
import torch

from chromasem.errors import InvalidLabelError, ShapeError
from chromasem.segnet import (
    GridNet,
    GridNetConfig,
    build_gridnet,
    gridnet_forward,
    init_gridnet,
    predict_map,
    seg_loss,
)
from chromasem.semantic_map import SemanticMap

from conftest import SMALL_GRID
import oracles


def test_config_validation():
    with pytest.raises(ValueError):
        GridNetConfig(rows=4)  # depth list length mismatch
    with pytest.raises(ValueError):
        GridNetConfig(columns=5)


def test_default_downscale_factor_is_sixteen():
    assert GridNetConfig().scale_factor == 16


def test_forward_shape_and_head_channels(small_segmenter):
    x = torch.randn(1, 1, 32, 48)
    with torch.no_grad():
        logits = small_segmenter(x)
    assert logits.shape == (1, 60, 32, 48)


def test_numpy_wrapper_returns_hwc(rng):
    w = init_gridnet(SMALL_GRID, seed=0)
    x = rng.uniform(-1, 1, size=(32, 32, 1))
    logits = gridnet_forward(w, x, SMALL_GRID)
    assert logits.shape == (32, 32, 60)


def test_rejects_input_not_divisible_by_sixteen(small_segmenter):
    with pytest.raises(ShapeError):
        small_segmenter(torch.randn(1, 1, 40, 32))


def test_forward_is_deterministic(small_segmenter, rng):
    x = torch.from_numpy(rng.uniform(-1, 1, size=(1, 1, 32, 32))).float()
    with torch.no_grad():
        a = small_segmenter(x)
        b = small_segmenter(x)
    assert torch.equal(a, b)


def test_default_parameter_count_matches_layer_arithmetic():
    model = GridNet()
    # frozen from the layer-arithmetic oracle
    assert sum(p.numel() for p in model.parameters()) == 10219660
    assert oracles.gridnet_param_count() == 10219660


def test_small_parameter_count_matches_layer_arithmetic(small_segmenter):
    want = oracles.gridnet_param_count(
        depths=SMALL_GRID.row_depths, num_classes=SMALL_GRID.num_classes
    )
    assert sum(p.numel() for p in small_segmenter.parameters()) == want


def test_init_gridnet_is_seed_deterministic():
    a = init_gridnet(SMALL_GRID, seed=3)
    b = init_gridnet(SMALL_GRID, seed=3)
    c = init_gridnet(SMALL_GRID, seed=4)
    assert a.equal(b)
    assert not a.equal(c)


def test_build_gridnet_loads_given_weights(small_segmenter):
    w = init_gridnet(SMALL_GRID, seed=7)
    rebuilt = build_gridnet(SMALL_GRID, w)
    x = torch.randn(1, 1, 32, 32)
    with torch.no_grad():
        assert torch.equal(small_segmenter(x), rebuilt(x))


def test_predict_map_argmax_and_tie_break():
    logits = np.zeros((2, 2, 5), dtype=np.float32)
    logits[0, 0, 3] = 2.0
    logits[0, 1, 0] = logits[0, 1, 4] = 1.0  # tie -> lowest index wins
    m = predict_map(logits, num_classes=5)
    assert m.labels[0, 0] == 3
    assert m.labels[0, 1] == 0
    assert m.labels[1, 1] == 0
    assert m.num_classes == 5


def test_seg_loss_matches_bruteforce_reference(rng):
    logits = rng.normal(size=(4, 5, 7)).astype(np.float64)
    labels = rng.integers(0, 7, size=(4, 5)).astype(np.uint8)
    got = seg_loss(logits, SemanticMap(labels, 7))
    want = oracles.cross_entropy(logits.tolist(), labels.tolist())
    assert got == pytest.approx(want, abs=1e-9)


def test_seg_loss_rejects_labels_beyond_classes(rng):
    logits = rng.normal(size=(2, 2, 3)).astype(np.float64)
    labels = SemanticMap(np.full((2, 2), 5, dtype=np.uint8), 10)
    with pytest.raises(InvalidLabelError):
        seg_loss(logits, labels)


def test_seg_loss_shape_mismatch(rng):
    logits = rng.normal(size=(2, 2, 3))
    with pytest.raises(ShapeError):
        seg_loss(logits, SemanticMap(np.zeros((3, 3), dtype=np.uint8), 3))


def test_grid_uses_all_parameters(small_segmenter):
    """Every parameter should receive gradient from a scalar of the output."""
    x = torch.randn(1, 1, 32, 32)
    small_segmenter.zero_grad()
    small_segmenter(x).sum().backward()
    for name, p in small_segmenter.named_parameters():
        assert p.grad is not None, name
        assert float(p.grad.abs().sum()) > 0, name
    small_segmenter.zero_grad(set_to_none=True)
