import json
import struct

import numpy as np
import pytest
import torch

from chromasem.checkpoint import (
    Checkpoint,
    build_model,
    load_checkpoint,
    load_model,
    net_config_dict,
    save_checkpoint,
)
from chromasem.colornet import build_colornet, init_colornet
from chromasem.errors import (
    FormatError,
    TensorNameError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from chromasem.segnet import build_gridnet, init_gridnet

from conftest import SMALL_COLOR, SMALL_GRID


def seg_checkpoint(seed=0, epoch=3) -> Checkpoint:
    return Checkpoint(
        target="segmenter",
        net_config=net_config_dict(SMALL_GRID),
        weights=init_gridnet(SMALL_GRID, seed=seed),
        epoch=epoch,
        loss_history=[2.0, 1.5, 1.2],
        train_config={"lr": 1e-4},
    )


def test_roundtrip_preserves_everything(tmp_path):
    ck = seg_checkpoint()
    path = tmp_path / "seg.ckpt"
    save_checkpoint(ck, path)
    back = load_checkpoint(path)
    assert back.target == "segmenter"
    assert back.epoch == 3
    assert back.loss_history == [2.0, 1.5, 1.2]
    assert back.train_config == {"lr": 1e-4}
    assert back.weights.equal(ck.weights)


def test_roundtrip_forward_is_bit_identical(tmp_path):
    ck = seg_checkpoint(seed=9)
    before = build_model(ck)
    path = tmp_path / "seg.ckpt"
    save_checkpoint(ck, path)
    after = build_model(load_checkpoint(path))
    x = torch.randn(1, 1, 32, 32)
    with torch.no_grad():
        assert torch.equal(before(x), after(x))


def test_colorizer_roundtrip_forward(tmp_path):
    ck = Checkpoint(
        target="colorizer",
        net_config=net_config_dict(SMALL_COLOR),
        weights=init_colornet(SMALL_COLOR, seed=2),
        epoch=1,
        loss_history=[0.5],
        train_config={},
    )
    path = tmp_path / "col.ckpt"
    save_checkpoint(ck, path)
    model, back = load_model(path, expect="colorizer")
    x, s = torch.randn(1, 1, 32, 32), torch.randn(1, 1, 32, 32)
    with torch.no_grad():
        want = build_colornet(SMALL_COLOR, ck.weights)(x, s)
        got = model(x, s)
    assert torch.equal(want, got)
    assert back.epoch == 1


def test_header_is_length_prefixed_json(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    raw = path.read_bytes()
    (hlen,) = struct.unpack("<Q", raw[:8])
    header = json.loads(raw[8 : 8 + hlen])
    assert header["format_version"] == 1
    assert header["target"] == "segmenter"
    names = [t["name"] for t in header["tensors"]]
    assert names == seg_checkpoint().weights.names()
    offsets = [t["offset"] for t in header["tensors"]]
    assert offsets == sorted(offsets)
    assert all(t["dtype"] == "<f4" for t in header["tensors"])


def test_truncated_blob_detected(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    raw = path.read_bytes()
    (tmp_path / "cut.ckpt").write_bytes(raw[: len(raw) - 64])
    with pytest.raises(TruncatedCheckpointError):
        load_checkpoint(tmp_path / "cut.ckpt")


def test_truncated_header_detected(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    raw = path.read_bytes()
    (tmp_path / "cut.ckpt").write_bytes(raw[:5])
    with pytest.raises(TruncatedCheckpointError):
        load_checkpoint(tmp_path / "cut.ckpt")
    (tmp_path / "cut2.ckpt").write_bytes(raw[:30])
    with pytest.raises(TruncatedCheckpointError):
        load_checkpoint(tmp_path / "cut2.ckpt")


def test_corrupt_header_json_detected(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    raw = bytearray(path.read_bytes())
    raw[9] = ord("!")
    (tmp_path / "bad.ckpt").write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "bad.ckpt")


def test_version_mismatch_detected(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    raw = path.read_bytes()
    (hlen,) = struct.unpack("<Q", raw[:8])
    header = json.loads(raw[8 : 8 + hlen])
    header["format_version"] = 99
    blob = json.dumps(header).encode()
    (tmp_path / "v99.ckpt").write_bytes(struct.pack("<Q", len(blob)) + blob + raw[8 + hlen :])
    with pytest.raises(VersionMismatchError):
        load_checkpoint(tmp_path / "v99.ckpt")


def test_wrong_kind_checkpoint_is_a_tensor_name_error(tmp_path):
    path = tmp_path / "seg.ckpt"
    save_checkpoint(seg_checkpoint(), path)
    with pytest.raises(TensorNameError):
        load_model(path, expect="colorizer")


def test_load_model_validates_expect():
    with pytest.raises(ValueError):
        load_model("whatever.ckpt", expect="classifier")


def test_build_model_reconstructs_the_saved_config(tmp_path):
    ck = seg_checkpoint()
    path = tmp_path / "seg.ckpt"
    save_checkpoint(ck, path)
    model = build_model(load_checkpoint(path))
    assert model.cfg.row_depths == SMALL_GRID.row_depths
    assert model.cfg.num_classes == SMALL_GRID.num_classes
