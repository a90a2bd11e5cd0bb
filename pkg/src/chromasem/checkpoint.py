"""Checkpoint container: JSON metadata header followed by raw tensor blobs.

Layout: an 8-byte little-endian header length, the JSON header, then the
tensor values as little-endian float32 blobs concatenated in directory
order. The header carries the format version, a config echo, the epoch,
the loss history, and the tensor directory (name, dtype, shape, offset
into the blob section).
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .colornet import ColorNet, ColorNetConfig, build_colornet
from .errors import (
    FormatError,
    TensorNameError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from .segnet import GridNet, GridNetConfig, build_gridnet
from .weights import NetWeights

FORMAT_VERSION = 1
_LEN = struct.Struct("<Q")

TARGET_SEGMENTER = "segmenter"
TARGET_COLORIZER = "colorizer"


@dataclass
class Checkpoint:
    target: str
    net_config: dict
    weights: NetWeights
    epoch: int = 0
    loss_history: list[float] = field(default_factory=list)
    train_config: dict | None = None


def _net_config_from_dict(target: str, raw: dict) -> GridNetConfig | ColorNetConfig:
    if target == TARGET_SEGMENTER:
        raw = dict(raw)
        raw["row_depths"] = tuple(raw["row_depths"])
        return GridNetConfig(**raw)
    raw = dict(raw)
    raw["encoder_depths"] = tuple(raw["encoder_depths"])
    return ColorNetConfig(**raw)


def net_config_dict(cfg: GridNetConfig | ColorNetConfig) -> dict:
    return dataclasses.asdict(cfg)


def save_checkpoint(ck: Checkpoint, path: str | Path) -> None:
    directory = []
    offset = 0
    blobs = []
    for name, value in ck.weights.entries:
        blob = np.ascontiguousarray(value, dtype="<f4").tobytes()
        directory.append(
            {"name": name, "dtype": "<f4", "shape": list(value.shape), "offset": offset}
        )
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "target": ck.target,
            "epoch": ck.epoch,
            "loss_history": ck.loss_history,
            "train_config": ck.train_config,
            "net_config": ck.net_config,
            "tensors": directory,
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_LEN.pack(len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _LEN.size:
        raise TruncatedCheckpointError(f"{path}: file shorter than the length prefix")
    (header_len,) = _LEN.unpack_from(data)
    if len(data) < _LEN.size + header_len:
        raise TruncatedCheckpointError(f"{path}: header truncated")
    try:
        header = json.loads(data[_LEN.size : _LEN.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed checkpoint header: {exc}") from exc
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: checkpoint format version {version!r}, expected {FORMAT_VERSION}"
        )
    blob = data[_LEN.size + header_len :]
    entries = []
    for tensor in header["tensors"]:
        if tensor["dtype"] != "<f4":
            raise FormatError(f"{path}: unsupported tensor dtype {tensor['dtype']!r}")
        count = int(np.prod(tensor["shape"], dtype=np.int64)) if tensor["shape"] else 1
        start, end = tensor["offset"], tensor["offset"] + 4 * count
        if end > len(blob):
            raise TruncatedCheckpointError(
                f"{path}: blob for tensor {tensor['name']!r} ends at byte {end}, "
                f"file has {len(blob)}"
            )
        values = np.frombuffer(blob[start:end], dtype="<f4").reshape(tensor["shape"])
        entries.append((tensor["name"], values.copy()))
    return Checkpoint(
        target=header["target"],
        net_config=header["net_config"],
        weights=NetWeights(entries),
        epoch=header["epoch"],
        loss_history=list(header["loss_history"]),
        train_config=header.get("train_config"),
    )


def build_model(ck: Checkpoint, precision: int = 32) -> GridNet | ColorNet:
    """Instantiate the checkpoint's own network kind with its stored weights."""
    cfg = _net_config_from_dict(ck.target, ck.net_config)
    if ck.target == TARGET_SEGMENTER:
        return build_gridnet(cfg, ck.weights, precision)
    return build_colornet(cfg, ck.weights, precision)


def load_model(
    path: str | Path, expect: str, precision: int = 32
) -> tuple[torch.nn.Module, Checkpoint]:
    """Load a checkpoint that must hold weights for the expected network kind.

    A checkpoint of the other kind fails with a tensor-name mismatch when its
    weights are matched against the expected architecture's parameters.
    """
    if expect not in (TARGET_SEGMENTER, TARGET_COLORIZER):
        raise ValueError(f"expect must be segmenter or colorizer, got {expect!r}")
    ck = load_checkpoint(path)
    if ck.target == expect:
        return build_model(ck, precision), ck
    model = (
        build_gridnet(precision=precision)
        if expect == TARGET_SEGMENTER
        else build_colornet(precision=precision)
    )
    try:
        ck.weights.load_into(model)
    except TensorNameError as exc:
        raise TensorNameError(
            f"{path}: checkpoint holds {ck.target} tensors, cannot load as {expect}: {exc}"
        ) from exc
    return model, ck
