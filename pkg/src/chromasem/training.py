"""Dataset ingestion, augmentation, and the optimization loop for both nets.

Dataset layout: ROOT/images/NAME.jpg (or .png) paired with
ROOT/labels/NAME.png, where the label PNG stores class indices as pixel
values. Training follows the same recipe for both targets: Adam
(beta1=0.9, beta2=0.999, lr=1e-4 by default), per-sample augmentation
(resize to scale_size, random crop to crop_size, horizontal flip), and a
checkpoint written every epoch. The colorizer always trains against
ground-truth maps; predicted maps only substitute at inference time.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import cv2
import numpy as np
import torch

from .checkpoint import (
    Checkpoint,
    TARGET_COLORIZER,
    TARGET_SEGMENTER,
    net_config_dict,
    save_checkpoint,
)
from .colornet import (
    ColorNetConfig,
    build_colornet,
    huber_loss_tensor,
    init_colornet,
)
from .colorspace import normalize, read_image, rgb_to_lab
from .errors import DatasetError, TrainingDivergedError
from .segnet import GridNetConfig, build_gridnet, init_gridnet, seg_loss_tensor
from .semantic_map import DEFAULT_NUM_CLASSES, SemanticMap, encode_map, load_map_file
from .weights import NetWeights

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


@dataclass
class Sample:
    """One training pair: an RGB image and its filled ground-truth map."""

    rgb: np.ndarray
    map: SemanticMap
    name: str = ""

    def __post_init__(self) -> None:
        if self.rgb.shape[:2] != (self.map.height, self.map.width):
            raise DatasetError(
                f"sample {self.name or '<unnamed>'}: image {self.rgb.shape[:2]} and "
                f"map {(self.map.height, self.map.width)} sizes differ"
            )


@dataclass
class TrainConfig:
    target: str = TARGET_COLORIZER
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 16
    epochs: int = 1
    scale_size: int = 360
    crop_size: int = 352
    seed: int = 0
    precision: int = 32
    num_classes: int = DEFAULT_NUM_CLASSES

    def __post_init__(self) -> None:
        if self.target not in (TARGET_SEGMENTER, TARGET_COLORIZER):
            raise ValueError(f"target must be segmenter or colorizer, got {self.target!r}")
        if self.crop_size > self.scale_size:
            raise ValueError("crop_size must be <= scale_size")
        if self.crop_size % 16:
            raise ValueError("crop_size must be divisible by 16")
        if self.precision not in (32, 64):
            raise ValueError(f"precision must be 32 or 64, got {self.precision}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def load_dataset(
    root: str | Path, num_classes: int = DEFAULT_NUM_CLASSES
) -> list[Sample]:
    """Load image/label pairs from ROOT/images and ROOT/labels, sorted by filename."""
    root = Path(root)
    images_dir = root / "images"
    labels_dir = root / "labels"
    if not images_dir.is_dir():
        raise DatasetError(f"missing images directory {images_dir}")
    samples = []
    for img_path in sorted(images_dir.iterdir(), key=lambda p: p.name):
        if img_path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        label_path = labels_dir / f"{img_path.stem}.png"
        if not label_path.is_file():
            raise DatasetError(
                f"image {img_path.name} has no label file {label_path}"
            )
        rgb = read_image(img_path)
        sem = load_map_file(label_path, num_classes)
        samples.append(Sample(rgb=rgb, map=sem, name=img_path.stem))
    if not samples:
        raise DatasetError(f"no images found under {images_dir}")
    return samples


def augment(
    sample: Sample,
    rng: np.random.Generator,
    scale_size: int = 360,
    crop_size: int = 352,
) -> Sample:
    """Resize to scale_size, take a random crop, flip horizontally with p=0.5.

    The image is resized bilinearly and the map nearest-neighbor; both get
    the same crop window and flip, so pixels stay aligned with labels.
    """
    img = cv2.resize(sample.rgb, (scale_size, scale_size), interpolation=cv2.INTER_LINEAR)
    labels = cv2.resize(
        sample.map.labels, (scale_size, scale_size), interpolation=cv2.INTER_NEAREST
    )
    top = int(rng.integers(0, scale_size - crop_size + 1))
    left = int(rng.integers(0, scale_size - crop_size + 1))
    img = img[top : top + crop_size, left : left + crop_size]
    labels = labels[top : top + crop_size, left : left + crop_size]
    if rng.random() < 0.5:
        img = img[:, ::-1]
        labels = labels[:, ::-1]
    return Sample(
        rgb=np.ascontiguousarray(img),
        map=SemanticMap(np.ascontiguousarray(labels), sample.map.num_classes),
        name=sample.name,
    )


def _batch_tensors(
    batch: list[Sample], target: str, dtype: torch.dtype
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor | None]:
    planes = [normalize(rgb_to_lab(s.rgb)) for s in batch]
    x = torch.from_numpy(np.stack([p.x for p in planes])).permute(0, 3, 1, 2).to(dtype)
    if target == TARGET_SEGMENTER:
        labels = torch.from_numpy(
            np.stack([s.map.labels.astype(np.int64) for s in batch])
        )
        return x, labels, None
    sem = torch.from_numpy(np.stack([encode_map(s.map) for s in batch]))
    y = torch.from_numpy(np.stack([p.y for p in planes]))
    return x, sem.permute(0, 3, 1, 2).to(dtype), y.permute(0, 3, 1, 2).to(dtype)


def train(
    cfg: TrainConfig,
    data: list[Sample],
    out_dir: str | Path | None = None,
    on_step: Callable[[int, float], None] | None = None,
    net_config: GridNetConfig | ColorNetConfig | None = None,
) -> Checkpoint:
    """Run the optimization loop; returns the final checkpoint.

    Streams (step, loss) through on_step. When out_dir is given, the latest
    checkpoint is rewritten after every epoch and the final one saved as
    checkpoint_final.ckpt. Incomplete trailing batches are dropped.
    """
    if not data:
        raise ValueError("training data is empty")
    if cfg.batch_size > len(data):
        raise ValueError(
            f"batch_size {cfg.batch_size} exceeds dataset size {len(data)}; "
            "every epoch would be empty"
        )
    rng = np.random.default_rng(cfg.seed)
    if cfg.target == TARGET_SEGMENTER:
        net_cfg = net_config or GridNetConfig(num_classes=cfg.num_classes)
        model = build_gridnet(net_cfg, init_gridnet(net_cfg, cfg.seed), cfg.precision)
    else:
        net_cfg = net_config or ColorNetConfig()
        model = build_colornet(net_cfg, init_colornet(net_cfg, cfg.seed), cfg.precision)
    dtype = torch.float64 if cfg.precision == 64 else torch.float32
    opt = torch.optim.Adam(
        model.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
    )

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def snapshot(epoch: int, losses: list[float]) -> Checkpoint:
        return Checkpoint(
            target=cfg.target,
            net_config=net_config_dict(net_cfg),
            weights=NetWeights.from_module(model),
            epoch=epoch,
            loss_history=losses,
            train_config=cfg.to_dict(),
        )

    step = 0
    losses: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data))
        for b in range(len(data) // cfg.batch_size):
            idxs = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            batch = [
                augment(data[i], rng, cfg.scale_size, cfg.crop_size) for i in idxs
            ]
            x, sem_or_labels, y = _batch_tensors(batch, cfg.target, dtype)
            if cfg.target == TARGET_SEGMENTER:
                loss = seg_loss_tensor(model(x), sem_or_labels)
            else:
                loss = huber_loss_tensor(model(x, sem_or_labels), y)
            value = float(loss.detach())
            step += 1
            if not np.isfinite(value):
                raise TrainingDivergedError(f"non-finite loss {value} at step {step}")
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            losses.append(value)
            if on_step is not None:
                on_step(step, value)
        if out_path is not None:
            save_checkpoint(snapshot(epoch, losses), out_path / "checkpoint_last.ckpt")

    final = snapshot(cfg.epochs, losses)
    if out_path is not None:
        save_checkpoint(final, out_path / "checkpoint_final.ckpt")
    return final
