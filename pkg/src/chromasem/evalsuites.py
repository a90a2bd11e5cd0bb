"""Property and learnability suites behind the `eval` command and acceptance tests.

Each run_* function returns a SuiteResult with one row per checked property
and, when out_dir is given, writes a report.csv plus rendered figures next
to it. Thresholds live here so the CLI and the test suite agree on them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
import torch

from .colornet import (
    ColorNet,
    ColorNetConfig,
    build_colornet,
    huber_loss_tensor,
    init_colornet,
    instance_norm_tensor,
)
from .colorspace import lab_to_rgb, normalize, rgb_to_lab
from .gradcheck import GradSample, sampled_gradient_errors
from .pipeline import colornet_forward_model, gridnet_forward_model
from .report import (
    map_to_rgb,
    save_gradcheck_scatter,
    save_histogram,
    save_image_panel,
    save_loss_curve,
    write_csv,
)
from .segnet import GridNetConfig, build_gridnet, init_gridnet, predict_map, seg_loss_tensor
from .semantic_map import SemanticMap, encode_map
from .synth import make_dataset
from .training import Sample, TrainConfig, train
from .weights import NetWeights


@dataclass
class SuiteRow:
    metric: str
    value: float
    bound: str
    ok: bool

    def line(self) -> str:
        flag = "PASS" if self.ok else "FAIL"
        return f"{flag}  {self.metric} = {self.value:.6g}  (bound {self.bound})"


@dataclass
class SuiteResult:
    name: str
    rows: list[SuiteRow] = field(default_factory=list)
    figures: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def add(self, metric: str, value: float, bound: str, ok: bool) -> None:
        self.rows.append(SuiteRow(metric, float(value), bound, bool(ok)))

    def write(self, out_dir: str | Path | None) -> None:
        if out_dir is None:
            return
        write_csv(
            Path(out_dir) / "report.csv",
            ["metric", "value", "bound", "pass"],
            [(r.metric, f"{r.value:.9g}", r.bound, int(r.ok)) for r in self.rows],
        )


def run_colorspace(out_dir: str | Path | None = None, pixels: int = 1_000_000, seed: int = 0) -> SuiteResult:
    """Round-trip random 8-bit pixels through Lab and back; error is in 8-bit counts."""
    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(pixels)))
    rgb = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
    back = lab_to_rgb(rgb_to_lab(rgb))
    err = np.abs(back.astype(np.int16) - rgb.astype(np.int16))

    res = SuiteResult("colorspace")
    res.add("roundtrip_max_channel_error", float(err.max()), "<= 1", err.max() <= 1)
    res.add("roundtrip_mean_channel_error", float(err.mean()), "info", True)
    if out_dir is not None:
        res.figures.append(
            save_histogram(
                Path(out_dir) / "roundtrip_errors.png",
                err,
                f"Lab round-trip error over {side * side} pixels",
                "abs 8-bit channel error",
                bins=np.arange(-0.5, err.max() + 1.5, 1.0),
                vline=1.0,
            )
        )
    res.write(out_dir)
    return res


def run_gradients(
    out_dir: str | Path | None = None,
    samples: int = 200,
    size: int = 16,
    seed: int = 0,
    precision: int = 64,
) -> SuiteResult:
    """Finite-difference check of both networks' gradients.

    The acceptance bound (1e-4) is a 64-bit bound; a 32-bit run is only a
    smoke check and gets a correspondingly loose one.
    """
    rng = np.random.default_rng(seed)
    dtype = torch.float64 if precision == 64 else torch.float32
    x = torch.from_numpy(rng.uniform(-1, 1, size=(1, 1, size, size))).to(dtype)
    sem = torch.from_numpy(rng.uniform(-1, 1, size=(1, 1, size, size))).to(dtype)
    y = torch.from_numpy(rng.uniform(-0.5, 0.5, size=(1, 2, size, size))).to(dtype)
    labels = torch.from_numpy(rng.integers(0, 60, size=(1, size, size)))

    def seg_fn(m: torch.nn.Module) -> torch.Tensor:
        return seg_loss_tensor(m(x), labels)

    def col_fn(m: torch.nn.Module) -> torch.Tensor:
        return huber_loss_tensor(m(x, sem), y)

    res = SuiteResult("gradients")
    all_samples: dict[str, list[GradSample]] = {}
    seg = build_gridnet(weights=init_gridnet(seed=seed), precision=precision)
    all_samples["segmenter"] = sampled_gradient_errors(seg, seg_fn, samples, seed)
    col = build_colornet(weights=init_colornet(seed=seed), precision=precision)
    all_samples["colorizer"] = sampled_gradient_errors(col, col_fn, samples, seed)

    bound = 1e-4 if precision == 64 else 5e-2
    for net, ss in all_samples.items():
        worst = max(s.rel_error for s in ss)
        res.add(f"{net}_max_rel_error", worst, f"< {bound:g}", worst < bound)
        res.add(f"{net}_samples", len(ss), ">= 200" if samples >= 200 else "info", len(ss) >= min(samples, 200))
        if out_dir is not None:
            res.figures.append(
                save_gradcheck_scatter(
                    Path(out_dir) / f"gradcheck_{net}.png",
                    np.array([s.analytic for s in ss]),
                    np.array([s.finite_diff for s in ss]),
                    f"{net}: analytic vs central differences",
                )
            )
    res.write(out_dir)
    return res


def run_shapes(out_dir: str | Path | None = None, size: int = 352, seed: int = 0) -> SuiteResult:
    """Structural checks: feature widths, output shape, sharing, IN statistics."""
    res = SuiteResult("shapes")
    rng = np.random.default_rng(seed)
    cfg = ColorNetConfig()
    model = build_colornet(cfg, init_colornet(cfg, seed))

    gray = rng.uniform(-1, 1, size=(size, size, 1))
    sem = rng.uniform(-1, 1, size=(size, size, 1))
    trace: dict = {}
    t0 = time.perf_counter()
    with torch.no_grad():
        out = model(
            torch.from_numpy(gray).permute(2, 0, 1)[None].float(),
            torch.from_numpy(sem).permute(2, 0, 1)[None].float(),
            trace=trace,
        )
    forward_ms = (time.perf_counter() - t0) * 1000.0

    enc_want = list(cfg.encoder_depths)
    dec_want = list(cfg.decoder_input_depths)
    res.add(
        "encoder_channels_match",
        float(trace["encoder_channels"] == enc_want),
        f"== {enc_want}",
        trace["encoder_channels"] == enc_want,
    )
    res.add(
        "decoder_input_channels_match",
        float(trace["decoder_input_channels"] == dec_want),
        f"== {dec_want}",
        trace["decoder_input_channels"] == dec_want,
    )
    out_ok = tuple(out.shape) == (1, 2, size, size)
    res.add("output_shape_match", float(out_ok), f"== (1, 2, {size}, {size})", out_ok)
    res.add("colorizer_forward_ms", forward_ms, "info", True)

    seg = build_gridnet(weights=init_gridnet(seed=seed))
    with torch.no_grad():
        logits = seg(torch.from_numpy(gray).permute(2, 0, 1)[None].float())
    seg_ok = tuple(logits.shape) == (1, 60, size, size)
    res.add("segmenter_logits_shape_match", float(seg_ok), f"== (1, 60, {size}, {size})", seg_ok)

    # Shared encoder: the same parameter set serves both streams, so the
    # encoder holds exactly one stream's worth of parameters and poking any
    # one of them moves the deepest features of both streams.
    single = ColorNet(cfg)
    enc_count = sum(p.numel() for p in model.encoder.parameters())
    single_count = sum(p.numel() for p in single.encoder.parameters())
    res.add(
        "encoder_param_count_shared",
        float(enc_count),
        f"== {single_count} (single stream)",
        enc_count == single_count,
    )
    g_t = torch.from_numpy(gray[:64, :64]).permute(2, 0, 1)[None].float()
    s_t = torch.from_numpy(sem[:64, :64]).permute(2, 0, 1)[None].float()
    with torch.no_grad():
        g5, s5 = model.encode(g_t)[-1], model.encode(s_t)[-1]
        first = next(model.encoder.parameters())
        first.view(-1)[0] += 0.05
        g5b, s5b = model.encode(g_t)[-1], model.encode(s_t)[-1]
        first.view(-1)[0] -= 0.05
    moved = bool((g5b - g5).abs().max() > 0) and bool((s5b - s5).abs().max() > 0)
    res.add("perturbation_moves_both_streams", float(moved), "both level-5 features change", moved)

    feats = torch.from_numpy(rng.standard_normal((4, 8, 24, 24)) * 3.0 + 1.5)
    normed = instance_norm_tensor(feats, cfg.in_epsilon)
    mu = normed.mean(dim=(2, 3))
    var = normed.var(dim=(2, 3), unbiased=False)
    mu_max = float(mu.abs().max())
    var_dev = float((var - 1).abs().max())
    res.add("in_mean_abs_max", mu_max, "< 1e-5", mu_max < 1e-5)
    res.add("in_var_dev_max", var_dev, "< 1e-3", var_dev < 1e-3)

    res.write(out_dir)
    return res


def _eval_sample(sample: Sample, side: int) -> Sample:
    """Deterministic eval version of a sample, resized to side x side."""
    rgb = cv2.resize(sample.rgb, (side, side), interpolation=cv2.INTER_LINEAR)
    labels = cv2.resize(sample.map.labels, (side, side), interpolation=cv2.INTER_NEAREST)
    return Sample(rgb=rgb, map=SemanticMap(labels, sample.map.num_classes), name=sample.name)


def run_overfit_segmenter(
    out_dir: str | Path | None = None,
    steps: int = 500,
    images: int = 4,
    size: int = 48,
    lr: float = 2e-3,
    seed: int = 0,
) -> SuiteResult:
    """Memorize a handful of synthetic scenes; pass is >= 90% pixel accuracy."""
    data = make_dataset(images, seed=seed)
    cfg = TrainConfig(
        target="segmenter",
        lr=lr,
        batch_size=images,
        epochs=steps,
        scale_size=size,
        crop_size=size,
        seed=seed,
    )
    losses: list[float] = []
    ck = train(cfg, data, on_step=lambda s, v: losses.append(v))

    model = build_gridnet(GridNetConfig(num_classes=cfg.num_classes), ck.weights)
    correct = 0
    total = 0
    panels = []
    for sample in [_eval_sample(s, size) for s in data]:
        x = normalize(rgb_to_lab(sample.rgb)).x
        logits = gridnet_forward_model(model, x)
        pred = predict_map(logits, cfg.num_classes)
        correct += int((pred.labels == sample.map.labels).sum())
        total += pred.labels.size
        if len(panels) < 3:
            panels.extend(
                [
                    (f"{sample.name} gray", (x[..., 0] * 0.5 + 0.5)),
                    ("truth", map_to_rgb(sample.map)),
                    ("predicted", map_to_rgb(pred)),
                ]
            )
    acc = correct / total

    res = SuiteResult("overfit-segmenter")
    res.add("pixel_accuracy", acc, ">= 0.9", acc >= 0.9)
    res.add("steps", len(losses), f"<= {steps}", len(losses) <= steps)
    res.add("final_loss", losses[-1], "info", True)
    if out_dir is not None:
        res.figures.append(save_loss_curve(Path(out_dir) / "loss_curve.png", losses, "segmenter overfit"))
        res.figures.append(save_image_panel(Path(out_dir) / "predictions.png", panels[:9]))
        write_csv(Path(out_dir) / "losses.csv", ["step", "loss"], list(enumerate(losses, 1)))
    res.write(out_dir)
    return res


def _mean_chroma_error(model: ColorNet, sample: Sample) -> float:
    """Mean abs chroma error in Lab units between prediction and ground truth."""
    planes = normalize(rgb_to_lab(sample.rgb))
    sem = encode_map(sample.map)
    pred = colornet_forward_model(model, planes.x, sem)
    return float(np.abs(pred - planes.y).mean() * 128.0)


def run_overfit_colorizer(
    out_dir: str | Path | None = None,
    steps: int = 500,
    images: int = 8,
    size: int = 32,
    lr: float = 2e-3,
    seed: int = 0,
) -> SuiteResult:
    """Memorize synthetic chroma; pass is final loss under 10% of step 1."""
    data = make_dataset(images, seed=seed)
    cfg = TrainConfig(
        target="colorizer",
        lr=lr,
        batch_size=images,
        epochs=steps,
        scale_size=size,
        crop_size=size,
        seed=seed,
    )
    evals = [_eval_sample(s, size) for s in data]
    net_cfg = ColorNetConfig()
    init_model = build_colornet(net_cfg, init_colornet(net_cfg, cfg.seed))
    err_before = float(np.mean([_mean_chroma_error(init_model, s) for s in evals]))

    losses: list[float] = []
    ck = train(cfg, data, on_step=lambda s, v: losses.append(v))
    model = build_colornet(net_cfg, ck.weights)
    err_after = float(np.mean([_mean_chroma_error(model, s) for s in evals]))

    ratio = losses[-1] / losses[0]
    res = SuiteResult("overfit-colorizer")
    res.add("final_to_step1_loss_ratio", ratio, "< 0.1", ratio < 0.1)
    res.add("mean_chroma_error_before", err_before, "info", True)
    res.add(
        "mean_chroma_error_after",
        err_after,
        "< before (visible reduction)",
        err_after < err_before,
    )
    if out_dir is not None:
        sample = evals[0]
        planes = normalize(rgb_to_lab(sample.rgb))
        sem = encode_map(sample.map)

        def rendered(m: ColorNet) -> np.ndarray:
            from .colorspace import denormalize_merge

            return lab_to_rgb(denormalize_merge(planes.x, colornet_forward_model(m, planes.x, sem)))

        res.figures.append(save_loss_curve(Path(out_dir) / "loss_curve.png", losses, "colorizer overfit"))
        res.figures.append(
            save_image_panel(
                Path(out_dir) / "recolorized.png",
                [
                    ("gray", planes.x[..., 0] * 0.5 + 0.5),
                    ("truth", sample.rgb),
                    ("initial weights", rendered(init_model)),
                    ("trained", rendered(model)),
                ],
            )
        )
        write_csv(Path(out_dir) / "losses.csv", ["step", "loss"], list(enumerate(losses, 1)))
    res.write(out_dir)
    return res


def _contrast_change(model: ColorNet, gray: np.ndarray, sem: np.ndarray) -> float:
    """RMS output change under the gray-plane perturbation x -> 0.5x + 0.1."""
    base = colornet_forward_model(model, gray, sem)
    pert = colornet_forward_model(model, 0.5 * gray + 0.1, sem)
    return float(np.sqrt(np.mean((pert - base) ** 2)))


def run_in_ablation(
    out_dir: str | Path | None = None,
    trials: int = 20,
    steps: int = 100,
    size: int = 32,
    images: int = 2,
    lr: float = 1e-3,
    seed: int = 0,
) -> SuiteResult:
    """Train with/without instance normalization and compare contrast robustness.

    Both models of a trial see identical data, seeds and step counts; only
    the normalization differs. Small inputs keep the 2 x trials x steps
    training budget tractable on one core.
    """
    rows = []
    for trial in range(trials):
        data = make_dataset(images, seed=seed + 1000 * (trial + 1))
        cfg = TrainConfig(
            target="colorizer",
            lr=lr,
            batch_size=images,
            epochs=steps,
            scale_size=size,
            crop_size=size,
            seed=seed + trial,
        )
        changes = {}
        for use_in in (True, False):
            net_cfg = ColorNetConfig(use_instance_norm=use_in)
            ck = train(cfg, data, net_config=net_cfg)
            model = build_colornet(net_cfg, ck.weights)
            probe = _eval_sample(data[0], size)
            gray = normalize(rgb_to_lab(probe.rgb)).x
            changes[use_in] = _contrast_change(model, gray, encode_map(probe.map))
        rows.append((trial, changes[True], changes[False]))

    with_in = float(np.mean([r[1] for r in rows]))
    without = float(np.mean([r[2] for r in rows]))
    res = SuiteResult("in-ablation")
    res.add("trials", len(rows), ">= 20" if trials >= 20 else "info", len(rows) >= min(trials, 20))
    res.add("mean_change_with_in", with_in, "info", True)
    res.add("mean_change_without_in", without, "info", True)
    res.add(
        "with_in_less_sensitive",
        float(with_in < without),
        "mean change with IN < without",
        with_in < without,
    )
    if out_dir is not None:
        write_csv(
            Path(out_dir) / "trials.csv",
            ["trial", "change_with_in", "change_without_in"],
            [(t, f"{a:.6g}", f"{b:.6g}") for t, a, b in rows],
        )
        res.figures.append(
            save_histogram(
                Path(out_dir) / "sensitivity.png",
                np.array([r[2] - r[1] for r in rows]),
                "per-trial sensitivity gap (without IN minus with IN)",
                "output RMS change difference",
                bins=max(trials // 2, 5),
                vline=0.0,
            )
        )
    res.write(out_dir)
    return res


def run_timing(size: int = 352, repeats: int = 3, seed: int = 0) -> dict:
    """Informational: wall-clock of one colorizer forward at size x size."""
    rng = np.random.default_rng(seed)
    model = build_colornet(weights=init_colornet(seed=seed))
    gray = rng.uniform(-1, 1, size=(size, size, 1))
    sem = rng.uniform(-1, 1, size=(size, size, 1))
    colornet_forward_model(model, gray, sem)  # warmup
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        colornet_forward_model(model, gray, sem)
        times.append((time.perf_counter() - t0) * 1000.0)
    return {
        "size": size,
        "forward_ms_min": min(times),
        "forward_ms_mean": float(np.mean(times)),
        "threads": torch.get_num_threads(),
    }


SUITES = {
    "colorspace": run_colorspace,
    "gradients": run_gradients,
    "shapes": run_shapes,
}


def run_overfit(
    out_dir: str | Path | None = None, target: str = "both", **kw
) -> list[SuiteResult]:
    results = []
    if target in ("segmenter", "both"):
        sub = None if out_dir is None else Path(out_dir) / "segmenter"
        results.append(run_overfit_segmenter(sub, **kw))
    if target in ("colorizer", "both"):
        sub = None if out_dir is None else Path(out_dir) / "colorizer"
        results.append(run_overfit_colorizer(sub, **kw))
    return results
