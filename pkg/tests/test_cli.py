"""Command line behavior, exercised through main(argv) without subprocesses."""

import json

import numpy as np
import pytest

from chromasem.checkpoint import (
    Checkpoint,
    load_model,
    net_config_dict,
    save_checkpoint,
)
from chromasem.cli import _flag_or_env, main
from chromasem.colorspace import read_image, write_png
from chromasem.semantic_map import load_map_file
from chromasem.synth import make_dataset
from chromasem.weights import NetWeights

from conftest import SMALL_COLOR, SMALL_GRID


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Small checkpoints of both kinds plus an input image and a dataset."""
    from chromasem.colornet import build_colornet, init_colornet
    from chromasem.segnet import build_gridnet, init_gridnet

    root = tmp_path_factory.mktemp("cli")
    seg = build_gridnet(SMALL_GRID, init_gridnet(SMALL_GRID, seed=3))
    col = build_colornet(SMALL_COLOR, init_colornet(SMALL_COLOR, seed=3))
    save_checkpoint(
        Checkpoint("segmenter", net_config_dict(SMALL_GRID), NetWeights.from_module(seg)),
        root / "seg.ckpt",
    )
    save_checkpoint(
        Checkpoint("colorizer", net_config_dict(SMALL_COLOR), NetWeights.from_module(col)),
        root / "col.ckpt",
    )
    rng = np.random.default_rng(11)
    write_png(root / "input.png", rng.integers(0, 256, (40, 56, 3), dtype=np.uint8))

    data = root / "data"
    (data / "images").mkdir(parents=True)
    (data / "labels").mkdir()
    for sample in make_dataset(2, seed=5, size=24):
        write_png(data / "images" / f"{sample.name}.png", sample.rgb)
        from chromasem.semantic_map import save_map_file

        save_map_file(sample.map, data / "labels" / f"{sample.name}.png")
    return root


def test_segment_writes_map(workdir, capsys):
    out = workdir / "seg_out.png"
    code = main(
        [
            "segment",
            "--input", str(workdir / "input.png"),
            "--weights", str(workdir / "seg.ckpt"),
            "--out", str(out),
            "--working-side", "32",
        ]
    )
    assert code == 0
    m = load_map_file(out)
    assert (m.height, m.width) == (40, 56)
    assert "wrote" in capsys.readouterr().out


def test_colorize_and_map_substitution_bitexact(workdir, capsys):
    out1 = workdir / "color1.png"
    out2 = workdir / "color2.png"
    dumped = workdir / "used_map.png"
    code = main(
        [
            "colorize",
            "--input", str(workdir / "input.png"),
            "--seg-weights", str(workdir / "seg.ckpt"),
            "--color-weights", str(workdir / "col.ckpt"),
            "--out", str(out1),
            "--dump-map", str(dumped),
            "--working-side", "32",
        ]
    )
    assert code == 0
    assert "forward" in capsys.readouterr().out
    assert read_image(out1).shape == (40, 56, 3)

    # feeding the dumped map back must reproduce the image bit for bit
    code = main(
        [
            "colorize",
            "--input", str(workdir / "input.png"),
            "--color-weights", str(workdir / "col.ckpt"),
            "--map", str(dumped),
            "--out", str(out2),
            "--working-side", "32",
        ]
    )
    assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_colorize_needs_segmenter_or_map(workdir, capsys):
    code = main(
        [
            "colorize",
            "--input", str(workdir / "input.png"),
            "--color-weights", str(workdir / "col.ckpt"),
            "--out", str(workdir / "nope.png"),
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("chromasem: error: ")
    assert err.count("\n") == 1


def test_missing_input_is_one_error_line(workdir, capsys):
    code = main(
        [
            "segment",
            "--input", str(workdir / "missing.png"),
            "--weights", str(workdir / "seg.ckpt"),
            "--out", str(workdir / "nope.png"),
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("chromasem: error: FormatError: ")
    assert err.count("\n") == 1


def test_wrong_checkpoint_kind(workdir, capsys):
    code = main(
        [
            "segment",
            "--input", str(workdir / "input.png"),
            "--weights", str(workdir / "col.ckpt"),
            "--out", str(workdir / "nope.png"),
            "--working-side", "32",
        ]
    )
    assert code == 1
    assert "TensorNameError" in capsys.readouterr().err


def test_train_writes_report_and_checkpoints(workdir, tmp_path, capsys):
    cfg = {
        "target": "segmenter",
        "batch_size": 2,
        "epochs": 1,
        "scale_size": 24,
        "crop_size": 16,
        "lr": 1e-3,
    }
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run"
    code = main(
        [
            "train",
            "--data", str(workdir / "data"),
            "--config", str(cfg_path),
            "--out-dir", str(out_dir),
            "--log-every", "1",
        ]
    )
    assert code == 0
    assert "final loss" in capsys.readouterr().out
    rows = (out_dir / "losses.csv").read_text().strip().splitlines()
    assert rows[0] == "step,loss"
    assert len(rows) == 2  # 2 samples, batch 2, 1 epoch -> 1 step
    assert (out_dir / "loss_curve.png").is_file()
    model, ck = load_model(out_dir / "checkpoint_final.ckpt", expect="segmenter")
    assert ck.epoch == 1
    assert len(ck.loss_history) == 1


def test_train_rejects_bad_config(workdir, tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"crop_size": 15}))
    code = main(
        [
            "train",
            "--data", str(workdir / "data"),
            "--config", str(cfg_path),
            "--out-dir", str(tmp_path / "run"),
        ]
    )
    assert code == 1
    assert capsys.readouterr().err.startswith("chromasem: error: ValueError: ")


def test_eval_colorspace_writes_report(tmp_path, capsys):
    out_dir = tmp_path / "suite"
    code = main(["eval", "--suite", "colorspace", "--out-dir", str(out_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert "[colorspace] PASS" in out
    assert (out_dir / "report.csv").is_file()
    assert list(out_dir.glob("*.png"))


def test_unknown_suite_fails_argparse():
    with pytest.raises(SystemExit):
        main(["eval", "--suite", "bogus"])


def test_flag_beats_env(monkeypatch):
    monkeypatch.setenv("CHROMASEM_PORT", "9000")
    assert _flag_or_env(1234, "port", 8765) == 1234
    assert _flag_or_env(None, "port", 8765) == "9000"
    monkeypatch.delenv("CHROMASEM_PORT")
    assert _flag_or_env(None, "port", 8765) == 8765
    monkeypatch.setenv("CHROMASEM_MAX_IMAGE_SIDE", "256")
    assert _flag_or_env(None, "max-image-side", 2048) == "256"
