#!/usr/bin/env python3
"""Convert PASCAL-Context annotations into the images/ + labels/ training layout.

The released annotations are MATLAB files with one entry per pixel indexing a
459-name label list. Training uses the common 59-class subset plus background:
every pixel whose full label name is one of the 59 kept names maps to that
class index, everything else maps to 0.

Inputs:
  --mat-dir     directory of per-image .mat files (trainval annotations)
  --images-dir  PASCAL VOC2010 JPEGImages directory
  --labels-txt  the "labels.txt" shipped with the annotations: lines of
                "<id>: <name>" covering all 459 names
  --out         output dataset root; images/ and labels/ are created inside

Requires scipy for .mat parsing (pip install scipy); the rest of the package
never needs it.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from chromasem.semantic_map import SemanticMap, load_class_table, save_map_file  # noqa: E402


def parse_labels_txt(path: Path) -> dict[int, str]:
    names: dict[int, str] = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        num, _, name = line.partition(":")
        names[int(num)] = name.strip()
    if not names:
        raise SystemExit(f"no label lines parsed from {path}")
    return names


def build_lut(full_names: dict[int, str]) -> np.ndarray:
    """Map full 459-label ids to the packaged 60-class indices (0 = background)."""
    table = load_class_table()
    by_name = {e.name: e.index for e in table.entries}
    lut = np.zeros(max(full_names) + 1, dtype=np.uint8)
    hits = 0
    for full_id, name in full_names.items():
        idx = by_name.get(name)
        if idx is not None:
            lut[full_id] = idx
            hits += 1
    expected = len(by_name) - 1  # background has no entry in labels.txt
    if hits != expected:
        missing = sorted(set(by_name) - {"background"} - set(full_names.values()))
        raise SystemExit(
            f"matched {hits} of {expected} class names against labels.txt; "
            f"unmatched: {missing}"
        )
    return lut


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mat-dir", required=True, type=Path)
    ap.add_argument("--images-dir", required=True, type=Path)
    ap.add_argument("--labels-txt", required=True, type=Path)
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--limit", type=int, help="convert at most N pairs (smoke runs)")
    args = ap.parse_args()

    try:
        from scipy.io import loadmat
    except ImportError:
        raise SystemExit("scipy is required for .mat parsing: pip install scipy")

    lut = build_lut(parse_labels_txt(args.labels_txt))
    out_images = args.out / "images"
    out_labels = args.out / "labels"
    out_images.mkdir(parents=True, exist_ok=True)
    out_labels.mkdir(parents=True, exist_ok=True)

    mats = sorted(args.mat_dir.glob("*.mat"))
    if args.limit:
        mats = mats[: args.limit]
    converted = 0
    for mat_path in mats:
        stem = mat_path.stem
        jpg = args.images_dir / f"{stem}.jpg"
        if not jpg.exists():
            print(f"skip {stem}: no matching image", file=sys.stderr)
            continue
        raw = loadmat(mat_path)["LabelMap"]
        labels = lut[np.asarray(raw, dtype=np.int64)]
        save_map_file(SemanticMap(labels), out_labels / f"{stem}.png")
        shutil.copyfile(jpg, out_images / f"{stem}.jpg")
        converted += 1
    print(f"converted {converted} image/label pairs into {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
