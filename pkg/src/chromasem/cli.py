"""Command-line surface: segment, colorize, train, eval, serve.

Commands exit 0 on success. Failures print exactly one line to stderr in the
form `chromasem: error: <kind>: <message>` and exit nonzero, so wrappers can
match on the prefix and the kind token.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .checkpoint import TARGET_COLORIZER, TARGET_SEGMENTER, load_model
from .colorspace import read_image, write_png
from .errors import ChromasemError
from .evalsuites import SUITES, run_overfit
from .pipeline import WORKING_SIDE, colorize_pipeline, segment_image
from .report import save_loss_curve, write_csv
from .semantic_map import load_map_file, save_map_file
from .training import TrainConfig, load_dataset, train

ENV_PREFIX = "CHROMASEM_"


def _flag_or_env(value, name: str, default=None):
    """CLI flag wins, then the CHROMASEM_<NAME> environment variable."""
    if value is not None:
        return value
    env = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    return env if env is not None else default


def _cmd_segment(args: argparse.Namespace) -> int:
    rgb = read_image(args.input)
    model, _ = load_model(args.weights, expect=TARGET_SEGMENTER)
    sem = segment_image(rgb, model, args.working_side)
    save_map_file(sem, args.out)
    print(f"wrote {args.out} ({sem.width}x{sem.height}, {sem.num_classes} classes)")
    return 0


def _cmd_colorize(args: argparse.Namespace) -> int:
    rgb = read_image(args.input)
    user_map = load_map_file(args.map) if args.map else None
    seg = None
    if user_map is None:
        if not args.seg_weights:
            raise ChromasemError("either --map or --seg-weights is required")
        seg, _ = load_model(args.seg_weights, expect=TARGET_SEGMENTER)
    color, _ = load_model(args.color_weights, expect=TARGET_COLORIZER)
    result = colorize_pipeline(rgb, seg, color, user_map=user_map, working_side=args.working_side)
    write_png(args.out, result.image)
    if args.dump_map:
        save_map_file(result.map, args.dump_map)
    print(
        f"wrote {args.out} ({result.image.shape[1]}x{result.image.shape[0]}), "
        f"colorizer forward {result.colorizer_forward_ms:.1f} ms"
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig.from_json_file(args.config) if args.config else TrainConfig()
    if args.target:
        cfg.target = args.target
        cfg.__post_init__()
    data = load_dataset(args.data, cfg.num_classes)
    out_dir = Path(args.out_dir)
    losses: list[float] = []

    def on_step(step: int, value: float) -> None:
        losses.append(value)
        if args.log_every and step % args.log_every == 0:
            print(f"step {step}: loss {value:.6f}")

    ck = train(cfg, data, out_dir=out_dir, on_step=on_step)
    write_csv(out_dir / "losses.csv", ["step", "loss"], list(enumerate(losses, 1)))
    save_loss_curve(out_dir / "loss_curve.png", losses, f"{cfg.target} training loss")
    print(
        f"trained {cfg.target} for {len(losses)} steps on {len(data)} samples; "
        f"final loss {losses[-1]:.6f}; checkpoints in {out_dir}"
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else Path("chromasem-eval") / args.suite
    if args.suite == "overfit":
        kw = {}
        if args.steps is not None:
            kw["steps"] = args.steps
        results = run_overfit(out_dir, target=args.target, **kw)
    elif args.suite == "gradients":
        results = [SUITES[args.suite](out_dir, precision=args.precision)]
    else:
        results = [SUITES[args.suite](out_dir)]
    ok = True
    for res in results:
        for row in res.rows:
            print(f"[{res.name}] {row.line()}")
        ok = ok and res.ok
    print(f"report written to {out_dir}")
    return 0 if ok else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    seg = _flag_or_env(args.seg_weights, "seg-weights")
    color = _flag_or_env(args.color_weights, "color-weights")
    port = int(_flag_or_env(args.port, "port", 8765))
    max_side = int(_flag_or_env(args.max_image_side, "max-image-side", 2048))
    if not seg or not color:
        raise ChromasemError(
            "serve needs --seg-weights and --color-weights (or CHROMASEM_SEG_WEIGHTS / "
            "CHROMASEM_COLOR_WEIGHTS)"
        )
    app = create_app(seg, color, max_image_side=max_side)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromasem",
        description="Semantic-map guided grayscale colorization toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="predict a semantic map for an image")
    p.add_argument("--input", required=True)
    p.add_argument("--weights", required=True, help="segmenter checkpoint")
    p.add_argument("--out", required=True, help="output indexed PNG map")
    p.add_argument("--working-side", type=int, default=WORKING_SIDE)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("colorize", help="colorize a grayscale image")
    p.add_argument("--input", required=True)
    p.add_argument("--seg-weights", help="segmenter checkpoint (unless --map is given)")
    p.add_argument("--color-weights", required=True, help="colorizer checkpoint")
    p.add_argument("--map", help="user-supplied semantic map PNG")
    p.add_argument("--out", required=True, help="output PNG image")
    p.add_argument("--dump-map", help="also write the map that was used")
    p.add_argument("--working-side", type=int, default=WORKING_SIDE)
    p.set_defaults(fn=_cmd_colorize)

    p = sub.add_parser("train", help="train the segmenter or colorizer")
    p.add_argument("--target", choices=[TARGET_SEGMENTER, TARGET_COLORIZER])
    p.add_argument("--data", required=True, help="dataset root with images/ and labels/")
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--log-every", type=int, default=50)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="run a verification suite and write its report")
    p.add_argument("--suite", required=True, choices=[*SUITES, "overfit"])
    p.add_argument("--precision", type=int, choices=[32, 64], default=64)
    p.add_argument("--target", choices=["segmenter", "colorizer", "both"], default="both")
    p.add_argument("--steps", type=int, help="override training steps for overfit")
    p.add_argument("--out-dir")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("serve", help="run the interactive edit service")
    p.add_argument("--seg-weights")
    p.add_argument("--color-weights")
    p.add_argument("--port", type=int)
    p.add_argument("--max-image-side", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ChromasemError as exc:
        print(f"chromasem: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"chromasem: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
