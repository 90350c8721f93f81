"""Command-line interface.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
3 checkpoint format or version error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .data import build_patch_dataset, crop_to_multiple, select_patches_detailed, simulate_lr
from .gradcheck import run_checks
from .metrics import psnr, rank_study, sharpness_study, ssim
from .network import forward
from .pgm import read_pgm, write_pgm
from .report import (
    render_eval_figure,
    render_history_figure,
    render_study_figure,
    write_eval_csv,
    write_history_csv,
    write_patch_index_csv,
    write_study_csv,
)
from .runconfig import ConfigError, RunConfig, dump_run_config, load_run_config
from .train import infer, train_with_state


def _list_pgms(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise ConfigError(f"{directory} is not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise ConfigError(f"no .pgm images in {directory}")
    return files


def _parse_exclusions(text: str | None) -> tuple[int, ...]:
    if not text or not text.strip():
        return ()
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad exclusion list {text!r}: {exc}") from exc


def cmd_simulate_lr(args) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in _list_pgms(Path(args.input)):
        img = read_pgm(path)
        cropped = crop_to_multiple(img, args.scale)
        if cropped.shape != img.shape:
            print(f"{path.name}: cropped {img.shape} -> {cropped.shape} for scale {args.scale}")
        x_s = simulate_lr(cropped, args.scale, args.blur)
        target = out_dir / f"{path.stem}_xs.pgm"
        write_pgm(target, x_s)
        print(f"wrote {target}")
    return 0


def cmd_select_patches(args) -> int:
    paths = _list_pgms(Path(args.input))
    images = [read_pgm(p) for p in paths]
    exclusions = _parse_exclusions(args.exclude)
    selections = select_patches_detailed(images, args.patch, exclusions)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = args.patch
    for sel in selections:
        img = images[sel.image_index]
        r, c = sel.sharp_pos
        write_pgm(out_dir / f"sh_{sel.image_index:03d}.pgm", img[r : r + p, c : c + p])
        r, c = sel.smooth_pos
        write_pgm(out_dir / f"sm_{sel.image_index:03d}.pgm", img[r : r + p, c : c + p])
    index = out_dir / "index.csv"
    write_patch_index_csv(index, selections)
    print(f"selected {len(selections)} sharp/smooth pairs; index at {index}")
    return 0


def cmd_train(args) -> int:
    run = load_run_config(args.config)
    data_dir = args.data or run.data_dir
    if not data_dir:
        raise ConfigError("no data directory: pass --data or set data_dir in the config")
    paths = _list_pgms(Path(data_dir))
    images = [read_pgm(p) for p in paths]
    cfg = run.train
    dataset = build_patch_dataset(
        images,
        scale=cfg.scale,
        blur_sigma=cfg.blur_sigma,
        patch_size=cfg.patch_size,
        stride=cfg.patch_stride,
        exclusions=run.exclude,
    )
    print(f"training on {len(dataset.pairs)} patch pairs from {len(images)} images")
    result = train_with_state(cfg, dataset)
    arch = [layer.spec() for layer in result.layers]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        out,
        Checkpoint(
            arch=arch,
            layers=result.layers,
            bank=result.bank,
            epoch=cfg.epochs,
            config=cfg,
            adam=result.adam,
        ),
    )
    history_csv = out.with_suffix(out.suffix + ".history.csv")
    history_png = out.with_suffix(out.suffix + ".history.png")
    resolved_cfg = out.with_suffix(out.suffix + ".config.txt")
    write_history_csv(history_csv, result.history)
    render_history_figure(history_png, result.history)
    resolved_cfg.write_text(
        dump_run_config(RunConfig(train=cfg, data_dir=str(data_dir), exclude=run.exclude)),
        encoding="utf-8",
    )
    final = result.history[-1] if result.history else None
    if final is not None:
        print(f"epoch {final.epoch}: total {final.total:.6g} (mse {final.mse:.6g})")
    print(f"wrote {out}, {history_csv}, {history_png}, {resolved_cfg}")
    return 0


def cmd_infer(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    img = read_pgm(args.input)
    out = infer(ckpt.layers, img, args.scale)
    write_pgm(args.output, out)
    print(f"wrote {args.output} ({out.shape[0]}x{out.shape[1]})")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    paths = _list_pgms(Path(args.hr))
    rows = []
    for path in paths:
        hr = crop_to_multiple(read_pgm(path), args.scale)
        x_s = simulate_lr(hr, args.scale, ckpt.config.blur_sigma)
        model_out = np.clip(forward(ckpt.layers, x_s)[0], 0.0, 1.0)
        rows.append(
            (path.name, psnr(model_out, hr), ssim(model_out, hr), psnr(x_s, hr), ssim(x_s, hr))
        )
    csv_path = Path(args.csv)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_eval_csv(csv_path, rows)
    render_eval_figure(csv_path.with_suffix(".png"), rows)
    mean_model = float(np.mean([r[1] for r in rows]))
    mean_bicubic = float(np.mean([r[3] for r in rows]))
    print(f"model PSNR {mean_model:.4f} dB vs bicubic {mean_bicubic:.4f} dB over {len(rows)} images")
    print(f"wrote {csv_path}, {csv_path.with_suffix('.png')}")
    return 0


def cmd_gradcheck(args) -> int:
    results = run_checks(which=args.which, seed=args.seed, size=args.size)
    for res in results:
        print(res.line())
    if all(res.passed for res in results):
        return 0
    worst = max(results, key=lambda r: r.max_rel_err / r.tolerance)
    print(f"FAILED: {worst.name} exceeded tolerance", file=sys.stderr)
    return 1


def cmd_study(args) -> int:
    img = read_pgm(args.input)
    if args.kind == "rank":
        params = [int(tok) for tok in args.params.split(",")]
        rows = rank_study(img, params)
    else:
        params = [float(tok) for tok in args.params.split(",")]
        rows = sharpness_study(img, params)
    csv_path = Path(args.csv)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_study_csv(csv_path, rows, args.kind)
    render_study_figure(csv_path.with_suffix(".png"), rows, args.kind)
    print(f"wrote {csv_path}, {csv_path.with_suffix('.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorsr",
        description="Prior-regularized single-image super-resolution toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-lr", help="degrade HR images and write upscaled-LR counterparts")
    p.add_argument("--input", required=True, help="directory of HR .pgm images")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--blur", type=float, default=1.0, help="Gaussian blur width")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_simulate_lr)

    p = sub.add_parser("select-patches", help="pick per-image sharpest/smoothest patches")
    p.add_argument("--input", required=True)
    p.add_argument("--patch", type=int, default=40)
    p.add_argument("--exclude", default="", help="comma-separated image indices to skip")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_select_patches)

    p = sub.add_parser("train", help="train a model from a run-config file")
    p.add_argument("--config", required=True)
    p.add_argument("--data", default=None, help="HR image directory (overrides config data_dir)")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="super-resolve one LR image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="evaluate a checkpoint against HR images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--hr", required=True, help="directory of HR .pgm images")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--csv", required=True, help="per-image metric CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference verification of analytic gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=None)
    p.add_argument(
        "--which",
        default="all",
        choices=["rank", "sharpness", "vmod", "smeasure", "network", "all"],
    )
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("study", help="rank or blur-sharpness parameter sweep")
    p.add_argument("--kind", required=True, choices=["rank", "sharpness"])
    p.add_argument("--input", required=True)
    p.add_argument("--params", required=True, help="comma-separated parameter list")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_study)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
