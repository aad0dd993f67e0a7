"""Command-line surface: train-sam, train-vam, fuse, infer, eval.

Exit status: 0 success, 2 user error (bad config, bad arguments, unusable
inputs), 3 runtime failure (aborted training, mismatched eval corpora).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import torch

from . import metrics, trainer
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    ExperimentConfig,
    apply_overrides,
    dump_config,
    load_config,
    vam_defaults,
)
from .data import load_manifest
from .exceptions import (
    CheckpointError,
    ConfigError,
    EmptyDataset,
    FusionError,
    InvalidSize,
    PatchTooLarge,
    ShapeError,
    TooSmall,
    TrainingAborted,
)
from .imageops import load_image, save_image

USER_ERRORS = (
    ConfigError,
    EmptyDataset,
    CheckpointError,
    FusionError,
    InvalidSize,
    PatchTooLarge,
    ShapeError,
    TooSmall,
    FileNotFoundError,
    NotADirectoryError,
    ValueError,
)

ENV_CHECKPOINT_DIR = "DCRSR_CHECKPOINT_DIR"


def _default_out_dir() -> str:
    return os.environ.get(ENV_CHECKPOINT_DIR, "checkpoints")


def _load_effective_config(args, base: ExperimentConfig) -> ExperimentConfig:
    cfg = base
    if args.config is not None:
        cfg = load_config(args.config, base=cfg)
    apply_overrides(cfg, args.overrides)
    return cfg


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--out", type=Path, default=None, help="checkpoint directory")
    p.add_argument("--resume", type=Path, default=None, help="checkpoint to resume from")
    p.add_argument(
        "--print-config",
        action="store_true",
        help="print the effective settings and exit",
    )
    p.add_argument(
        "overrides",
        nargs="*",
        metavar="key=value",
        help="dotted config overrides applied after the file",
    )


def cmd_train_sam(args) -> int:
    cfg = _load_effective_config(args, ExperimentConfig())
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if not cfg.data.root:
        raise ConfigError("data.root is not set")
    manifest = load_manifest(cfg.data.root, cfg.model.scale)
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out_dir = args.out if args.out is not None else _default_out_dir()
    final = trainer.train_sam(cfg, manifest, out_dir, resume=args.resume)
    print(final)
    return 0


def cmd_train_vam(args) -> int:
    cfg = _load_effective_config(args, vam_defaults())
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if not cfg.data.root:
        raise ConfigError("data.root is not set")
    manifest = load_manifest(cfg.data.root, cfg.model.scale)
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out_dir = args.out if args.out is not None else _default_out_dir()
    final = trainer.train_vam(
        cfg, manifest, args.sam_checkpoint, out_dir, resume=args.resume
    )
    print(final)
    return 0


def cmd_fuse(args) -> int:
    if not 0.0 <= args.alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {args.alpha}")
    sam = load_checkpoint(args.sam)
    vam = load_checkpoint(args.vam)
    fused = trainer.fuse_models(
        trainer.generator_tensors(sam), trainer.generator_tensors(vam), args.alpha
    )
    meta = dict(sam.meta)
    meta["fused_alpha"] = repr(args.alpha)
    save_checkpoint(
        args.out,
        {f"gen.{name}": t for name, t in fused.items()},
        sam.config_hash,
        meta,
    )
    print(args.out)
    return 0


def _infer_one(model, src: Path, dst: Path, blend_model, alpha: float) -> None:
    img = load_image(src)
    with torch.no_grad():
        sr = model(img)
        if blend_model is not None:
            sr = trainer.blend_outputs(sr, blend_model(img), alpha)
    dst.parent.mkdir(parents=True, exist_ok=True)
    save_image(sr.clamp(0.0, 1.0), dst)


def cmd_infer(args) -> int:
    model, _ = trainer.load_model_from_checkpoint(args.checkpoint)
    blend_model = None
    if args.output_space_blend is not None:
        blend_model, _ = trainer.load_model_from_checkpoint(args.output_space_blend)
        if not 0.0 <= args.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {args.alpha}")

    src = Path(args.input)
    dst = Path(args.output)
    if src.is_dir():
        names = sorted(p.name for p in src.glob("*.png"))
        if not names:
            raise EmptyDataset(f"no PNG files under {src}")
        for name in names:
            _infer_one(model, src / name, dst / name, blend_model, args.alpha)
            print(dst / name)
    else:
        try:
            _infer_one(model, src, dst, blend_model, args.alpha)
        except OSError as exc:
            raise ValueError(f"cannot decode {src}: {exc}") from exc
        print(dst)
    return 0


def cmd_eval(args) -> int:
    report = metrics.evaluate(
        args.sr, args.hr, shave=args.shave, on_luma=not args.rgb
    )
    if args.tsv:
        print(metrics.format_tsv(report))
    else:
        print(metrics.format_table(report))
    return 0 if report.clean else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcrsr",
        description="Super-resolution training, fusion, inference and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-sam", help="pixel-loss pre-training phase")
    _add_train_args(p)
    p.set_defaults(func=cmd_train_sam)

    p = sub.add_parser("train-vam", help="adversarial fine-tuning phase")
    p.add_argument("--sam-checkpoint", type=Path, required=True)
    _add_train_args(p)
    p.set_defaults(func=cmd_train_vam)

    p = sub.add_parser("fuse", help="interpolate two generator checkpoints")
    p.add_argument("--sam", type=Path, required=True)
    p.add_argument("--vam", type=Path, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("infer", help="super-resolve an image or directory")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument(
        "--output-space-blend",
        type=Path,
        default=None,
        help="second checkpoint whose output is blended in (eval-only)",
    )
    p.add_argument("--alpha", type=float, default=0.8)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="PSNR/SSIM over two directories")
    p.add_argument("--sr", type=Path, required=True)
    p.add_argument("--hr", type=Path, required=True)
    p.add_argument("--shave", type=int, default=4)
    p.add_argument("--rgb", action="store_true", help="score RGB instead of luma")
    p.add_argument("--tsv", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TrainingAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.checkpoint_path is not None:
            print(f"last checkpoint: {exc.checkpoint_path}", file=sys.stderr)
        return 3
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
