"""Command-line entry point: ``cure {synth,train,interpolate,eval,ablate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .dataio.formats import FormatError, read_flo, read_ppm, write_flo, write_ppm
from .dataio.manifest import ManifestEntry, load_dataset, write_manifest
from .dataio.synthetic import generate_synthetic_sequence, induced_flow, read_scene_spec
from .pipeline import InterpolationRequest, evaluate, interpolate, run_ablation
from .trainer import CheckpointError, DivergenceError, TrainConfig, load_checkpoint, read_config, save_checkpoint, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _t_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty t list")
    return values


def cmd_synth(args) -> int:
    spec = read_scene_spec(args.spec)
    if args.frames is not None:
        spec = replace(spec, frame_count=args.frames)
    frames, _ = generate_synthetic_sequence(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, frame in enumerate(frames):
        write_ppm(out / f"frame_{k:03d}.ppm", frame)
    entries = []
    for k in range(len(frames) - 2):
        fwd_name, bwd_name = f"flow_{k:03d}_{k + 2:03d}.flo", f"flow_{k + 2:03d}_{k:03d}.flo"
        write_flo(out / fwd_name, induced_flow(spec, k, k + 2))
        write_flo(out / bwd_name, induced_flow(spec, k + 2, k))
        entries.append(ManifestEntry(f"frame_{k:03d}.ppm", f"frame_{k + 1:03d}.ppm", f"frame_{k + 2:03d}.ppm", fwd_name, bwd_name, 0.5))
    write_manifest(out / "manifest.csv", entries)
    print(f"wrote {len(frames)} frames and {len(entries)} triplets to {out}")
    return EXIT_OK


def _load_config(args) -> TrainConfig:
    config = read_config(args.config) if args.config else TrainConfig()
    if getattr(args, "variant", None):
        config = replace(config, variant=args.variant)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if config.flow_provider != "file":
        raise UsageError(f"flow.provider={config.flow_provider!r}: manifest-driven commands read flows from files; use 'file'")
    return config


def cmd_train(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(args.data)

    def report(epoch, lr, loss):
        print(f"epoch {epoch} lr {lr:.4g} loss {loss:.6g}", flush=True)

    ckpt = train(dataset, config, on_epoch=report if args.verbose else None)
    save_checkpoint(args.out, ckpt)
    print(f"saved checkpoint to {args.out} after {ckpt.epoch} epochs")
    return EXIT_OK


def cmd_interpolate(args) -> int:
    for t in args.t:
        if not 0.0 < t < 1.0:
            raise UsageError(f"t values must lie strictly inside (0, 1), got {t}")
    ckpt = load_checkpoint(args.ckpt)
    frame0, frame1 = read_ppm(args.frame0), read_ppm(args.frame1)
    req = InterpolationRequest(frame0, frame1, tuple(args.t), flows=(read_flo(args.flow_fwd), read_flo(args.flow_bwd)), checkpoint_path=args.ckpt)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t, frame in zip(req.t_values, interpolate(ckpt.model, req, workers=args.workers)):
        write_ppm(out / f"frame_t{t:.4f}.ppm", frame)
    print(f"wrote {len(req.t_values)} frames to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    report = evaluate(ckpt.model, load_dataset(args.data), workers=args.workers)
    report.write_csv(args.report)
    print(f"{report.variant}: mean PSNR {report.mean_psnr:.3f} dB, mean SSIM {report.mean_ssim:.4f}, infinite PSNR {report.infinite_count}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _load_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_ablation(load_dataset(args.data), config, out)
    for variant, r in reports.items():
        print(f"{variant:7s} PSNR {r.mean_psnr:.3f} dB  SSIM {r.mean_ssim:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cure", description="Neural-field video frame interpolation.")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="render a synthetic sequence with exact flows")
    p.add_argument("--spec", required=True, help="scene spec (key = value text)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", type=int, help="override frame_count")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a manifest")
    p.add_argument("--data", required=True, help="manifest CSV")
    p.add_argument("--config", help="training config (key = value text)")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--variant", choices=["full", "no-rep", "no-crd"])
    p.add_argument("--seed", type=int)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("interpolate", help="synthesise frames between two inputs")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--frame0", required=True)
    p.add_argument("--frame1", required=True)
    p.add_argument("--flow-fwd", required=True)
    p.add_argument("--flow-bwd", required=True)
    p.add_argument("--t", type=_t_list, default=[0.5])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("eval", help="score a checkpoint on a manifest")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare full / no-rep / no-crd")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"cure: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (FormatError, CheckpointError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"cure: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
