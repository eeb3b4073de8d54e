"""Command-line entry point.

Exit codes: 0 success, 1 domain or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from afa.augment import CHANNEL_NAMES, AfaConfig, afa_augment, make_wave
from afa.config import load_config
from afa.data import read_pgm_ppm, write_pgm_ppm
from afa.errors import AfaError, InvalidRange, ShapeMismatch
from afa.nn.checkpoint import load_checkpoint
from afa.nn.diagnostics import bn_divergence_report, weight_norm_report
from afa.pipeline import run_eval, run_train, write_run_metadata
from afa.robustness.heatmap import fourier_heatmap, heatmap_to_pgm_bytes
from afa.tensor_core import ImageTensor, Rng, l2_norm, read_tensor, write_tensor
from afa.verify import SUITES, run_suite

log = logging.getLogger("afa")


def _strip_suffix(path: str) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".afat", ".pgm") else p


def cmd_wave(args) -> int:
    wave = make_wave(args.f, args.omega, args.size)
    base = _strip_suffix(args.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    write_tensor(base.with_suffix(".afat"), wave[None])
    # min -> 0, max -> 255
    lo, hi = wave.min(), wave.max()
    scaled = (wave - lo) / (hi - lo) if hi > lo else np.zeros_like(wave)
    write_pgm_ppm(base.with_suffix(".pgm"), scaled[None])
    print(f"l2={l2_norm(wave):.6f}")
    return 0


def _load_images(path: Path) -> tuple[np.ndarray, bool]:
    """Returns an N x C x H x W stack and whether the input was a single image."""
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".ppm"))
        if not files:
            raise AfaError(f"{path}: no .pgm/.ppm files")
        imgs = [read_pgm_ppm(p).data for p in files]
        if len({im.shape for im in imgs}) != 1:
            raise ShapeMismatch(f"{path}: images differ in shape")
        return np.stack(imgs), False
    if path.suffix.lower() in (".pgm", ".ppm"):
        return read_pgm_ppm(path).data[None], True
    arr = read_tensor(path)
    if arr.ndim == 3:
        return arr[None], True
    if arr.ndim == 4:
        return arr, False
    raise ShapeMismatch(f"{path}: expected a C x H x W or N x C x H x W tensor, got {arr.shape}")


def cmd_augment(args) -> int:
    images, _ = _load_images(Path(args.input))
    n, c, h, w = images.shape
    if h != w:
        raise ShapeMismatch(f"AFA needs square images, got {h}x{w}")
    if images.min() < 0 or images.max() > 1:
        raise InvalidRange("input images must lie in [0, 1]")
    cfg = AfaConfig(args.mean_strength, h, clamp=not args.no_clamp)
    out_dir = Path(args.out)
    write_run_metadata(out_dir)
    (out_dir / "config.resolved").write_text(
        f"seed={args.seed}\nafa.mean_strength={args.mean_strength}\nafa.clamp={str(cfg.clamp).lower()}\n"
    )
    names = CHANNEL_NAMES[c]
    results, rows = [], []
    for i in range(n):
        x = ImageTensor(images[i], clamped=True)
        out, draws = afa_augment(x, cfg, Rng(args.seed).child("augment", i), return_params=True)
        results.append(out.data)
        rows.append([i] + [f"{v:.10g}" for d in draws for v in (d.f, d.omega, d.sigma)])
        ext = ".ppm" if c == 3 else ".pgm"
        write_pgm_ppm(out_dir / f"aug_{i:05d}{ext}", out)
    write_tensor(out_dir / "augmented.afat", np.stack(results))
    with open(out_dir / "manifest.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["index"] + [f"{p}_{ch}" for ch in names for p in ("f", "omega", "sigma")])
        wr.writerows(rows)
    print(f"augmented {n} image(s) -> {out_dir}")
    return 0


def cmd_verify(args) -> int:
    records = run_suite(args.suite)
    for rec in records:
        print(json.dumps(rec, default=float))
    failed = [r for r in records if not r["passed"]]
    print(f"# {args.suite}: {len(records) - len(failed)}/{len(records)} checks passed", file=sys.stderr)
    return 1 if failed else 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    run_train(cfg, args.out_dir)
    print(f"checkpoint written to {Path(args.out_dir) / 'checkpoint'}")
    return 0


def _config_for_model(model_dir: Path, explicit):
    if explicit:
        return load_config(explicit)
    guess = model_dir.parent / "config.resolved"
    if guess.is_file():
        return load_config(guess)
    raise AfaError(f"no --config given and no config.resolved next to {model_dir}")


def cmd_eval(args) -> int:
    model_dir = Path(args.model)
    model = load_checkpoint(model_dir)
    cfg = _config_for_model(model_dir, args.config)
    baseline = load_checkpoint(args.baseline) if args.baseline else None
    summary = run_eval(model, cfg, args.out_dir, baseline=baseline)
    for name, value in summary.items():
        print(f"{name}={value:.4f}")
    return 0


def cmd_heatmap(args) -> int:
    from afa.data import synth_dataset

    model_dir = Path(args.model)
    model = load_checkpoint(model_dir)
    cfg = _config_for_model(model_dir, args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    _, test_set = synth_dataset(cfg.synthetic_spec())
    spec = cfg.heatmap_spec(v=args.v, grid=args.grid)
    grid = fourier_heatmap(model, test_set.images, test_set.labels, spec, Rng(cfg.seed).child("heatmap"))
    base = _strip_suffix(args.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    write_tensor(base.with_suffix(".afat"), grid)
    write_pgm_ppm(base.with_suffix(".pgm"), heatmap_to_pgm_bytes(grid)[None] / 255.0)
    write_run_metadata(base.parent, cfg)
    print(f"mean_error={grid.mean():.6f}")
    return 0


def cmd_report(args) -> int:
    model = load_checkpoint(args.model)
    if args.diagnostic == "bn-divergence":
        header = ["depth", "layer", "weight_mad", "bias_mad"]
        rows = [[d, name, f"{g:.10g}", f"{b:.10g}"] for d, (name, g, b) in enumerate(bn_divergence_report(model), 1)]
    else:
        header = ["depth", "weight_norm"]
        rows = [[d, f"{v:.10g}"] for d, v in weight_norm_report(model)]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wave", help="render a unit-norm planar wave")
    p.add_argument("--f", type=float, required=True, help="frequency, cycles per image")
    p.add_argument("--omega", type=float, required=True, help="direction in radians, [0, pi)")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True, help="output path prefix (.afat and .pgm are written)")
    p.set_defaults(func=cmd_wave)

    p = sub.add_parser("augment", help="apply AFA to images")
    p.add_argument("--in", dest="input", required=True, help="AFAT tensor, PGM/PPM file or directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mean-strength", type=float, default=10.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--no-clamp", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("verify", help="run a self-check suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="corruption and consistency evaluation")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--config")
    p.add_argument("--baseline", help="baseline checkpoint (default: the model itself)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heatmap", help="Fourier heatmap of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--v", type=float, required=True, help="perturbation norm")
    p.add_argument("--grid", type=int, required=True, help="grid extent G (frequencies 0..G)")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="diagnostic reports by depth")
    p.add_argument("--model", required=True)
    p.add_argument("--diagnostic", required=True, choices=["bn-divergence", "weight-norms"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (AfaError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
