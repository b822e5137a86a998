"""Command-line entry point: train, gradcheck, export, reconstruct.

Exit codes: 0 success, 1 gradient-check failure, 2 flag errors, 3 data
errors, 4 training divergence (NaN loss).
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, data, imageio, metrics, model, optim
from .errors import (
    CheckpointError,
    DataFormatError,
    DivergenceError,
    ShapeMismatchError,
)
from .loss import recon_loss

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_FLAGS = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


def _parse_pair(text, name):
    """'5' -> (5,5); '5x3' or '5,3' -> (5,3)."""
    for sep in ("x", ","):
        if sep in text:
            a, b = text.split(sep, 1)
            return int(a), int(b)
    v = int(text)
    return v, v


def _add_data_flags(p):
    p.add_argument("--data", help="path to an IDX or CIFAR-10 binary file")
    p.add_argument("--synthetic", action="store_true", help="use the synthetic shapes dataset")
    p.add_argument("--format", choices=("auto", "idx", "cifar"), default="auto")
    p.add_argument("--limit", type=int, help="use only the first N images")
    p.add_argument("--synthetic-count", type=int, default=512)
    p.add_argument("--synthetic-dims", default="16x16")
    p.add_argument("--data-seed", type=int, default=7, help="seed for synthetic generation")


def _load_dataset(args):
    if args.synthetic and args.data:
        raise FlagError("--data and --synthetic are mutually exclusive")
    if args.synthetic:
        dims = _parse_pair(args.synthetic_dims, "synthetic-dims")
        ds = data.synth_shapes(args.synthetic_count, dims, args.data_seed)
    elif args.data:
        path = Path(args.data)
        if not path.exists():
            raise DataFormatError(f"dataset file not found: {path}")
        fmt = args.format
        if fmt == "auto":
            fmt = "idx" if path.stat().st_size % data.CIFAR_RECORD_BYTES else "cifar"
            if path.suffix in (".bin",):
                fmt = "cifar"
            elif "idx" in path.name or path.suffixes[:1] == [".gz"]:
                fmt = "idx"
        ds = data.load_idx(path) if fmt == "idx" else data.load_cifar10_bin(path)
    else:
        raise FlagError("one of --data or --synthetic is required")
    if args.limit is not None:
        ds = data.Dataset(images=ds.images[: args.limit], source=ds.source)
    return ds


class FlagError(ValueError):
    pass


def _model_config_from_flags(args, dataset):
    _, c, h, w = dataset.images.shape
    pool = None
    if args.pool not in (None, "0", "off", "none"):
        pool = _parse_pair(args.pool, "pool")
    lam = args.lam
    if args.variant == "cae":
        if lam is not None:
            print("warning: --lambda is ignored for variant cae", file=sys.stderr)
        lam = 0.0
    elif lam is None:
        lam = 0.1
    cfg = model.ModelConfig(
        variant=args.variant,
        n_filters=args.filters,
        kernel=_parse_pair(args.kernel, "kernel"),
        in_channels=c,
        input_dims=(h, w),
        nonlinearity=args.nonlinearity,
        pooling=pool,
        lam=lam,
        norm_order=args.norm_order,
        precision=args.precision,
        seed=args.seed,
        bypass_normalization=args.bypass_normalization,
        squared_recon=args.squared_recon,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise FlagError(str(exc)) from exc
    return cfg


def cmd_train(args):
    dataset = _load_dataset(args)
    cfg = _model_config_from_flags(args, dataset)
    ocfg = optim.OptimConfig(
        learning_rate=args.lr,
        momentum=args.momentum,
        batch_size=min(args.batch, len(dataset)),
        epochs=args.epochs,
        shuffle_seed=args.shuffle_seed if args.shuffle_seed is not None else args.seed + 1,
    )
    fh, fw = cfg.featuremap_dims
    print(f"dataset: {len(dataset)} images from {dataset.source}")
    print(f"featuremap dims: {fh}x{fw} ({cfg.n_filters} maps)")
    state = model.build(cfg)

    def log(r):
        print(
            f"epoch {r.epoch:3d}  l2rec {r.l2rec:.6f}  l1sp {r.l1sp:.6f}  "
            f"total {r.total:.6f}  delta {r.delta_filter_count}  hoyer {r.mean_hoyer:.4f}  "
            f"({r.wall_seconds:.2f}s)"
        )

    state, reports = optim.train(state, dataset, ocfg, cfg, log=log)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.sscae"
    csv_path = out_dir / "metrics.csv"
    checkpoint.save(state, cfg, ckpt_path)
    metrics.write_csv(reports, csv_path)
    print(f"wrote {ckpt_path} and {csv_path}")
    return EXIT_OK


def cmd_gradcheck(args):
    variants = ("cae", "sscae") if args.variant == "both" else (args.variant,)
    nonlins = ("sigmoid", "relu") if args.nonlinearity == "both" else (args.nonlinearity,)
    pools = {"both": (None, (2, 2)), "on": ((2, 2),), "off": (None,)}[args.pool]
    all_ok = True
    for variant in variants:
        for nonlin in nonlins:
            for pool in pools:
                cfg = model.ModelConfig(
                    variant=variant,
                    n_filters=2,
                    kernel=(3, 3),
                    in_channels=1,
                    input_dims=(6, 6),
                    nonlinearity=nonlin,
                    pooling=pool,
                    lam=0.1,
                    precision="fp64",
                    seed=args.seed,
                )
                report = model.grad_check(cfg, n_trials=args.trials, tol=args.tol, seed=args.seed)
                tag = f"{variant}/{nonlin}/pool={'on' if pool else 'off'}"
                print(f"--- {tag}")
                for line in report.lines():
                    print(line)
                all_ok &= report.passed
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _export_filter(path_base, kernel):
    """One filter [C, kh, kw] to PGM (1 channel) or PPM (3 channels)."""
    if kernel.shape[0] == 3:
        imageio.write_ppm(f"{path_base}.ppm", imageio.to_display_bytes(kernel))
    else:
        imageio.write_pgm(f"{path_base}.pgm", imageio.to_display_bytes(kernel[0]))


def cmd_export(args):
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise DataFormatError(f"checkpoint not found: {ckpt}")
    state, cfg = checkpoint.load(ckpt)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k in range(cfg.n_filters):
        _export_filter(out_dir / f"enc_{k}", state.encoder.weights[k])
        _export_filter(out_dir / f"dec_{k}", state.decoder.weights[k])
    written = 2 * cfg.n_filters
    if args.synthetic or args.data:
        dataset = _load_dataset(args)
        idx = args.image_index
        if idx >= len(dataset):
            raise DataFormatError(f"--image-index {idx} out of range (N={len(dataset)})")
        x = dataset.images[idx : idx + 1]
        fwd = model.forward(state, x, cfg)
        for k in range(cfg.n_filters):
            imageio.write_pgm(
                out_dir / f"fmap_{k}.pgm", imageio.to_display_bytes(fwd.featuremaps[0, k])
            )
        written += cfg.n_filters
    print(f"wrote {written} images to {out_dir}")
    return EXIT_OK


def cmd_reconstruct(args):
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise DataFormatError(f"checkpoint not found: {ckpt}")
    state, cfg = checkpoint.load(ckpt)
    dataset = _load_dataset(args)
    count = min(args.count, len(dataset))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        x = np.ascontiguousarray(dataset.images[i : i + 1], dtype=cfg.dtype)
        fwd = model.forward(state, x, cfg)
        value, _ = recon_loss(x, fwd.x_rec)
        side_by_side = np.concatenate([x[0], fwd.x_rec[0]], axis=2)
        if side_by_side.shape[0] == 3:
            imageio.write_ppm(out_dir / f"recon_{i}.ppm", imageio.to_display_bytes(side_by_side))
        else:
            imageio.write_pgm(out_dir / f"recon_{i}.pgm", imageio.to_display_bytes(side_by_side[0]))
        print(f"image {i}: l2rec {value:.6f}")
    print(f"wrote {count} comparisons to {out_dir}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="sscae", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model and write checkpoint + metrics CSV")
    _add_data_flags(t)
    t.add_argument("--variant", choices=("cae", "sscae"), default="sscae")
    t.add_argument("--filters", type=int, default=16)
    t.add_argument("--kernel", default="5", help="kernel size K or KxL")
    t.add_argument("--pool", default="0", help="pooling window P or PxQ; 0 disables")
    t.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sparsity weight (default 0.1 for sscae)")
    t.add_argument("--nonlinearity", choices=("sigmoid", "relu"), default="sigmoid")
    t.add_argument("--norm-order", choices=model.NORM_ORDERS, default="across_then_per")
    t.add_argument("--precision", choices=("fp32", "fp64"), default="fp64")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--shuffle-seed", type=int, default=None)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--batch", type=int, default=64)
    t.add_argument("--bypass-normalization", action="store_true",
                   help="skip the normalization pair (ablation)")
    t.add_argument("--squared-recon", action="store_true",
                   help="use squared l2 reconstruction loss")
    t.add_argument("--out-dir", required=True)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    g.add_argument("--variant", choices=("cae", "sscae", "both"), default="both")
    g.add_argument("--nonlinearity", choices=("sigmoid", "relu", "both"), default="both")
    g.add_argument("--pool", choices=("on", "off", "both"), default="both")
    g.add_argument("--trials", type=int, default=20)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--seed", type=int, default=1234)
    g.set_defaults(func=cmd_gradcheck)

    e = sub.add_parser("export", help="export filters (and featuremaps) as PGM/PPM")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--out-dir", required=True)
    e.add_argument("--image-index", type=int, default=0)
    _add_data_flags(e)
    e.set_defaults(func=cmd_export)

    r = sub.add_parser("reconstruct", help="write original/reconstruction pairs")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--count", type=int, default=8)
    _add_data_flags(r)
    r.set_defaults(func=cmd_reconstruct)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_FLAGS
    try:
        return args.func(args)
    except FlagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (DataFormatError, CheckpointError, ShapeMismatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
