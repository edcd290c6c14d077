"""Command-line driver.

Subcommands::

    synth       generate a synthetic dataset file
    train       fit a classifier on a dataset and save the model bundle
    eval        evaluate a saved model bundle on a dataset
    run         cross-validated experiment with a written report
    benchmark   per-trial train/inference timing (or --kernels backend table)
    footprint   model storage cost table for a configuration

Configuration comes from an optional ``--config`` key=value file plus
repeatable ``--set key=value`` overrides. Exit codes: 0 success, 2 config
error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import am as am_mod
from . import bench, learnproj, pipeline
from .backend import BACKEND
from .config import ConfigError, ExperimentConfig, derive_seed, parse_config_file
from .data import (DatasetFormatError, DatasetValidationError,
                   generate_synthetic, load_dataset, save_dataset,
                   separable_synth_spec)
from .encoder import band_item_memory
from .riemann import NumericsError, RiemannFrontEnd

_BUNDLE_MANIFEST = "manifest.txt"


def _build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config):
            cfg.apply(key, value)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg.apply(key, value)
    if getattr(args, "dataset", None):
        cfg.dataset = args.dataset
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    return cfg.validate()


def _load_cfg_dataset(cfg: ExperimentConfig):
    if not cfg.dataset:
        raise ConfigError("no dataset configured (set dataset=PATH or --dataset)")
    return load_dataset(cfg.dataset)


# --- model bundles -----------------------------------------------------------


def save_bundle(cfg: ExperimentConfig, front: RiemannFrontEnd,
                emb: pipeline.TrainedEmbedding, memory, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rendered = cfg.to_dict()
    bands = rendered.pop("bands")
    if not isinstance(bands, str):
        bands = ",".join(f"{lo:g}-{hi:g}" for lo, hi in bands)
    lines = [f"bands = {bands}"]
    lines += [f"{k} = {v}" for k, v in rendered.items()
              if v is not None and k not in ("out", "threads")]
    lines.append(f"n_classes = {memory.n_classes}")
    (out / _BUNDLE_MANIFEST).write_text("\n".join(lines) + "\n")
    front.save(out / "frontend.bin")
    am_mod.save_am(memory, out / "am.bin")
    if emb.model is not None:
        learnproj.save_model(emb.model, out / "model.bin", cfg.quantize_export)


def load_bundle(bundle_dir):
    """(cfg, front_end, trained_embedding, memory) from a saved bundle."""
    bundle = Path(bundle_dir)
    manifest = bundle / _BUNDLE_MANIFEST
    if not manifest.exists():
        raise DatasetFormatError(f"no model bundle at {bundle} ({manifest} missing)")
    cfg = ExperimentConfig()
    n_classes = None
    for key, value in parse_config_file(manifest):
        if key == "n_classes":
            n_classes = int(value)
        else:
            cfg.apply(key, value)
    front = RiemannFrontEnd.load(bundle / "frontend.bin")
    memory = am_mod.load_am(bundle / "am.bin")
    n_feats = front.stats.mean.shape[1]
    if cfg.embedding == "learned":
        model = learnproj.load_model(bundle / "model.bin")
        embedder, _ = learnproj.export(model)
        emb = pipeline.TrainedEmbedding(embedder, model.band_memory, model=model)
    else:
        embedder, dim = pipeline._build_embedder(cfg, n_feats, fold=0)
        im = band_item_memory(front.cfg.n_bands, dim,
                              seed=derive_seed(cfg.seed, pipeline._TAG_IM))
        emb = pipeline.TrainedEmbedding(embedder, im)
    if n_classes is not None and n_classes != memory.n_classes:
        raise DatasetFormatError("bundle manifest and AM disagree on class count")
    return cfg, front, emb, memory


# --- subcommands -------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = separable_synth_spec(
        n_classes=args.classes, n_channels=args.channels, n_trials=args.trials,
        n_sessions=args.sessions, seed=args.seed or 0, noise_sigma=args.noise)
    if args.samples:
        spec.n_samples = args.samples
    if args.fs:
        spec.fs = args.fs
    ds = generate_synthetic(spec)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n_trials} trials ({ds.n_channels} ch x {ds.n_samples} "
          f"samples @ {ds.fs:g} Hz, {ds.n_classes} classes) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _build_config(args)
    ds = _load_cfg_dataset(cfg)
    front = RiemannFrontEnd(cfg.filter_bank(), alpha=cfg.alpha)
    front.fit(ds.samples, ds.fs)
    feats = front.transform_many(ds.samples)
    emb = pipeline.train_embedding(cfg, feats, ds.labels, ds.n_classes)
    memory = pipeline.train_memory(cfg, emb, feats, ds.labels, ds.n_classes)
    outdir = cfg.out or "hdembed_model"
    save_bundle(cfg, front, emb, memory, outdir)
    preds = pipeline.classify_trials(cfg, emb, memory, feats)
    print(f"training-set accuracy: {pipeline.accuracy(preds, ds.labels):.2f} %")
    print(f"model bundle written to {outdir}")
    return 0


def cmd_eval(args) -> int:
    cfg, front, emb, memory = load_bundle(args.model)
    ds = load_dataset(args.dataset)
    feats = front.transform_many(ds.samples)
    preds = pipeline.classify_trials(cfg, emb, memory, feats)
    acc = pipeline.accuracy(preds, ds.labels)
    conf = np.zeros((ds.n_classes, ds.n_classes), dtype=np.int64)
    for truth, pred in zip(ds.labels, preds):
        conf[truth - 1, pred - 1] += 1
    print(f"accuracy: {acc:.2f} %  ({ds.n_trials} trials)")
    print("confusion matrix (rows = true class):")
    for row in conf:
        print("  " + " ".join(f"{int(v):5d}" for v in row))
    return 0


def cmd_run(args) -> int:
    cfg = _build_config(args)
    ds = _load_cfg_dataset(cfg)
    report = pipeline.run_experiment(cfg, ds)
    print(report.summary())
    outdir = cfg.out or "hdembed_out"
    pipeline.write_report(report, outdir)
    print(f"report written to {outdir}/report.json")
    return 0


def cmd_benchmark(args) -> int:
    if args.kernels:
        rows = bench.kernel_benchmark(dim=args.dim, n_vectors=args.vectors)
        print(f"active backend: {BACKEND}")
        print(bench.format_kernel_table(rows))
        return 0
    cfg = _build_config(args)
    cfg.threads = 1  # stable timings
    ds = _load_cfg_dataset(cfg)
    result = bench.benchmark(cfg, ds, repeats=args.repeats)
    print(result.summary())
    return 0


def cmd_footprint(args) -> int:
    cfg = _build_config(args)
    dim = cfg.dim
    if cfg.embedding in ("thermometer", "gray2"):
        dim = args.features * cfg.quantizer_bits()
    bits = pipeline.footprint_bits(cfg.embedding, args.classes, dim,
                                   args.features, args.bands_count)
    print(f"{'component':<18} {'bits':>14}")
    for key, val in bits.items():
        print(f"{key:<18} {val:>14}")
    total = bits["am"] + bits["hd_encoder"] + bits["embedding"]
    print(f"{'total (hd)':<18} {total:>14}")
    return 0


# --- argument plumbing -------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_repeats: bool = False) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--dataset", help="dataset file path")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="parallel folds")
    if with_repeats:
        p.add_argument("--repeats", type=int, default=10,
                       help="timing repetitions (warm-up excluded)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdembed",
        description="Binary hyperdimensional embedding classifiers for "
                    "multi-band feature vectors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset file")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--trials", type=int, default=120)
    p.add_argument("--sessions", type=int, default=4)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train on a dataset and save a model bundle")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model bundle")
    p.add_argument("--model", required=True, help="model bundle directory")
    p.add_argument("--dataset", required=True, help="dataset file path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="cross-validated experiment")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("benchmark", help="timing harness")
    _add_common(p, with_repeats=True)
    p.add_argument("--kernels", action="store_true",
                   help="micro-benchmark the bit kernels across backends")
    p.add_argument("--dim", type=int, default=10000,
                   help="hypervector dimension for --kernels")
    p.add_argument("--vectors", type=int, default=256,
                   help="matrix rows for --kernels")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("footprint", help="model storage cost for a config")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--features", type=int, default=253,
                   help="features per band (n_ch*(n_ch+1)/2)")
    p.add_argument("--bands-count", type=int, default=43)
    p.set_defaults(func=cmd_footprint)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetFormatError, DatasetValidationError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericsError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
