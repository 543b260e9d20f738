"""Command-line entry point: ``mdgesture <synth|spectrogram|features|eval|group>``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from mdgesture import classify, pipelines, subspace, synth
from mdgesture.config import RunConfig
from mdgesture.errors import ConfigError, DataError, FormatError
from mdgesture.fileio import load_iq, spectrogram_pgm_pixels, write_pgm, write_spectrogram
from mdgesture.signal import center_spectrum, stft

CONFIG_NAME = "config.txt"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="section.key=value file")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--sample-rate", type=float, dest="sample_rate",
                   help="sample rate in Hz for raw inputs without a .meta sidecar")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdgesture", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic gesture dataset")
    _common(p)

    p = sub.add_parser("spectrogram", help="centered spectrogram of one I/Q file as CSV + PGM")
    p.add_argument("input", type=Path)
    _common(p)

    p = sub.add_parser("features", help="per-segment features of a dataset directory")
    p.add_argument("input", type=Path, help="directory with manifest.csv")
    p.add_argument("--method", choices=pipelines.METHODS, required=True)
    _common(p)

    p = sub.add_parser("eval", help="Monte Carlo evaluation of a feature dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("--trials", type=int, help="Monte Carlo trials (overrides eval.trials)")
    _common(p)

    p = sub.add_parser("group", help="subspace similarity and gesture grouping")
    p.add_argument("input", type=Path, help="image dataset CSV or directory with manifest.csv")
    p.add_argument("--tau", type=float)
    _common(p)
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = {}
    if args.seed is not None:
        over["synth.seed"] = args.seed
        over["eval.seed"] = args.seed
    if args.sample_rate is not None:
        over["io.sample_rate_hz"] = args.sample_rate
    if getattr(args, "trials", None) is not None:
        over["eval.trials"] = args.trials
    if getattr(args, "tau", None) is not None:
        over["group.tau"] = args.tau
    return cfg.with_overrides(**over) if over else cfg


def cmd_synth(args, cfg: RunConfig) -> None:
    out = args.out
    synth.synth_dataset(cfg.synth(), out_dir=out)
    cfg.write(out / CONFIG_NAME)


def cmd_spectrogram(args, cfg: RunConfig) -> None:
    sig = load_iq(args.input, args.sample_rate, cfg["io.sample_rate_hz"])
    spec = center_spectrum(stft(sig, cfg.stft()))
    prefix = args.out
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_spectrogram(prefix, spec)
    write_pgm(prefix.with_suffix(".pgm"), spectrogram_pgm_pixels(spec))
    cfg.write(prefix.with_suffix(".config.txt"))


def _signals(directory: Path, args, cfg: RunConfig):
    # an explicit --sample-rate beats sidecars; the config value is the fallback
    return synth.read_manifest(directory, args.sample_rate, cfg["io.sample_rate_hz"])


def cmd_features(args, cfg: RunConfig) -> None:
    signals, labels, names = _signals(args.input, args, cfg)
    X, cols, _ = pipelines.extract(signals, args.method, cfg.features())
    out = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    classify.write_dataset(out, labels, names, X, cols)
    cfg.write(out.with_suffix(".config.txt"))


def make_pipeline(kind: str, cfg: RunConfig):
    if kind == "image":
        return pipelines.PcaPipeline(cfg["pca.d"])
    if kind == "trajectory":
        return pipelines.SparsePipeline(cfg["sparse.P"], seed=cfg["eval.seed"])
    if cfg["eval.classifier"] == "svm":
        return pipelines.SvmPipeline(cfg["svm.epochs"], cfg["svm.lam"], seed=cfg["eval.seed"])
    return pipelines.KnnPipeline(cfg.knn(), standardize=kind == "empirical")


def cmd_eval(args, cfg: RunConfig) -> None:
    data = classify.read_dataset(args.dataset)
    report = classify.evaluate(data, make_pipeline(data.feature_kind, cfg),
                               cfg["eval.train_frac"], cfg["eval.trials"], cfg["eval.seed"])
    extra = {"feature_kind": data.feature_kind}
    if data.feature_kind in ("envelope", "empirical"):
        extra["classifier"] = cfg["eval.classifier"]
        if cfg["eval.classifier"] == "knn":
            extra["metric"] = cfg["knn.metric"]
            extra["k"] = cfg["knn.k"]
    classify.write_report(args.out, report, extra)
    cfg.write(args.out / CONFIG_NAME)


def _image_stack(path: Path, args, cfg: RunConfig) -> subspace.ImageStack:
    if path.is_dir():
        signals, labels, _ = _signals(path, args, cfg)
        X, _, _ = pipelines.extract(signals, "pca", cfg.features())
        return subspace.ImageStack(X.T, labels)
    data = classify.read_dataset(path)
    if data.feature_kind != "image":
        raise FormatError(f"{path}: group needs an image dataset, got {data.feature_kind}")
    return subspace.ImageStack(data.features.T, data.labels)


def cmd_group(args, cfg: RunConfig) -> None:
    stack = _image_stack(args.input, args, cfg)
    ids, models = subspace.class_subspaces(stack, cfg["group.d"])
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if len(models) == 1:
        sim = np.ones((1, 1))
        groups = [[0]]
    else:
        sim = subspace.similarity_matrix(models)
        groups = subspace.group_classes(sim, cfg["group.tau"])
    subspace.write_similarity_csv(out / "similarity.csv", ids, sim)
    subspace.write_partition(out / "partition.txt", ids, groups)
    cfg.write(out / CONFIG_NAME)


COMMANDS = {"synth": cmd_synth, "spectrogram": cmd_spectrogram, "features": cmd_features,
            "eval": cmd_eval, "group": cmd_group}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args)
    except UsageError as exc:
        print(f"mdgesture: usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"mdgesture: config error: {exc}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"mdgesture: config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"mdgesture: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
