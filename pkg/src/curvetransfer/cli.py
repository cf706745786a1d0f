"""Command-line entry point: ingestion, ranking, training, evaluation, synthetic suite.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 training
divergence. Every command is deterministic given its flags; the seed falls
back to the CURVETRANSFER_SEED environment variable when --seed is omitted.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .curves import Dataset, grid_curve, load_dataset, save_dataset
from .errors import DataValidationError, TrainingDivergenceError
from .metrics import summarize
from .seqnet import TrainConfig
from .similarity import dtw_alignment, rank_sources
from .synthgen import standard_suite
from .transfer import (
    ExperimentPlan,
    concat_shuffle_sources,
    finetune,
    predict_curve,
    pretrain,
    run_variant,
    select_extreme_training_samples,
    transfer_init,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the CLI contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    return int(os.environ.get("CURVETRANSFER_SEED", "0"))


def _write_json(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_ids(raw: str) -> list[str]:
    ids = [part.strip() for part in raw.split(",") if part.strip()]
    if not ids:
        raise DataValidationError(f"no sample ids in {raw!r}")
    return ids


def _train_ids(args, target: Dataset) -> list[str]:
    if args.train_ids:
        return _parse_ids(args.train_ids)
    return list(select_extreme_training_samples(target))


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        sequence_length=args.seq_len,
        optimizer=args.optimizer,
        seed=seed,
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seq-len", type=int, default=5, help="window length n (default 5)")
    parser.add_argument("--epochs", type=int, default=100, help="training epochs (default 100)")
    parser.add_argument("--lr", type=float, default=1e-3, help="learning rate (default 1e-3)")
    parser.add_argument("--optimizer", choices=["sgd", "adam"], default="adam")
    parser.add_argument(
        "--pretrain-epochs", type=int, default=None,
        help="epoch cap for the pre-training stage (default: same as --epochs)",
    )


def _add_split_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--train-ids", help="comma-separated target training sample ids")
    group.add_argument(
        "--auto-extreme", action="store_true",
        help="pick the two DOE-corner samples (scaled-parameter-sum extremes) for training",
    )


def cmd_ingest(args) -> int:
    dataset = load_dataset(args.manifest)
    schema = ", ".join(f"{p.name} [{p.unit}]" for p in dataset.param_schema)
    print(f"dataset: {dataset.name}")
    print(f"role: {dataset.role}")
    print(f"samples: {len(dataset.curves)}")
    print(f"parameters: {schema}")
    points = [c.n_points() for c in dataset.curves]
    print(f"points per sample: min {min(points)}, max {max(points)}")
    return EXIT_OK


def _dump_dtw_pair(source: Dataset, target_curve, n: int, out_dir: Path) -> None:
    a = grid_curve(source.curves[0], n)
    b = grid_curve(target_curve, n)
    result, mats = dtw_alignment(a, b)
    header = [""] + [str(i) for i in range(n)]
    for label, matrix in (("local", mats.local), ("cumulative", mats.cumulative)):
        with open(out_dir / f"{source.name}_{label}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, row in enumerate(matrix):
                writer.writerow([str(i)] + [repr(float(v)) for v in row])
    with open(out_dir / f"{source.name}_path.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "l"])
        writer.writerows(result.path)


def cmd_rank(args) -> int:
    seed = _resolve_seed(args.seed)
    sources = [load_dataset(path) for path in args.sources]
    target = load_dataset(args.target)
    train_ids = _train_ids(args, target)
    train_curves = [target.curve_by_id(sid) for sid in train_ids]
    ranking = rank_sources(sources, train_curves, args.grid_n)
    doc = {
        "entries": [{"source": name, "avg_dtw": float(d)} for name, d in ranking.entries],
        "selected": ranking.selected,
        "target": target.name,
        "train_ids": train_ids,
        "grid_n": args.grid_n,
        "seed": seed,
    }
    if args.out:
        _write_json(doc, Path(args.out))
    if args.dump_dtw:
        dump_dir = Path(args.dump_dtw)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for source in sources:
            _dump_dtw_pair(source, train_curves[0], args.grid_n, dump_dir)
    for name, d in ranking.entries:
        print(f"{name}: {d:.6f}")
    print(f"selected: {ranking.selected}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    seed = _resolve_seed(args.seed)
    sources = [load_dataset(path) for path in args.sources]
    config = _train_config(args, seed)
    pool = concat_shuffle_sources(sources, seed)
    name = "+".join(ds.name for ds in sources)
    checkpoint = pretrain(pool, config, name, pad=args.pad_params)
    save_checkpoint(checkpoint, args.out)
    print(f"pretrained on {name}: {len(pool)} curves -> {args.out}")
    return EXIT_OK


def cmd_finetune(args) -> int:
    seed = _resolve_seed(args.seed)
    source_ckpt = load_checkpoint(args.checkpoint)
    target = load_dataset(args.target)
    train_ids = _train_ids(args, target)
    train_curves = [target.curve_by_id(sid) for sid in train_ids]
    config = _train_config(args, seed)
    params0 = transfer_init(source_ckpt)
    checkpoint = finetune(
        params0, train_curves, config, target.name,
        param_arity=source_ckpt.scalers.arity, pad=args.pad_params,
    )
    save_checkpoint(checkpoint, args.out)
    print(f"finetuned on {target.name} (train ids {','.join(train_ids)}) -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    target = load_dataset(args.target)
    if args.test_ids:
        test_ids = _parse_ids(args.test_ids)
    else:
        test_ids = target.sample_ids()
    per_sample = []
    for sid in test_ids:
        curve = target.curve_by_id(sid)
        predicted = predict_curve(checkpoint, curve)
        actual = curve.stress[checkpoint.sequence_length:]
        m = summarize(actual, predicted)
        per_sample.append(
            {"sample_id": sid, "mape": m.mape, "rmse": m.rmse, "r2": m.r2,
             "n_points": m.n_points, "n_excluded": m.n_excluded}
        )
    agg = {
        "mape": float(np.mean([s["mape"] for s in per_sample])),
        "rmse": float(np.mean([s["rmse"] for s in per_sample])),
        "r2": float(np.mean([s["r2"] for s in per_sample])),
    }
    if args.out:
        _write_json({"dataset": target.name, "per_sample": per_sample, "aggregate": agg}, Path(args.out))
    print(f"MAPE: {agg['mape']:.2f}%  RMSE: {agg['rmse']:.2f}  R2: {agg['r2']:.4f}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    seed = _resolve_seed(args.seed)
    sources = [load_dataset(path) for path in args.sources or []]
    target = load_dataset(args.target)
    train_ids = _train_ids(args, target)
    test_ids = [sid for sid in target.sample_ids() if sid not in set(train_ids)]
    config = _train_config(args, seed)
    plan = ExperimentPlan(
        variant=args.variant,
        source_datasets=[ds.name for ds in sources],
        target_dataset=target.name,
        target_train_ids=train_ids,
        target_test_ids=test_ids,
        config=config,
        grid_n=args.grid_n,
        pad_params=args.pad_params,
        mape_epsilon=args.mape_epsilon,
        pretrain_epochs=args.pretrain_epochs,
    )
    report = run_variant(plan, sources + [target])

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(report.to_dict(), out_dir / "report.json")
    if report.dtw_ranking is not None:
        _write_json(
            {
                "entries": [
                    {"source": name, "avg_dtw": float(d)} for name, d in report.dtw_ranking.entries
                ],
                "selected": report.dtw_ranking.selected,
            },
            out_dir / "ranking.json",
        )
    pred_dir = out_dir / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    n = config.sequence_length
    for sample in report.per_sample:
        curve = target.curve_by_id(sample.sample_id)
        with open(pred_dir / f"{sample.sample_id}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strain", "stress_actual", "stress_predicted"])
            for eps, actual, predicted in zip(curve.strain[n:], curve.stress[n:], sample.predicted):
                writer.writerow([repr(float(eps)), repr(float(actual)), repr(float(predicted))])

    agg = report.to_dict()["aggregate"]
    print(f"variant: {report.variant}")
    if report.selected_source:
        print(f"selected source: {report.selected_source}")
    print(f"MAPE: {agg['mape']:.2f}%  RMSE: {agg['rmse']:.2f}  R2: {agg['r2']:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    out_dir = Path(args.out)
    sources, targets, ground_truth = standard_suite(seed)
    for dataset in sources + targets:
        save_dataset(dataset, out_dir / dataset.name)
    _write_json({"seed": seed, "ground_truth": ground_truth}, out_dir / "ground_truth.json")
    print(f"wrote {len(sources)} source and {len(targets)} target datasets to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curvetransfer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a dataset manifest and print a summary")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rank", help="rank source datasets by average DTW distance to the target")
    p.add_argument("--sources", action="append", required=True, help="source manifest (repeatable)")
    p.add_argument("--target", required=True, help="target manifest")
    _add_split_flags(p)
    p.add_argument("--grid-n", type=int, default=120)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write ranking JSON here")
    p.add_argument("--dump-dtw", help="dump local/cumulative matrices and path CSVs to this dir")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("pretrain", help="pre-train a model on one or more source datasets")
    p.add_argument("--sources", action="append", required=True)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pad-params", action="store_true")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint on target training samples")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True)
    _add_split_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pad-params", action="store_true")
    _add_train_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--test-ids", help="comma-separated sample ids (default: all)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run one experiment variant end to end")
    p.add_argument("--variant", choices=["vanilla", "tl_all", "dtw_tl"], required=True)
    p.add_argument("--sources", action="append", help="source manifest (repeatable)")
    p.add_argument("--target", required=True)
    _add_split_flags(p)
    p.add_argument("--grid-n", type=int, default=120)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pad-params", action="store_true")
    p.add_argument("--mape-epsilon", type=float, default=1e-6,
                   help="|stress| below this (MPa) is excluded from MAPE (default 1e-6)")
    p.add_argument("--out", required=True, help="output directory")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="generate the synthetic source/target suite")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors and --help itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
