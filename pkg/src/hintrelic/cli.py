"""Command-line interface.

Verbs: ``gen`` (datasets), ``augment`` (pair files), ``validate``
(augmentation oracle), ``train`` / ``eval`` (one run), ``ablate``
(mode matrix), ``report`` (ablation table), ``gradcheck`` (gradient
verification).  Exit codes: 0 success, 1 failed gate or runtime error,
2 usage error (from argparse).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import features as F
from .augmentation import generate_pair, save_pairs_jsonl
from .config import (
    build_run_config,
    load_config_file,
    merge_config,
    parse_seed_list,
    resolve_master_seed,
)
from .datasets import build_dataset
from .metrics import mean_stderr
from .oracle import certification_csv, certify
from .reporting import build_report, read_metrics_csv, render_csv, render_text
from .trajectories import save_jsonl
from .training import (
    HARNESS_MODES,
    TrainingDiverged,
    ensure_datasets,
    evaluate_model,
    load_splits,
    restore_run,
    run_ablation,
    train,
    write_metrics_csv,
)
from .verification import TOLERANCE, full_report


def _parse_sizes_flag(text: str) -> "tuple[int, ...]":
    from .config import parse_sizes

    sizes = parse_sizes(text)
    if not sizes:
        raise argparse.ArgumentTypeError(f"no sizes in {text!r}")
    return sizes


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--algorithm", help="algorithm name")
    parser.add_argument("--mode", choices=HARNESS_MODES, help="ablation mode")
    parser.add_argument("--steps", type=int, help="training steps")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--sizes", help="training sizes, e.g. 4..8 or 4,6,8")
    parser.add_argument("--eval-size", type=int)
    parser.add_argument("--seeds", help="comma-separated training seeds")
    parser.add_argument("--master-seed", type=int)
    parser.add_argument("--eval-interval", type=int)
    parser.add_argument("--hidden-dim", type=int)
    parser.add_argument("--triplet-dim", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--clip", type=float)
    parser.add_argument(
        "--include-positive",
        action="store_const",
        const="true",
        help="keep the positive inside the contrastive normalising sum",
    )
    parser.add_argument("--train-count", type=int)
    parser.add_argument("--val-count", type=int)
    parser.add_argument("--test-count", type=int)
    parser.add_argument("--data", help="dataset directory")
    parser.add_argument("--out", help="output directory")


_FLAG_KEYS = {
    "algorithm": "run.algorithm",
    "mode": "run.mode",
    "steps": "run.train_steps",
    "batch_size": "run.batch_size",
    "sizes": "run.train_sizes",
    "eval_size": "run.eval_size",
    "seeds": "run.seeds",
    "master_seed": "run.master_seed",
    "eval_interval": "run.eval_interval",
    "hidden_dim": "model.hidden_dim",
    "triplet_dim": "model.triplet_dim",
    "lr": "opt.learning_rate",
    "clip": "opt.grad_clip",
    "include_positive": "objective.include_positive",
    "train_count": "data.train_count",
    "val_count": "data.val_count",
    "test_count": "data.test_count",
    "data": "data.dir",
    "out": "out.dir",
}


def _merged_config(args) -> "dict[str, str]":
    file_layer = load_config_file(args.config) if args.config else {}
    flag_layer = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            flag_layer[key] = str(value)
    return merge_config(file_layer, flag_layer)


def _cmd_gen(args) -> int:
    paths = build_dataset(
        args.algorithm,
        args.sizes,
        args.count,
        args.seed,
        args.out,
        eval_sizes=(args.eval_size,) if args.eval_size else None,
        val_count=args.val_count,
        test_count=args.test_count,
    )
    for split, path in paths.items():
        print(f"{split}: {path}")
    return 0


def _cmd_augment(args) -> int:
    pairs = [
        generate_pair(
            args.algorithm, args.n, seed, max_train_n=args.max_train_n,
            master_seed=args.seed,
        )
        for seed in range(args.count)
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bases_path = out.with_suffix(out.suffix + ".bases")
    save_jsonl(bases_path, [p.base for p in pairs])
    save_pairs_jsonl(out, pairs)
    print(f"pairs: {out}")
    print(f"bases: {bases_path}")
    return 0


def _validation_summary(rows: "list[tuple[str, int, float, float]]") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algorithm", "pairs_checked", "pass_rate", "mean_equivalent_up_to"])
    for algorithm, checked, rate, mean_eq in rows:
        writer.writerow(
            [algorithm, checked, format(rate, ".17g"), format(mean_eq, ".17g")]
        )
    return buf.getvalue()


def _cmd_validate(args) -> int:
    algorithms = F.ALGORITHMS if args.algorithm == "all" else (args.algorithm,)
    summary_rows = []
    failed = False
    all_pairs, all_reports = [], []
    for algorithm in algorithms:
        passes = 0
        equivalent_steps = []
        for index in range(args.pairs):
            n = 3 + index % (args.max_n - 2)
            pair = generate_pair(
                algorithm, n, index, max_train_n=args.max_n, master_seed=args.seed
            )
            report, ok = certify(pair)
            passes += ok
            equivalent_steps.append(report.equivalent_up_to)
            all_pairs.append(pair)
            all_reports.append(report)
        rate = passes / args.pairs
        mean_eq = float(sum(equivalent_steps) / len(equivalent_steps))
        summary_rows.append((algorithm, args.pairs, rate, mean_eq))
        exact = algorithm in F.EXACT_ALGORITHMS
        if exact and rate < 1.0:
            failed = True
        print(
            f"{algorithm}: {passes}/{args.pairs} passed "
            f"({'exact' if exact else 'approximate'} family)"
        )
    summary = _validation_summary(summary_rows)
    if args.out:
        Path(args.out).write_text(summary)
        print(f"summary: {args.out}")
    else:
        print(summary, end="")
    if args.detail:
        Path(args.detail).write_text(certification_csv(all_pairs, all_reports))
        print(f"detail: {args.detail}")
    if failed:
        print("validation gate FAILED: an exact-family algorithm fell below 1.0")
        return 1
    return 0


def _cmd_train(args) -> int:
    merged = _merged_config(args)
    config = build_run_config(merged)
    data_dir = merged["data.dir"]
    out_dir = merged["out.dir"]
    if args.make_data:
        ensure_datasets(config, data_dir)
    try:
        results = train(config, data_dir, out_dir, log=print)
    except FileNotFoundError as exc:
        print(exc)
        return 1
    except TrainingDiverged as exc:
        print(exc)
        return 1
    for r in results:
        print(f"{r.run_id}: done at step {r.final_step} -> {r.checkpoint_path}")
    print(f"metrics: {Path(out_dir) / 'metrics.csv'}")
    return 0


def _cmd_eval(args) -> int:
    merged = _merged_config(args)
    config = build_run_config(merged)
    seeds = parse_seed_list(merged["run.seeds"])
    splits = load_splits(config, merged["data.dir"])
    data = splits[args.split]
    scores = []
    for seed in seeds:
        checkpoint = args.checkpoint or (
            Path(merged["out.dir"]) / f"{config.run_id(seed)}.ckpt"
        )
        model, _ = restore_run(config, seed, checkpoint)
        score = evaluate_model(model, data)
        scores.append(score.overall)
        print(f"{config.run_id(seed)} {args.split} micro_f1 {score.overall:.6f}")
    mean, stderr = mean_stderr(scores)
    print(f"mean {mean:.6f} stderr {stderr:.6f} over {len(scores)} seed(s)")
    return 0


def _cmd_ablate(args) -> int:
    if not args.algorithm:
        print("ablate requires --algorithm")
        return 2
    merged = _merged_config(args)
    modes = tuple(args.modes.split(",")) if args.modes else HARNESS_MODES
    for mode in modes:
        if mode not in HARNESS_MODES:
            print(f"unknown mode {mode!r}")
            return 2
    seeds = tuple(range(args.num_seeds))
    from .config import parse_sizes

    config_overrides = {
        "batch_size": int(merged["run.batch_size"]),
        "train_steps": int(merged["run.train_steps"]),
        "train_sizes": parse_sizes(merged["run.train_sizes"]),
        "eval_size": int(merged["run.eval_size"]),
        "hidden_dim": int(merged["model.hidden_dim"]),
        "triplet_dim": int(merged["model.triplet_dim"]),
        "eval_interval": int(merged["run.eval_interval"]),
        "learning_rate": float(merged["opt.learning_rate"]),
        "grad_clip": float(merged["opt.grad_clip"]),
        "train_count": int(merged["data.train_count"]),
        "val_count": int(merged["data.val_count"]),
        "test_count": int(merged["data.test_count"]),
        "master_seed": resolve_master_seed(merged),
        "include_positive": parse_bool(merged["objective.include_positive"]),
    }
    out_dir = Path(merged["out.dir"])
    results = run_ablation(
        args.algorithm,
        modes,
        seeds,
        merged["data.dir"],
        out_dir,
        config_overrides=config_overrides,
        log=print,
    )
    rows = [row for r in results for row in r.metrics_rows]
    table = build_report(rows)
    text = render_text(table)
    (out_dir / "report.txt").write_text(text)
    (out_dir / "report.csv").write_text(render_csv(table))
    print(text, end="")
    if any(r.diverged for r in results):
        print("WARNING: at least one run diverged; see metrics.csv")
        return 1
    return 0


def _cmd_report(args) -> int:
    rows = read_metrics_csv(args.metrics)
    table = build_report(rows)
    text = render_text(table)
    print(text, end="")
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(str(prefix) + ".txt").write_text(text)
        Path(str(prefix) + ".csv").write_text(render_csv(table))
        print(f"written: {prefix}.txt {prefix}.csv")
    return 0


def _cmd_gradcheck(args) -> int:
    results = full_report(args.seed)
    worst = 0.0
    for r in results:
        state = "ok " if r.passed else "FAIL"
        print(f"{state} {r.name:24s} max_rel_err {r.max_error:.3e}")
        worst = max(worst, r.max_error)
    print(f"tolerance {TOLERANCE:g}; worst {worst:.3e}")
    if any(not r.passed for r in results):
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hintrelic",
        description="algorithmic-reasoning workbench: traces, augmentations, "
        "invariance training, ablations",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("gen", help="build train/val/test trace datasets")
    gen.add_argument("--algorithm", required=True, choices=F.ALGORITHMS)
    gen.add_argument("--sizes", type=_parse_sizes_flag, default=(4, 5, 6, 7, 8))
    gen.add_argument("--count", type=int, default=1000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--eval-size", type=int, default=16)
    gen.add_argument("--val-count", type=int, default=None)
    gen.add_argument("--test-count", type=int, default=None)
    gen.add_argument("--out", default="data")
    gen.set_defaults(func=_cmd_gen)

    aug = sub.add_parser("augment", help="generate augmentation pair files")
    aug.add_argument("--algorithm", required=True, choices=F.ALGORITHMS)
    aug.add_argument("--count", type=int, default=100)
    aug.add_argument("--n", type=int, default=6, help="base instance size")
    aug.add_argument("--max-train-n", type=int, default=8)
    aug.add_argument("--seed", type=int, default=0)
    aug.add_argument("--out", default="pairs.jsonl")
    aug.set_defaults(func=_cmd_augment)

    val = sub.add_parser("validate", help="certify augmentations with the execution oracle")
    val.add_argument("--algorithm", required=True,
                     choices=F.ALGORITHMS + ("all",))
    val.add_argument("--pairs", type=int, default=100)
    val.add_argument("--max-n", type=int, default=8)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out", help="summary CSV path")
    val.add_argument("--detail", help="per-pair CSV path")
    val.set_defaults(func=_cmd_validate)

    tr = sub.add_parser("train", help="train one ablation mode")
    _add_config_flags(tr)
    tr.add_argument("--make-data", action="store_true",
                    help="build missing dataset files first")
    tr.set_defaults(func=_cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_config_flags(ev)
    ev.add_argument("--checkpoint", help="explicit checkpoint path")
    ev.add_argument("--split", choices=("val", "test"), default="test")
    ev.set_defaults(func=_cmd_eval)

    ab = sub.add_parser("ablate", help="run the mode matrix for one algorithm")
    _add_config_flags(ab)
    ab.add_argument("--modes", help="comma-separated modes (default: all)")
    ab.add_argument("--num-seeds", type=int, default=1,
                    help="number of seeds (0..N-1)")
    ab.set_defaults(func=_cmd_ablate)

    rep = sub.add_parser("report", help="format an ablation report from metrics")
    rep.add_argument("--metrics", required=True)
    rep.add_argument("--out", help="output path prefix")
    rep.set_defaults(func=_cmd_report)

    gc = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
