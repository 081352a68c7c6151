"""Command-line entry point: fit, predict, evaluate, cv, bench.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training failure (no rules survived).
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, RunConfig, load_config
from .dataset import (DataError, Dataset, Schema, check_class_counts_for_kfold,
                      load_csv, stratified_kfold)
from .engine import Engine
from .fuzzy import NO_COVER
from .induction import TrainingError
from .metrics import TimingGrid
from .model import (evaluate_model, fit_model, load_model, predict_model,
                    rules_text, save_model)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: _Parser) -> None:
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--partitions", type=int, default=1, help="data partitions")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")


def _add_fit_options(p: _Parser) -> None:
    p.add_argument("--config", default=None, help="key=value configuration file")
    p.add_argument("--lightweight", action="store_true",
                   help="skip the evolutionary rule selection stage")
    p.add_argument("--gamma", type=int, choices=(2, 4, 8), default=None)
    p.add_argument("--cost-sensitive", choices=("on", "off"), default=None)
    p.add_argument("--debug-itemsets", default=None, metavar="PATH",
                   help="dump mined itemsets with their counts to PATH")


def build_parser() -> _Parser:
    parser = _Parser(prog="cfm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="train a model")
    p_fit.add_argument("data", help="training CSV")
    p_fit.add_argument("--schema", required=True, help="schema file")
    p_fit.add_argument("--out", default="model.json", help="model output path")
    p_fit.add_argument("--delimiter", default=",")
    p_fit.add_argument("--header", action="store_true")
    p_fit.add_argument("--plots", default=None, metavar="DIR",
                       help="render the fuzzy partitions in original units")
    p_fit.add_argument("--progress", action="store_true",
                       help="print one line per selection generation")
    _add_fit_options(p_fit)
    _add_common(p_fit)

    p_pred = sub.add_parser("predict", help="classify new data with a model")
    p_pred.add_argument("data")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--out", default=None, help="predictions CSV (default stdout)")
    p_pred.add_argument("--delimiter", default=",")
    p_pred.add_argument("--header", action="store_true")

    p_eval = sub.add_parser("evaluate", help="metric report for labeled data")
    p_eval.add_argument("data")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--out", default=None, metavar="DIR",
                        help="write metrics.txt, metrics.csv, confusion.png")
    p_eval.add_argument("--delimiter", default=",")
    p_eval.add_argument("--header", action="store_true")

    p_cv = sub.add_parser("cv", help="stratified cross-validation")
    p_cv.add_argument("data")
    p_cv.add_argument("--schema", required=True)
    p_cv.add_argument("--k", type=int, default=5)
    p_cv.add_argument("--out", default=None, metavar="DIR",
                      help="write cv.txt, cv.csv, cv_metrics.png")
    p_cv.add_argument("--delimiter", default=",")
    p_cv.add_argument("--header", action="store_true")
    _add_fit_options(p_cv)
    _add_common(p_cv)

    p_bench = sub.add_parser("bench", help="scalability benchmark")
    p_bench.add_argument("data")
    p_bench.add_argument("--schema", required=True)
    p_bench.add_argument("--cores", default="1,2", help="comma-separated core counts")
    p_bench.add_argument("--fractions", default="0.5,1.0",
                         help="comma-separated data fractions in (0, 1]")
    p_bench.add_argument("--out", default=None, metavar="DIR",
                         help="write timings.csv, scalability.csv, and figures")
    p_bench.add_argument("--delimiter", default=",")
    p_bench.add_argument("--header", action="store_true")
    _add_fit_options(p_bench)
    _add_common(p_bench)
    return parser


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "gamma", None) is not None:
        overrides["gamma"] = args.gamma
    if getattr(args, "cost_sensitive", None) is not None:
        overrides["cost_sensitive"] = args.cost_sensitive == "on"
    if getattr(args, "lightweight", False):
        overrides["lightweight"] = True
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return config.with_overrides(**overrides) if overrides else config


def _load_labeled(args, schema: Schema) -> Dataset:
    return load_csv(args.data, schema, delimiter=args.delimiter, header=args.header)


def cmd_fit(args) -> int:
    schema = Schema.load(args.schema)
    config = _resolve_config(args)
    train = _load_labeled(args, schema)
    engine = Engine(threads=args.threads)
    progress = (lambda rec: print(rec.line())) if args.progress else None
    model = fit_model(train, config, n_partitions=args.partitions, engine=engine,
                      debug_itemsets=args.debug_itemsets, progress=progress)
    out = Path(args.out)
    save_model(model, out)
    out.with_suffix(".rules").write_text(rules_text(model))
    if args.plots:
        plots = Path(args.plots)
        plots.mkdir(parents=True, exist_ok=True)
        report.plot_fuzzy_partitions(model, plots / "fuzzy_partitions.png")
    s = model.summary()
    print(f"model written to {out}")
    print(f"rules={s['rules']} mean_rule_length={s['mean_rule_length']:.4f} "
          f"trl={s['trl']:.2f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, model.schema, delimiter=args.delimiter,
                    header=args.header, allow_empty=True, require_labels=False)
    preds, degrees = predict_model(model, data)
    lines = []
    for i, (p, b) in enumerate(zip(preds.tolist(), degrees.tolist())):
        label = "NO_COVER" if p == NO_COVER else model.schema.class_labels[p]
        lines.append(f"{i},{label},{b!r}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, model.schema, delimiter=args.delimiter, header=args.header)
    cm = evaluate_model(model, data)
    row = report.metrics_row(cm, model)
    text = report.format_metrics_text([row])
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.txt").write_text(text)
        report.write_metrics_csv(out / "metrics.csv", [row])
        report.plot_confusion(cm, model.schema.class_labels, out / "confusion.png")
    return 0


def cmd_cv(args) -> int:
    schema = Schema.load(args.schema)
    config = _resolve_config(args)
    data = _load_labeled(args, schema)
    check_class_counts_for_kfold(data, args.k)
    folds = stratified_kfold(data, args.k, config.seed)
    engine = Engine(threads=args.threads)
    rows = []
    for f, (train_idx, test_idx) in enumerate(folds):
        model = fit_model(data.take(train_idx), config, n_partitions=args.partitions,
                          engine=engine)
        cm = evaluate_model(model, data.take(test_idx))
        row = {"fold": f}
        row.update(report.metrics_row(cm, model))
        rows.append(row)
    mean_row = {"fold": "mean"}
    for key in report.METRIC_COLUMNS:
        mean_row[key] = math.fsum(float(r[key]) for r in rows) / len(rows)
    all_rows = rows + [mean_row]
    text = report.format_metrics_text(all_rows, label_key="fold")
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "cv.txt").write_text(text)
        report.write_metrics_csv(out / "cv.csv", all_rows, label_key="fold")
        report.plot_cv_metrics(rows, out / "cv_metrics.png")
    return 0


def _stratified_sample(data: Dataset, fraction: float, seed: int) -> Dataset:
    """Class-preserving subsample, original relative order kept."""
    rng = np.random.default_rng(seed)
    chosen = []
    for m in range(data.schema.n_classes):
        idx = np.flatnonzero(data.labels == m)
        take = max(1, int(round(fraction * idx.size)))
        chosen.append(rng.permutation(idx)[:take])
    return data.take(np.sort(np.concatenate(chosen)))


def cmd_bench(args) -> int:
    schema = Schema.load(args.schema)
    config = _resolve_config(args)
    data = _load_labeled(args, schema)
    try:
        cores_list = [int(c) for c in args.cores.split(",") if c]
        fractions = [float(f) for f in args.fractions.split(",") if f]
    except ValueError:
        raise UsageError("bad --cores or --fractions list") from None
    if not cores_list or not fractions:
        raise UsageError("need at least one core count and one fraction")
    if any(f <= 0 or f > 1 for f in fractions):
        raise UsageError("fractions must lie in (0, 1]")
    cores_list = sorted(set(cores_list))
    fractions = sorted(set(fractions))

    samples = {f: _stratified_sample(data, f, config.seed) for f in fractions}
    induction_grid = np.zeros((len(cores_list), len(fractions)))
    whole_grid = np.zeros((len(cores_list), len(fractions)))
    for ci, cores in enumerate(cores_list):
        for fi, fraction in enumerate(fractions):
            engine = Engine(threads=cores)
            start = time.perf_counter()
            fit_model(samples[fraction], config, n_partitions=cores, engine=engine)
            whole_grid[ci, fi] = time.perf_counter() - start
            induction_grid[ci, fi] = math.fsum(
                t for label, t in engine.timings if label == "induction")
    grids = {
        "rule_induction": TimingGrid(tuple(cores_list), tuple(fractions), induction_grid),
        "whole_pipeline": TimingGrid(tuple(cores_list), tuple(fractions), whole_grid),
    }
    for stage, grid in grids.items():
        for ci, cores in enumerate(cores_list):
            runtimes = grid.seconds[ci]
            if any(runtimes[i + 1] < runtimes[i] for i in range(len(fractions) - 1)):
                print(f"warning: {stage} runtime not monotone in data size at "
                      f"{cores} cores", file=sys.stderr)

    rows_by_stage = {stage: report.scalability_rows(grid) for stage, grid in grids.items()}
    for stage, grid in grids.items():
        print(f"[{stage}]")
        for ci, cores in enumerate(cores_list):
            cells = "  ".join(f"{grid.seconds[ci, fi]:10.3f}" for fi in range(len(fractions)))
            print(f"  cores={cores:<4} {cells}")
        for row in rows_by_stage[stage]:
            print(f"  {row['measure']}(m={row['m']:g}) = {row['value']:.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_timing_csv(out / "timings.csv", grids)
        report.write_scalability_csv(out / "scalability.csv", rows_by_stage)
        for stage, grid in grids.items():
            report.plot_scalability(stage, grid, rows_by_stage[stage],
                                    out / f"bench_{stage}.png")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "cv": cmd_cv,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
