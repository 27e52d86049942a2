"""Command-line interface.

Subcommands: train, unlearn, metrics, degree, experiment, emit-plots.
Flag precedence is flags > config file > built-in defaults.  Exit codes:
0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import degree as degree_mod
from . import metrics as metrics_mod
from . import nn
from . import unlearn as unlearn_mod
from .data import split
from .experiment import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    StrategySpec,
    build_dataset,
    config_hash,
    emit_plot_data,
    run_experiment,
    run_strategy,
    train_source_model,
    write_json,
    _run_name,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unlearnlab",
        description="Desk-scale machine-unlearning laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, strategy=False, ratio=False, seed=False):
        p.add_argument("--config", metavar="PATH", help="JSON experiment config")
        p.add_argument("--out", metavar="DIR", help="output directory override")
        p.add_argument("--jobs", type=int, metavar="INT",
                       help="parallel strategy runs per cell")
        if seed:
            p.add_argument("--seed", type=int, metavar="INT", help="seed override")
        if ratio:
            p.add_argument("--ratio", type=float, metavar="FLOAT",
                           help="unlearning ratio override")
        if strategy:
            p.add_argument("--strategy", metavar="NAME",
                           help="single strategy to run (by name)")

    add_common(sub.add_parser("train", help="train and checkpoint a source model"),
               strategy=True, ratio=True, seed=True)
    add_common(sub.add_parser("unlearn", help="run one unlearning strategy"),
               strategy=True, ratio=True, seed=True)
    add_common(sub.add_parser("metrics", help="recompute the metrics CSV "
                              "from saved run artifacts"),
               strategy=True, ratio=True, seed=True)
    add_common(sub.add_parser("degree", help="train the degree probe for a "
                              "saved source/unlearned pair"),
               strategy=True, ratio=True, seed=True)
    add_common(sub.add_parser("experiment", help="run the full pipeline"),
               strategy=True, ratio=True, seed=True)
    p = sub.add_parser("emit-plots", help="write plot-data CSVs and figures")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--no-figures", action="store_true",
                   help="emit CSVs only, skip PNG rendering")
    return parser


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json_file(args.config)
    else:
        cfg = ExperimentConfig.from_dict({})
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "jobs", None):
        cfg.jobs = args.jobs
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "ratio", None) is not None:
        cfg.ratios = [args.ratio]
    if getattr(args, "strategy", None):
        wanted = args.strategy
        matches = [s for s in cfg.strategies if s.name == wanted]
        if matches:
            cfg.strategies = matches[:1]
        else:
            cfg.strategies = [StrategySpec(name=wanted)]
    cfg.validate()
    return cfg


def _source_for(cfg, ds, seed, out: Path):
    """Load the cached source checkpoint when present, else train and save."""
    path = out / "checkpoints" / f"source_s{seed}.json"
    if path.exists():
        return nn.load_checkpoint(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    source, _ = train_source_model(cfg, ds, seed)
    nn.save_checkpoint(source, path)
    return source


def _cmd_train(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg.dataset)
    summary = {}
    for seed in cfg.seeds:
        source, epochs = train_source_model(cfg, ds, seed)
        path = out / "checkpoints" / f"source_s{seed}.json"
        nn.save_checkpoint(source, path)
        acc = metrics_mod.accuracy(source, ds.features, ds.labels)
        summary[str(seed)] = {
            "checkpoint": str(path), "epochs_run": epochs, "train_accuracy": acc,
        }
    print(json.dumps({"trained": summary}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_unlearn(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    (out / "outcomes").mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg.dataset)
    results = {}
    for seed in cfg.seeds:
        source = _source_for(cfg, ds, seed, out)
        for ratio in cfg.ratios:
            sp = split(ds, ratio, seed)
            for spec in cfg.strategies:
                outcome = run_strategy(spec, source, ds, sp, cfg, seed)
                run_name = _run_name(spec.name, ratio, seed)
                write_json(out / "outcomes" / f"{run_name}.json",
                           outcome.to_json_dict())
                nn.save_checkpoint(outcome.model,
                                   out / "checkpoints" / f"{run_name}.json")
                results[run_name] = {
                    "acc_ul": outcome.acc_ul, "acc_re": outcome.acc_re,
                    "epochs_run": outcome.epochs_run,
                    "wall_time_s": outcome.wall_time_s,
                }
    print(json.dumps({"runs": results}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_metrics(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    outcomes_dir = out / "outcomes"
    if not outcomes_dir.is_dir():
        raise ExperimentError(f"no outcomes directory under {out}")
    ds = build_dataset(cfg.dataset)
    reports = []
    for seed in cfg.seeds:
        source_path = out / "checkpoints" / f"source_s{seed}.json"
        if not source_path.exists():
            raise ExperimentError(f"missing source checkpoint {source_path}")
        source = nn.load_checkpoint(source_path)
        for ratio in cfg.ratios:
            sp = split(ds, ratio, seed)
            X_ul = ds.features[sp.unlearn_indices]
            y_ul = ds.labels[sp.unlearn_indices]
            X_re = ds.features[sp.remain_indices]
            y_re = ds.labels[sp.remain_indices]
            acc_ul_before = metrics_mod.accuracy(source, X_ul, y_ul)
            acc_re_before = metrics_mod.accuracy(source, X_re, y_re)
            cell = {}
            for spec in cfg.strategies:
                run_name = _run_name(spec.name, ratio, seed)
                outcome_path = outcomes_dir / f"{run_name}.json"
                ckpt_path = out / "checkpoints" / f"{run_name}.json"
                if not (outcome_path.exists() and ckpt_path.exists()):
                    continue
                with open(outcome_path, "r", encoding="utf-8") as fh:
                    cell[spec.name] = (json.load(fh), nn.load_checkpoint(ckpt_path))
            retrain = cell.get("retrain")
            for name, (outcome, model) in cell.items():
                if retrain is not None:
                    reference, ref_tag = retrain[1], "retrain"
                    retrain_time = retrain[0]["wall_time_s"]
                else:
                    reference, ref_tag = source, "source"
                    retrain_time = None
                reports.append(metrics_mod.build_metric_report(
                    strategy=name, ratio=ratio,
                    acc_ul_before=acc_ul_before, acc_ul_after=outcome["acc_ul"],
                    acc_re_before=acc_re_before, acc_re_after=outcome["acc_re"],
                    model_similarity=metrics_mod.similarity(reference, model, X_ul),
                    unlearn_time_s=outcome["wall_time_s"],
                    retrain_time_s=retrain_time,
                    similarity_reference=ref_tag,
                ))
    metrics_mod.write_metrics_csv(out / "metrics.csv", reports)
    print(json.dumps({"metrics_csv": str(out / "metrics.csv"),
                      "rows": len(reports)}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_degree(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    (out / "degree").mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg.dataset)
    d = cfg.degree
    frange = (0.0, 1.0) if ds.scaling == "unit" else None
    results = {}
    for seed in cfg.seeds:
        source = _source_for(cfg, ds, seed, out)
        for ratio in cfg.ratios:
            sp = split(ds, ratio, seed)
            X_ul = ds.features[sp.unlearn_indices]
            y_ul = ds.labels[sp.unlearn_indices]
            for spec in cfg.strategies:
                run_name = _run_name(spec.name, ratio, seed)
                ckpt = out / "checkpoints" / f"{run_name}.json"
                if not ckpt.exists():
                    raise ExperimentError(
                        f"missing unlearned checkpoint {ckpt}; run 'unlearn' first"
                    )
                unlearned = nn.load_checkpoint(ckpt)
                dconf = degree_mod.DegreeConfig(
                    eta=float(d["eta"]), epochs=int(d["epochs"]),
                    batch_size=int(d["batch_size"]), delta_max=float(d["delta_max"]),
                    tau=float(d["tau"]), learning_rate=float(d["learning_rate"]),
                    hidden=int(d["hidden"]), bottleneck=int(d["bottleneck"]),
                    seed=seed,
                )
                gen, trace = degree_mod.train_generator(
                    source, unlearned, X_ul, y_ul, dconf, frange)
                report = degree_mod.evaluate_degree(
                    source, unlearned, gen, ds, sp, dconf.tau, trace)
                write_json(out / "degree" / f"{run_name}.json", report.to_json_dict())
                degree_mod.dump_perturbed_samples(
                    gen, X_ul, out / "degree" / f"{run_name}_samples.csv")
                results[run_name] = report.to_json_dict()
    print(json.dumps({"degree": results}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_experiment(cfg: ExperimentConfig) -> int:
    manifest = run_experiment(cfg)
    print(json.dumps({
        "config_hash": manifest["config_hash"],
        "out_dir": manifest["out_dir"],
        "runs": len(manifest["runs"]),
        "failures": len(manifest["failures"]),
    }, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_emit_plots(args) -> int:
    out = args.out
    if not out and args.config:
        out = ExperimentConfig.from_json_file(args.config).out_dir
    if not out:
        out = ExperimentConfig.from_dict({}).out_dir
    written = emit_plot_data(out, render_figures=not args.no_figures)
    print(json.dumps({"written": written}, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "emit-plots":
            cfg = None
        else:
            cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "train":
            return _cmd_train(cfg)
        if args.command == "unlearn":
            return _cmd_unlearn(cfg)
        if args.command == "metrics":
            return _cmd_metrics(cfg)
        if args.command == "degree":
            return _cmd_degree(cfg)
        if args.command == "experiment":
            return _cmd_experiment(cfg)
        if args.command == "emit-plots":
            return _cmd_emit_plots(args)
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
