"""Experiment orchestration: config parsing, the train -> unlearn ->
metrics -> degree pipeline, artifact/manifest writing, and plot-data export.

All numeric artifacts except wall-clock times are deterministic for a
given config hash; timings are measurements and live in their own fields.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import degree as degree_mod
from . import metrics as metrics_mod
from . import nn
from . import unlearn as unlearn_mod
from .data import Dataset, generate_blobs, load_idx, split


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


class ExperimentError(RuntimeError):
    """One or more pipeline stages failed; see the manifest for details."""


KNOWN_STRATEGIES = ("top-k", "random-k", "mixed", "eu-k", "cf-k", "retrain")

# The pinned desk fixture.  The unlearn stage runs hotter and stops
# earlier than the library defaults: at this scale the plateau stop has
# to catch the post-perturbation dip on the unlearning data before the
# divergence anchor restores it, and the strategy epsilons sit just
# inside the warm-start bound (perturbed loss <= random-init loss).
DEFAULT_CONFIG = {
    "dataset": {
        "kind": "blobs",
        "class_count": 10,
        "per_class": 500,
        "dims": 32,
        "spread": 0.5,
        "seed": 1234,
    },
    "model": {"hidden": [48, 32]},
    "train": {
        "max_epochs": 250,
        "batch_size": 64,
        "optimizer": "adam",
        "learning_rate": 1e-3,
        "patience": 15,
        "min_delta": 0.0002,
    },
    "unlearn": {
        "lambda": 0.1,
        "epsilon": 1.5,
        "max_epochs": 100,
        "batch_size": 64,
        "optimizer": "adam",
        "learning_rate": 2e-3,
        "patience": 2,
        "min_delta": 0.003,
        "js_reference": "source",
    },
    "baseline_learning_rate": 1e-4,
    "ratios": [0.05, 0.10, 0.15, 0.20],
    "seeds": [0, 1, 2, 3, 4],
    "strategies": [
        {"name": "top-k", "K": 45, "epsilon": 1.5},
        {"name": "random-k", "k": 0.05, "epsilon": 2.0},
        {"name": "eu-k", "layers": 1},
        {"name": "cf-k", "layers": 1},
        {"name": "retrain"},
    ],
    "degree": {
        "enabled": False,
        "eta": 0.03,
        "epochs": 60,
        "batch_size": 64,
        "delta_max": 2.0,
        "tau": 0.05,
        "learning_rate": 5e-3,
        "hidden": 32,
        "bottleneck": 16,
    },
    "out_dir": "runs/fixture",
    "jobs": 1,
}


@dataclass
class StrategySpec:
    name: str
    K: int = None
    k: float = None
    epsilon: float = unlearn_mod.DEFAULT_EPSILON
    layers: int = 1

    def __post_init__(self):
        if self.name not in KNOWN_STRATEGIES:
            raise ConfigError(f"unknown strategy {self.name!r}")
        if self.name == "top-k" and self.K is None:
            self.K = unlearn_mod.DEFAULT_TOP_K
        if self.name in ("random-k", "mixed") and self.k is None:
            self.k = unlearn_mod.DEFAULT_RANDOM_RATIO
        if self.name == "mixed" and self.K is None:
            self.K = unlearn_mod.DEFAULT_TOP_K


@dataclass
class ExperimentConfig:
    dataset: dict
    model: dict
    train: dict
    unlearn: dict
    strategies: list
    ratios: list
    seeds: list
    degree: dict
    baseline_learning_rate: float
    out_dir: str
    jobs: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        merged = _merge_defaults(DEFAULT_CONFIG, raw)
        unknown = set(raw) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            strategies = [
                StrategySpec(**{**s, "name": s["name"]}) if isinstance(s, dict)
                else StrategySpec(name=s)
                for s in merged["strategies"]
            ]
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"bad strategy entry: {exc}") from exc
        cfg = cls(
            dataset=merged["dataset"],
            model=merged["model"],
            train=merged["train"],
            unlearn=merged["unlearn"],
            strategies=strategies,
            ratios=[float(r) for r in merged["ratios"]],
            seeds=[int(s) for s in merged["seeds"]],
            degree=merged["degree"],
            baseline_learning_rate=float(merged["baseline_learning_rate"]),
            out_dir=str(merged["out_dir"]),
            jobs=int(merged["jobs"]),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(raw)

    def validate(self) -> None:
        if not self.strategies:
            raise ConfigError("need at least one strategy")
        if not self.ratios:
            raise ConfigError("need at least one unlearning ratio")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        for r in self.ratios:
            if not 0.0 < r < 1.0:
                raise ConfigError(f"ratio {r} outside (0, 1)")
        kind = self.dataset.get("kind")
        if kind not in ("blobs", "idx"):
            raise ConfigError(f"unknown dataset kind {kind!r}")
        if kind == "idx" and not (
            self.dataset.get("images") and self.dataset.get("labels")
        ):
            raise ConfigError("idx dataset requires 'images' and 'labels' paths")
        if kind == "blobs":
            missing = {"class_count", "per_class", "dims", "spread", "seed"} \
                - set(self.dataset)
            if missing:
                raise ConfigError(f"blobs dataset missing keys: {sorted(missing)}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def semantic_dict(self) -> dict:
        """Everything that changes results: excludes out_dir and jobs."""
        return {
            "dataset": self.dataset,
            "model": self.model,
            "train": self.train,
            "unlearn": self.unlearn,
            "strategies": [
                {"name": s.name, "K": s.K, "k": s.k,
                 "epsilon": s.epsilon, "layers": s.layers}
                for s in self.strategies
            ],
            "ratios": self.ratios,
            "seeds": self.seeds,
            "degree": self.degree,
            "baseline_learning_rate": self.baseline_learning_rate,
        }


def _merge_defaults(defaults, raw):
    merged = {}
    for key, base in defaults.items():
        value = raw.get(key, base)
        if isinstance(base, dict) and isinstance(value, dict) and key != "dataset":
            merged[key] = {**base, **value}
        else:
            merged[key] = value
    return merged


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(cfg.semantic_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_dataset(spec: dict) -> Dataset:
    if spec["kind"] == "blobs":
        return generate_blobs(
            class_count=int(spec["class_count"]),
            per_class=int(spec["per_class"]),
            dims=int(spec["dims"]),
            spread=float(spec["spread"]),
            seed=int(spec["seed"]),
        )
    return load_idx(spec["images"], spec["labels"])


def _unlearn_config(cfg: ExperimentConfig, epsilon: float,
                    learning_rate: float = None, lam: float = None) -> unlearn_mod.UnlearnConfig:
    u = cfg.unlearn
    return unlearn_mod.UnlearnConfig(
        lam=u["lambda"] if lam is None else lam,
        epsilon=epsilon,
        max_epochs=int(u["max_epochs"]),
        batch_size=int(u["batch_size"]),
        optimizer=u["optimizer"],
        learning_rate=u["learning_rate"] if learning_rate is None else learning_rate,
        patience=int(u["patience"]),
        min_delta=float(u["min_delta"]),
        js_reference=u["js_reference"],
    )


def train_source_model(cfg: ExperimentConfig, ds: Dataset, seed: int):
    dims = [ds.dims] + [int(h) for h in cfg.model["hidden"]] + [ds.class_count]
    net = nn.init_random(dims, seed)
    t = cfg.train
    train_cfg = unlearn_mod.UnlearnConfig(
        lam=0.0,
        epsilon=0.0,
        max_epochs=int(t["max_epochs"]),
        batch_size=int(t["batch_size"]),
        optimizer=t["optimizer"],
        learning_rate=float(t["learning_rate"]),
        patience=int(t["patience"]),
        min_delta=float(t["min_delta"]),
    )
    trained, epochs_run, acc_trace = unlearn_mod.train_source(net, ds, train_cfg, seed)
    return trained, epochs_run


def run_strategy(spec: StrategySpec, source: nn.Network, ds: Dataset, sp,
                 cfg: ExperimentConfig, seed: int) -> unlearn_mod.UnlearnOutcome:
    """One unlearning run; the source network is never mutated."""
    if spec.name in unlearn_mod.PERTURBATION_STRATEGIES:
        ucfg = _unlearn_config(cfg, spec.epsilon)
        total = nn.param_count(source)
        if spec.name == "random-k":
            plan = unlearn_mod.select_random_k(total, spec.k, seed, spec.epsilon)
        else:
            probe = unlearn_mod.pick_sensitivity_sample(ds, seed)
            sens = unlearn_mod.sensitivity(
                source, ds.features[probe:probe + 1], ds.labels[probe:probe + 1]
            )
            if spec.name == "top-k":
                plan = unlearn_mod.select_top_k(sens, spec.K, spec.epsilon)
            else:
                plan = unlearn_mod.select_mixed(sens, spec.K, spec.k, seed, spec.epsilon)
        return unlearn_mod.unlearn_finetune(source, ds, sp, ucfg, plan, seed=seed)
    if spec.name == "retrain":
        bcfg = _unlearn_config(cfg, 0.0, learning_rate=float(cfg.train["learning_rate"]), lam=0.0)
        return unlearn_mod.run_baseline("retrain", source, ds, sp, bcfg, seed=seed)
    bcfg = _unlearn_config(cfg, 0.0, learning_rate=cfg.baseline_learning_rate, lam=0.0)
    return unlearn_mod.run_baseline(spec.name, source, ds, sp, bcfg,
                                    layer_count=spec.layers, seed=seed)


def _ratio_tag(ratio: float) -> str:
    return f"{ratio:g}".replace(".", "p")


def _run_name(strategy: str, ratio: float, seed: int) -> str:
    return f"{strategy}_r{_ratio_tag(ratio)}_s{seed}"


def run_experiment(cfg: ExperimentConfig):
    """Run every (ratio, seed, strategy) cell and write all artifacts.

    Returns the manifest dict (also written to ``out_dir/manifest.json``).
    Stage failures are recorded in the manifest and re-raised as a single
    ExperimentError after the remaining cells complete.
    """
    out = Path(cfg.out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "outcomes").mkdir(exist_ok=True)
    if cfg.degree.get("enabled"):
        (out / "degree").mkdir(exist_ok=True)

    ds = build_dataset(cfg.dataset)
    manifest = {
        "config_hash": config_hash(cfg),
        "created": datetime.now(timezone.utc).isoformat(),
        "out_dir": str(out),
        "dataset": {"n": ds.n, "dims": ds.dims, "class_count": ds.class_count,
                    "scaling": ds.scaling},
        "source_models": {},
        "runs": [],
        "degree_reports": [],
        "metrics_csv": "metrics.csv",
        "failures": [],
    }
    reports = []

    for seed in cfg.seeds:
        try:
            source, _ = train_source_model(cfg, ds, seed)
        except Exception as exc:  # noqa: BLE001 - recorded and surfaced below
            manifest["failures"].append(
                {"stage": "train", "seed": seed, "error": repr(exc)}
            )
            continue
        source_path = f"checkpoints/source_s{seed}.json"
        nn.save_checkpoint(source, out / source_path)
        manifest["source_models"][str(seed)] = source_path

        for ratio in cfg.ratios:
            sp = split(ds, ratio, seed)
            X_ul = ds.features[sp.unlearn_indices]
            y_ul = ds.labels[sp.unlearn_indices]
            X_re = ds.features[sp.remain_indices]
            y_re = ds.labels[sp.remain_indices]
            acc_ul_before = metrics_mod.accuracy(source, X_ul, y_ul)
            acc_re_before = metrics_mod.accuracy(source, X_re, y_re)

            outcomes = {}

            def _one(spec):
                return spec.name, run_strategy(spec, source, ds, sp, cfg, seed)

            if cfg.jobs > 1:
                with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                    futures = [pool.submit(_one, spec) for spec in cfg.strategies]
                    results = []
                    for fut in futures:
                        try:
                            results.append(fut.result())
                        except Exception as exc:  # noqa: BLE001
                            manifest["failures"].append(
                                {"stage": "unlearn", "ratio": ratio, "seed": seed,
                                 "error": repr(exc)}
                            )
                outcomes = dict(results)
            else:
                for spec in cfg.strategies:
                    try:
                        name, outcome = _one(spec)
                        outcomes[name] = outcome
                    except Exception as exc:  # noqa: BLE001
                        manifest["failures"].append(
                            {"stage": "unlearn", "strategy": spec.name,
                             "ratio": ratio, "seed": seed, "error": repr(exc)}
                        )

            retrain_outcome = outcomes.get("retrain")
            for name, outcome in outcomes.items():
                run_name = _run_name(name, ratio, seed)
                outcome_path = f"outcomes/{run_name}.json"
                ckpt_path = f"checkpoints/{run_name}.json"
                write_json(out / outcome_path, outcome.to_json_dict())
                nn.save_checkpoint(outcome.model, out / ckpt_path)
                if retrain_outcome is not None:
                    reference, ref_tag = retrain_outcome.model, "retrain"
                    retrain_time = retrain_outcome.wall_time_s
                else:
                    reference, ref_tag = source, "source"
                    retrain_time = None
                manifest["runs"].append({
                    "strategy": name, "ratio": ratio, "seed": seed,
                    "outcome": outcome_path, "checkpoint": ckpt_path,
                    "similarity_reference": ref_tag,
                })
                sim = metrics_mod.similarity(reference, outcome.model, X_ul)
                reports.append(metrics_mod.build_metric_report(
                    strategy=name,
                    ratio=ratio,
                    acc_ul_before=acc_ul_before,
                    acc_ul_after=outcome.acc_ul,
                    acc_re_before=acc_re_before,
                    acc_re_after=outcome.acc_re,
                    model_similarity=sim,
                    unlearn_time_s=outcome.wall_time_s,
                    retrain_time_s=retrain_time,
                    similarity_reference=ref_tag,
                ))

            if cfg.degree.get("enabled"):
                d = cfg.degree
                dconf = degree_mod.DegreeConfig(
                    eta=float(d["eta"]), epochs=int(d["epochs"]),
                    batch_size=int(d["batch_size"]), delta_max=float(d["delta_max"]),
                    tau=float(d["tau"]), learning_rate=float(d["learning_rate"]),
                    hidden=int(d["hidden"]), bottleneck=int(d["bottleneck"]),
                    seed=seed,
                )
                frange = (0.0, 1.0) if ds.scaling == "unit" else None
                for name, outcome in outcomes.items():
                    try:
                        gen, trace = degree_mod.train_generator(
                            source, outcome.model, X_ul, y_ul, dconf, frange,
                        )
                        report = degree_mod.evaluate_degree(
                            source, outcome.model, gen, ds, sp, dconf.tau, trace,
                        )
                    except Exception as exc:  # noqa: BLE001
                        manifest["failures"].append(
                            {"stage": "degree", "strategy": name, "ratio": ratio,
                             "seed": seed, "error": repr(exc)}
                        )
                        continue
                    run_name = _run_name(name, ratio, seed)
                    report_path = f"degree/{run_name}.json"
                    samples_path = f"degree/{run_name}_samples.csv"
                    write_json(out / report_path, report.to_json_dict())
                    degree_mod.dump_perturbed_samples(gen, X_ul, out / samples_path)
                    manifest["degree_reports"].append({
                        "strategy": name, "ratio": ratio, "seed": seed,
                        "report": report_path, "samples": samples_path,
                    })

    metrics_mod.write_metrics_csv(out / "metrics.csv", reports)
    write_json(out / "manifest.json", manifest)
    if manifest["failures"]:
        raise ExperimentError(
            f"{len(manifest['failures'])} stage(s) failed; see manifest.json"
        )
    return manifest


# --- plot-data export ----------------------------------------------------

CURVES_HEADER = "strategy,ratio,seed,epoch,acc_re,acc_ul"
ACCEL_HEADER = "strategy,ratio,seed,acceleration"
MIXED_HEADER = "strategy,ratio,seed,epoch,acc_re"
DEGREE_HEADER = "strategy,ratio,seed,degree,constraint_satisfied"

_MIXED_FAMILY = ("top-k", "random-k", "mixed")


def emit_plot_data(out_dir, render_figures: bool = True) -> dict:
    """Write the per-figure CSV families (and rendered PNGs) for a manifest.

    Missing inputs are listed in ``plots/gaps.txt``; emission is partial
    rather than failing.  Returns {family: path} for everything written.
    """
    out = Path(out_dir)
    manifest_path = out / "manifest.json"
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    plots_dir = out / "plots"
    plots_dir.mkdir(exist_ok=True)

    gaps = []
    written = {}

    curve_rows = []
    accel_rows = []
    mixed_rows = []
    outcomes_by_cell = {}
    for run in manifest["runs"]:
        path = out / run["outcome"]
        if not path.exists():
            gaps.append(f"missing outcome file {run['outcome']}")
            continue
        with open(path, "r", encoding="utf-8") as fh:
            outcome = json.load(fh)
        key = (run["ratio"], run["seed"])
        outcomes_by_cell.setdefault(key, {})[run["strategy"]] = outcome
        for epoch, (acc_re, acc_ul) in enumerate(outcome["acc_trace"]):
            curve_rows.append(
                f"{run['strategy']},{run['ratio']:g},{run['seed']},{epoch},"
                f"{acc_re:.6g},{acc_ul:.6g}"
            )
            if run["strategy"] in _MIXED_FAMILY:
                mixed_rows.append(
                    f"{run['strategy']},{run['ratio']:g},{run['seed']},{epoch},"
                    f"{acc_re:.6g}"
                )

    for (ratio, seed), cell in sorted(outcomes_by_cell.items()):
        retrain = cell.get("retrain")
        if retrain is None:
            gaps.append(f"no retrain run for ratio={ratio:g} seed={seed}; "
                        "acceleration rows skipped")
            continue
        for strategy, outcome in sorted(cell.items()):
            if outcome["wall_time_s"] <= 0:
                gaps.append(f"zero wall time for {strategy} ratio={ratio:g} seed={seed}")
                continue
            accel = retrain["wall_time_s"] / outcome["wall_time_s"]
            accel_rows.append(f"{strategy},{ratio:g},{seed},{accel:.6g}")

    present_mixed = {row.split(",")[0] for row in mixed_rows}
    for name in _MIXED_FAMILY:
        if name not in present_mixed:
            gaps.append(f"no {name} runs for the strategy-comparison family")

    def _write_family(key, filename, header, rows):
        path = plots_dir / filename
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(row + "\n")
        written[key] = str(path)

    _write_family("accuracy_curves", "accuracy_curves.csv", CURVES_HEADER, curve_rows)
    _write_family("acceleration", "acceleration.csv", ACCEL_HEADER, accel_rows)
    if mixed_rows:
        _write_family("mixed_comparison", "mixed_comparison.csv", MIXED_HEADER, mixed_rows)

    degree_rows = []
    for entry in manifest.get("degree_reports", []):
        path = out / entry["report"]
        if not path.exists():
            gaps.append(f"missing degree report {entry['report']}")
            continue
        with open(path, "r", encoding="utf-8") as fh:
            report = json.load(fh)
        degree_rows.append(
            f"{entry['strategy']},{entry['ratio']:g},{entry['seed']},"
            f"{report['degree']:.6g},{int(report['constraint_satisfied'])}"
        )
    if degree_rows:
        _write_family("degree", "degree.csv", DEGREE_HEADER, degree_rows)
    else:
        gaps.append("no degree reports in manifest; degree CSV not emitted")

    gaps_path = plots_dir / "gaps.txt"
    with open(gaps_path, "w", encoding="utf-8") as fh:
        for line in gaps:
            fh.write(line + "\n")
    written["gaps"] = str(gaps_path)

    if render_figures:
        from . import plots as plots_mod

        written.update(plots_mod.render_all(plots_dir))
    return written
