"""Render the emitted plot-data CSVs to PNG figures next to them."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _read_rows(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path: Path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_accuracy_curves(csv_path: Path, png_path: Path) -> str:
    rows = _read_rows(csv_path)
    ratios = sorted({float(r["ratio"]) for r in rows})
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, max(len(ratios), 1), sharey=True,
                                 figsize=(3.2 * max(len(ratios), 1), 3.2))
        if len(ratios) <= 1:
            axes = [axes]
        for ax, ratio in zip(axes, ratios):
            series = defaultdict(list)
            for r in rows:
                if float(r["ratio"]) != ratio:
                    continue
                key = (r["strategy"], r["seed"])
                series[key].append((int(r["epoch"]), float(r["acc_re"]), float(r["acc_ul"])))
            seen = set()
            for (strategy, _seed), pts in sorted(series.items()):
                pts.sort()
                epochs = [p[0] for p in pts]
                label_re = f"{strategy} remaining" if strategy not in seen else None
                label_ul = f"{strategy} unlearning" if strategy not in seen else None
                seen.add(strategy)
                ax.plot(epochs, [p[1] for p in pts], "-", alpha=0.7, label=label_re)
                ax.plot(epochs, [p[2] for p in pts], "--", alpha=0.7, label=label_ul)
            ax.set_title(f"ratio {ratio:g}")
            ax.set_xlabel("epoch")
        axes[0].set_ylabel("accuracy")
        axes[0].legend(loc="lower right")
    return _save(fig, png_path)


def _grouped_bars(rows, value_key, ylabel, png_path: Path) -> str:
    groups = defaultdict(list)
    for r in rows:
        groups[(r["strategy"], float(r["ratio"]))].append(float(r[value_key]))
    strategies = sorted({k[0] for k in groups})
    ratios = sorted({k[1] for k in groups})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        width = 0.8 / max(len(strategies), 1)
        for si, strategy in enumerate(strategies):
            xs, ys = [], []
            for ri, ratio in enumerate(ratios):
                vals = groups.get((strategy, ratio))
                if not vals:
                    continue
                xs.append(ri + si * width)
                ys.append(sum(vals) / len(vals))
            ax.bar(xs, ys, width=width, label=strategy)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(ratios))])
        ax.set_xticklabels([f"{r:g}" for r in ratios])
        ax.set_xlabel("unlearning ratio")
        ax.set_ylabel(ylabel)
        ax.legend()
    return _save(fig, png_path)


def render_acceleration(csv_path: Path, png_path: Path) -> str:
    return _grouped_bars(_read_rows(csv_path), "acceleration",
                         "speedup vs retrain", png_path)


def render_degree(csv_path: Path, png_path: Path) -> str:
    return _grouped_bars(_read_rows(csv_path), "degree",
                         "unlearning degree", png_path)


def render_mixed_comparison(csv_path: Path, png_path: Path) -> str:
    rows = _read_rows(csv_path)
    ratios = sorted({float(r["ratio"]) for r in rows})
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, max(len(ratios), 1), sharey=True,
                                 figsize=(3.2 * max(len(ratios), 1), 3.2))
        if len(ratios) <= 1:
            axes = [axes]
        for ax, ratio in zip(axes, ratios):
            series = defaultdict(list)
            for r in rows:
                if float(r["ratio"]) != ratio:
                    continue
                series[(r["strategy"], r["seed"])].append(
                    (int(r["epoch"]), float(r["acc_re"]))
                )
            seen = set()
            for (strategy, _seed), pts in sorted(series.items()):
                pts.sort()
                label = strategy if strategy not in seen else None
                seen.add(strategy)
                ax.plot([p[0] for p in pts], [p[1] for p in pts], alpha=0.7, label=label)
            ax.set_title(f"ratio {ratio:g}")
            ax.set_xlabel("epoch")
        axes[0].set_ylabel("remaining-data accuracy")
        axes[0].legend(loc="lower right")
    return _save(fig, png_path)


_RENDERERS = {
    "accuracy_curves": render_accuracy_curves,
    "acceleration": render_acceleration,
    "mixed_comparison": render_mixed_comparison,
    "degree": render_degree,
}


def render_all(plots_dir) -> dict:
    """Render a PNG next to every plot-data CSV that exists."""
    plots_dir = Path(plots_dir)
    written = {}
    for name, renderer in _RENDERERS.items():
        csv_path = plots_dir / f"{name}.csv"
        if not csv_path.exists():
            continue
        png_path = plots_dir / f"{name}.png"
        written[f"{name}_png"] = renderer(csv_path, png_path)
    return written
