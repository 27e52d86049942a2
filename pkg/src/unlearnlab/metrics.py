"""Scalar evaluation metrics over (source model, unlearned model, splits)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .unlearn import js_divergence_rows

CSV_HEADER = "strategy,ratio,acc_ul,acc_re,fr,mrr,similarity,unlearn_time_s,acceleration"


class UndefinedMetricError(ValueError):
    """A metric's denominator is zero or a required input is missing."""


def accuracy(net: nn.Network, X, y) -> float:
    """Fraction of argmax predictions matching labels; argmax ties go to the
    lowest class index."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("accuracy of an empty subset is undefined")
    y = np.asarray(y)
    probs = nn.forward(net, X)
    return float((probs.argmax(axis=1) == y).mean())


def forgetting_rate(acc_before: float, acc_after: float) -> float:
    """Relative accuracy drop on the unlearning data; negative if it rose."""
    if acc_before <= 0:
        raise UndefinedMetricError("forgetting rate undefined for zero base accuracy")
    return (acc_before - acc_after) / acc_before


def memory_retention_rate(acc_re_before: float, acc_re_after: float) -> float:
    """Post/pre accuracy ratio on the remaining data; may exceed 1."""
    if acc_re_before <= 0:
        raise UndefinedMetricError("retention rate undefined for zero base accuracy")
    return acc_re_after / acc_re_before


def similarity(reference_net: nn.Network, unlearned_net: nn.Network, X_ul) -> float:
    """One minus the mean output divergence over the unlearning samples."""
    X_ul = np.asarray(X_ul, dtype=np.float64)
    if X_ul.shape[0] == 0:
        raise ValueError("similarity over an empty subset is undefined")
    P = nn.forward(reference_net, X_ul)
    Q = nn.forward(unlearned_net, X_ul)
    return float(1.0 - js_divergence_rows(P, Q).mean())


def acceleration_ratio(unlearn_time_s: float, retrain_time_s: float) -> float:
    if unlearn_time_s <= 0:
        raise UndefinedMetricError("acceleration undefined for zero unlearn time")
    return retrain_time_s / unlearn_time_s


def acceleration(outcomes, retrain_outcome) -> dict:
    """Per-strategy speedup relative to the retraining run."""
    if retrain_outcome is None:
        raise UndefinedMetricError("acceleration requires a retraining outcome")
    return {
        out.strategy: acceleration_ratio(out.wall_time_s, retrain_outcome.wall_time_s)
        for out in outcomes
    }


@dataclass
class MetricReport:
    strategy: str
    ratio: float
    acc_ul_before: float
    acc_ul_after: float
    acc_re_before: float
    acc_re_after: float
    forgetting_rate: float
    memory_retention_rate: float
    similarity: float
    unlearn_time_s: float
    retrain_time_s: float = None
    acceleration: float = None
    similarity_reference: str = "source"  # 'retrain' when a retrain run exists

    def csv_row(self) -> str:
        accel = "" if self.acceleration is None else _sig(self.acceleration)
        return ",".join([
            self.strategy,
            _sig(self.ratio),
            _sig(self.acc_ul_after),
            _sig(self.acc_re_after),
            _sig(self.forgetting_rate),
            _sig(self.memory_retention_rate),
            _sig(self.similarity),
            _sig(self.unlearn_time_s),
            accel,
        ])


def _sig(x: float) -> str:
    return f"{x:.6g}"


def build_metric_report(strategy, ratio, acc_ul_before, acc_ul_after,
                        acc_re_before, acc_re_after, model_similarity,
                        unlearn_time_s, retrain_time_s=None,
                        similarity_reference="source") -> MetricReport:
    accel = None
    if retrain_time_s is not None:
        accel = acceleration_ratio(unlearn_time_s, retrain_time_s)
    return MetricReport(
        strategy=strategy,
        ratio=ratio,
        acc_ul_before=acc_ul_before,
        acc_ul_after=acc_ul_after,
        acc_re_before=acc_re_before,
        acc_re_after=acc_re_after,
        forgetting_rate=forgetting_rate(acc_ul_before, acc_ul_after),
        memory_retention_rate=memory_retention_rate(acc_re_before, acc_re_after),
        similarity=model_similarity,
        unlearn_time_s=unlearn_time_s,
        retrain_time_s=retrain_time_s,
        acceleration=accel,
        similarity_reference=similarity_reference,
    )


def write_metrics_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for report in reports:
            fh.write(report.csv_row() + "\n")
