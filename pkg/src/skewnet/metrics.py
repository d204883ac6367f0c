"""Confusion matrices, per-class precision/recall/F1, and report rendering."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError

REPORT_FORMAT = "skewnet-metrics/1"


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """``cm[t, p]`` counts instances of true class ``t`` predicted as ``p``."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataError("y_true and y_pred must be equal-length vectors")
    for y in (y_true, y_pred):
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise DataError(f"class index outside [0, {n_classes})")
    cm = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return cm.reshape(n_classes, n_classes)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass
class MetricsReport:
    class_names: list[str]
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float

    @property
    def micro_precision(self) -> float:
        total = self.confusion.sum(axis=0).sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def micro_recall(self) -> float:
        total = self.confusion.sum(axis=1).sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    def f1_of(self, name: str) -> float:
        return float(self.f1[self.class_names.index(name)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricsReport):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and np.array_equal(self.confusion, other.confusion)
            and np.array_equal(self.precision, other.precision)
            and np.array_equal(self.recall, other.recall)
            and np.array_equal(self.f1, other.f1)
            and self.accuracy == other.accuracy
        )


def per_class_metrics(cm: np.ndarray, class_names: Sequence[str] | None = None) -> MetricsReport:
    """Precision/recall/F1 per class with the convention 0/0 = 0."""
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] == 0:
        raise DataError("confusion matrix must be square and non-empty")
    if (cm < 0).any():
        raise DataError("confusion counts must be non-negative")
    names = list(class_names) if class_names is not None else [str(i) for i in range(cm.shape[0])]
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1).astype(np.float64)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, actual)
    # harmonic mean of P and R, as one rounding: 2tp / (2tp + fp + fn)
    f1 = _safe_div(2.0 * tp, predicted + actual)
    total = cm.sum()
    accuracy = float(tp.sum() / total) if total else 0.0
    return MetricsReport(names, cm, precision, recall, f1, accuracy)


def evaluate_predictions(y_true, y_pred, class_names: Sequence[str]) -> MetricsReport:
    return per_class_metrics(confusion(y_true, y_pred, len(class_names)), class_names)


def emit_report(report: MetricsReport, format: str = "table") -> str:
    """Render as an aligned table (2 decimals) or the machine key-value format."""
    if format in ("table", "aligned-table"):
        return _table(report)
    if format in ("machine", "machine-readable"):
        return _machine(report)
    raise ValueError(f"unknown report format {format!r}")


def _table(report: MetricsReport) -> str:
    width = max([len("Class")] + [len(n) for n in report.class_names])
    lines = [f"{'Class':<{width}}   Prc  Recall    F1"]
    for i, name in enumerate(report.class_names):
        lines.append(
            f"{name:<{width}}  {report.precision[i]:4.2f}    {report.recall[i]:4.2f}  {report.f1[i]:4.2f}"
        )
    lines.append(f"accuracy {report.accuracy:.4f}")
    return "\n".join(lines) + "\n"


def _machine(report: MetricsReport) -> str:
    lines = [f"format = {REPORT_FORMAT}", f"n_classes = {len(report.class_names)}"]
    for i, name in enumerate(report.class_names):
        lines.append(f"class.{i}.name = {name}")
        lines.append(f"class.{i}.precision = {float(report.precision[i])!r}")
        lines.append(f"class.{i}.recall = {float(report.recall[i])!r}")
        lines.append(f"class.{i}.f1 = {float(report.f1[i])!r}")
    lines.append(f"accuracy = {report.accuracy!r}")
    for i, row in enumerate(report.confusion):
        lines.append(f"matrix.{i} = " + " ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> MetricsReport:
    """Inverse of the machine format."""
    kv: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise DataError(f"malformed report line: {line!r}")
        kv[key] = value
    if kv.get("format") != REPORT_FORMAT:
        raise DataError(f"not a {REPORT_FORMAT} report")
    n = int(kv["n_classes"])
    names = [kv[f"class.{i}.name"] for i in range(n)]
    get = lambda field: np.array([float(kv[f"class.{i}.{field}"]) for i in range(n)])  # noqa: E731
    cm = np.array([[int(v) for v in kv[f"matrix.{i}"].split()] for i in range(n)], dtype=np.int64)
    return MetricsReport(names, cm, get("precision"), get("recall"), get("f1"), float(kv["accuracy"]))
