"""Confusion-matrix accumulation, classification metrics, and report tables.

Percentages are formatted to two decimals with ties away from zero, which
reproduces the published per-class accuracy strings exactly from the raw
counts (e.g. 246/306 -> "80.39").  The cross-dataset summary collapses
exact-integer percentages ("100%" rather than "100.00%"), matching the
summary table's own style.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DirNotFound, UnknownClassDir
from .rounding import format_fixed, format_ratio_percent, ratio_percent_is_integer


class ConfusionMatrix:
    """k x k actual-vs-predicted counts; rows = actual, cols = predicted."""

    def __init__(self, labels: list[str], counts=None):
        self.labels = list(labels)
        k = len(self.labels)
        if counts is None:
            self.counts = np.zeros((k, k), dtype=np.int64)
        else:
            self.counts = np.asarray(counts, dtype=np.int64).copy()
            if self.counts.shape != (k, k):
                raise ValueError(f"counts shape {self.counts.shape} for {k} labels")
            if (self.counts < 0).any():
                raise ValueError("negative confusion counts")
        self._index = {label: i for i, label in enumerate(self.labels)}

    def add(self, actual: str, predicted: str, n: int = 1) -> None:
        self.counts[self._index[actual], self._index[predicted]] += n

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.labels != self.labels:
            raise ValueError("cannot merge matrices with different labels")
        return ConfusionMatrix(self.labels, self.counts + other.counts)

    def index(self, label) -> int:
        return label if isinstance(label, int) else self._index[label]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tp(self, label) -> int:
        i = self.index(label)
        return int(self.counts[i, i])

    def fn(self, label) -> int:
        i = self.index(label)
        return int(self.counts[i].sum()) - self.tp(i)

    def fp(self, label) -> int:
        i = self.index(label)
        return int(self.counts[:, i].sum()) - self.tp(i)

    def tn(self, label) -> int:
        i = self.index(label)
        return self.total - self.tp(i) - self.fp(i) - self.fn(i)


def accuracy(cm: ConfusionMatrix) -> float:
    """Overall proportion of correctly classified samples."""
    return float(np.trace(cm.counts)) / cm.total


def class_accuracy(cm: ConfusionMatrix, label) -> float:
    """One-vs-rest accuracy: (TP+TN)/(TP+TN+FP+FN)."""
    return (cm.tp(label) + cm.tn(label)) / cm.total


def precision(cm: ConfusionMatrix, label) -> float:
    denom = cm.tp(label) + cm.fp(label)
    return cm.tp(label) / denom if denom else 0.0


def recall(cm: ConfusionMatrix, label) -> float:
    denom = cm.tp(label) + cm.fn(label)
    return cm.tp(label) / denom if denom else 0.0


def f1(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both vanish."""
    return 2.0 * p * r / (p + r) if (p + r) > 0 else 0.0


def macro_metrics(cm: ConfusionMatrix) -> tuple[float, float, float]:
    ps = [precision(cm, c) for c in cm.labels]
    rs = [recall(cm, c) for c in cm.labels]
    fs = [f1(p, r) for p, r in zip(ps, rs)]
    k = len(cm.labels)
    return sum(ps) / k, sum(rs) / k, sum(fs) / k


def micro_precision_recall(cm: ConfusionMatrix) -> tuple[float, float]:
    tp = sum(cm.tp(c) for c in cm.labels)
    fp = sum(cm.fp(c) for c in cm.labels)
    fn = sum(cm.fn(c) for c in cm.labels)
    p = tp / (tp + fp) if (tp + fp) else 0.0
    r = tp / (tp + fn) if (tp + fn) else 0.0
    return p, r


@dataclass(frozen=True)
class ClassRow:
    label: str
    tested: int
    correct: int
    misclassified: int
    accuracy_pct: str


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ClassRow, ...]
    overall: ClassRow
    macro_precision: float | None = None
    macro_recall: float | None = None
    macro_f1: float | None = None
    micro_precision: float | None = None
    micro_recall: float | None = None

    def to_dict(self) -> dict:
        doc = {
            "per_class": [vars(r) for r in self.rows],
            "overall": vars(self.overall),
        }
        if self.macro_precision is not None:
            doc["macro"] = {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            }
            doc["micro"] = {"precision": self.micro_precision, "recall": self.micro_recall}
        return doc


def report_from_counts(labels: list[str], tested: list[int], correct: list[int]) -> EvalReport:
    """Report rows from per-class (tested, correct) counts alone."""
    if not (len(labels) == len(tested) == len(correct)):
        raise ValueError("labels/tested/correct lengths differ")
    rows = []
    for label, t, c in zip(labels, tested, correct):
        if c > t:
            raise ValueError(f"{label}: correct {c} exceeds tested {t}")
        rows.append(ClassRow(label, t, c, t - c, format_ratio_percent(c, t)))
    total_t = sum(tested)
    total_c = sum(correct)
    overall = ClassRow("Overall", total_t, total_c, total_t - total_c, format_ratio_percent(total_c, total_t))
    return EvalReport(rows=tuple(rows), overall=overall)


def report_from_confusion(cm: ConfusionMatrix) -> EvalReport:
    tested = [int(cm.counts[i].sum()) for i in range(len(cm.labels))]
    correct = [cm.tp(i) for i in range(len(cm.labels))]
    base = report_from_counts(cm.labels, tested, correct)
    mp, mr, mf = macro_metrics(cm)
    up, ur = micro_precision_recall(cm)
    return EvalReport(
        rows=base.rows,
        overall=base.overall,
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=mf,
        micro_precision=up,
        micro_recall=ur,
    )


def render_table(report: EvalReport) -> str:
    """Aligned text table: Class, Tested Images, Correct Predictions, Misclassified, Accuracy (%)."""
    header = ("Class", "Tested Images", "Correct Predictions", "Misclassified", "Accuracy (%)")
    body = [
        (r.label, str(r.tested), str(r.correct), str(r.misclassified), r.accuracy_pct)
        for r in list(report.rows) + [report.overall]
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def summary_accuracy_string(correct: int, tested: int) -> str:
    """Cross-dataset summary style: '92.30%', but exact integers as '100%'."""
    if ratio_percent_is_integer(correct, tested):
        return f"{100 * correct // tested}%"
    return f"{format_ratio_percent(correct, tested)}%"


def f1_string(p: float, r: float, decimals: int = 3) -> str:
    return format_fixed(f1(p, r), decimals)


def evaluate_dir(dataset_dir, registry, scan_type: str):
    """Predict every PGM/DICOM file under per-class folders.

    Returns (EvalReport, ConfusionMatrix); the folder name is the actual
    class, the model output the predicted one.
    """
    from .diagnose import predict

    root = Path(dataset_dir)
    if not root.is_dir():
        raise DirNotFound(f"dataset directory {root} does not exist")

    labels = registry.get(scan_type).classes
    cm = ConfusionMatrix(labels)
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if class_dir.name not in labels:
            raise UnknownClassDir(f"folder {class_dir.name!r} is not one of {labels}")
        for image_path in sorted(p for p in class_dir.iterdir() if p.is_file()):
            record = predict(image_path, scan_type, registry)
            cm.add(class_dir.name, record.predicted_class)
    return report_from_confusion(cm), cm
