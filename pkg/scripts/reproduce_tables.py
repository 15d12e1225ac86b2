#!/usr/bin/env python3
"""Rebuild the published evaluation tables from their raw counts.

Feeds the per-class (tested, correct) counts through the report
generator and prints the per-dataset tables, the cross-dataset summary,
and the recall column derived from the 4x4 confusion counts.  Everything
here is exact integer arithmetic plus the two-decimal half-away-from-zero
formatting rule; no model runs.
"""

from phydcm.metrics import (
    ConfusionMatrix,
    f1_string,
    recall,
    render_table,
    report_from_counts,
    summary_accuracy_string,
)

CLASSES = ["glioma", "meningioma", "pituitary", "notumor"]

DATASETS = {
    "BRISC2025": (CLASSES, [254, 306, 300, 140], [243, 246, 297, 137]),
    "Nickparvar": (CLASSES, [400, 400, 400, 400], [311, 315, 393, 400]),
    "Br35H (no-tumor only)": (["notumor"], [1500], [1500]),
}

CONFUSION_COUNTS = [
    [285, 12, 5, 4],
    [6, 274, 15, 7],
    [3, 6, 289, 5],
    [2, 0, 3, 300],
]


def main() -> None:
    for name, (labels, tested, correct) in DATASETS.items():
        print(f"== {name} ==")
        print(render_table(report_from_counts(labels, tested, correct)))

    print("== Cross-dataset summary ==")
    for name, (_, tested, correct) in DATASETS.items():
        acc = summary_accuracy_string(sum(correct), sum(tested))
        print(f"{name:24s} {acc}")
    print(f"{'F1 @ (P=0.90, R=0.91)':24s} {f1_string(0.90, 0.91)}")
    print()

    print("== Per-class recall from the 4x4 confusion counts ==")
    cm = ConfusionMatrix(CLASSES, CONFUSION_COUNTS)
    for label in CLASSES:
        print(f"{label:12s} {100.0 * recall(cm, label):.1f}%")


if __name__ == "__main__":
    main()
