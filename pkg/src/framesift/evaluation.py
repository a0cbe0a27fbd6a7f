"""Classification metrics, key-frame overlap analysis, and fold splitting.

Classes are the full {time-of-day, lighting, scene} triples. Conventions:
0/0 precision or recall is 0; macro averages run over the classes present
in the ground truth only (classes that appear only in predictions
contribute columns to the confusion matrix and rows to the per-class table
but are excluded from macro/weighted averages), so cross-dataset class-set
mismatches evaluate deterministically.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from typing import Sequence

from framesift.model import SceneTag


@dataclass(frozen=True)
class ClassMetrics:
    tag: SceneTag
    support: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate and per-class classification metrics plus the confusion matrix.

    ``classes`` orders the axes of ``confusion``: rows are truth classes,
    columns predicted classes; row sums equal class supports.
    """

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: tuple[ClassMetrics, ...]
    classes: tuple[SceneTag, ...]
    confusion: tuple[tuple[int, ...], ...]

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "per_class": [
                {
                    "class": m.tag.label,
                    "codes": list(m.tag.codes),
                    "support": m.support,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                }
                for m in self.per_class
            ],
            "classes": [c.label for c in self.classes],
            "confusion": [list(row) for row in self.confusion],
        }

    def to_text(self) -> str:
        lines = [
            f"accuracy          {self.accuracy:.4f}",
            f"macro    P/R/F1   {self.macro_precision:.4f} {self.macro_recall:.4f} {self.macro_f1:.4f}",
            f"weighted P/R/F1   {self.weighted_precision:.4f} {self.weighted_recall:.4f} {self.weighted_f1:.4f}",
            "",
            f"{'class':24s} {'support':>7s} {'prec':>7s} {'recall':>7s} {'f1':>7s}",
        ]
        for m in self.per_class:
            lines.append(
                f"{m.tag.label:24s} {m.support:7d} {m.precision:7.4f} {m.recall:7.4f} {m.f1:7.4f}"
            )
        return "\n".join(lines) + "\n"

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_confusion_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["truth\\predicted"] + [c.label for c in self.classes])
            for tag, row in zip(self.classes, self.confusion):
                writer.writerow([tag.label] + list(row))


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def score(predicted: Sequence[SceneTag], truth: Sequence[SceneTag]) -> MetricsReport:
    """Score predictions against ground truth over composite classes.

    Accuracy is the exact-triple match fraction; weighted averages weight
    per-class metrics by truth support (weighted recall therefore equals
    accuracy up to rounding).
    """
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths"
        )
    if not truth:
        raise ValueError("cannot score an empty prediction set")

    classes = sorted(set(predicted) | set(truth))
    index = {tag: i for i, tag in enumerate(classes)}
    n_classes = len(classes)
    confusion = [[0] * n_classes for _ in range(n_classes)]
    for pred, true in zip(predicted, truth):
        confusion[index[true]][index[pred]] += 1

    per_class = []
    for i, tag in enumerate(classes):
        support = sum(confusion[i])
        true_positive = confusion[i][i]
        predicted_count = sum(confusion[r][i] for r in range(n_classes))
        precision = _safe_div(true_positive, predicted_count)
        recall = _safe_div(true_positive, support)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class.append(
            ClassMetrics(tag=tag, support=support, precision=precision, recall=recall, f1=f1)
        )

    truth_classes = [m for m in per_class if m.support > 0]
    n_truth = len(truth_classes)
    total = len(truth)
    macro_precision = sum(m.precision for m in truth_classes) / n_truth
    macro_recall = sum(m.recall for m in truth_classes) / n_truth
    macro_f1 = sum(m.f1 for m in truth_classes) / n_truth
    weighted_precision = sum(m.precision * m.support for m in truth_classes) / total
    weighted_recall = sum(m.recall * m.support for m in truth_classes) / total
    weighted_f1 = sum(m.f1 * m.support for m in truth_classes) / total
    accuracy = sum(p == t for p, t in zip(predicted, truth)) / total

    return MetricsReport(
        accuracy=accuracy,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
        weighted_precision=weighted_precision,
        weighted_recall=weighted_recall,
        weighted_f1=weighted_f1,
        per_class=tuple(per_class),
        classes=tuple(classes),
        confusion=tuple(tuple(row) for row in confusion),
    )


@dataclass(frozen=True)
class OverlapReport:
    count_a: int
    count_b: int
    count_intersection: int
    fraction_a: float
    fraction_b: float
    fraction_intersection: float

    def to_json_dict(self) -> dict:
        return {
            "count_a": self.count_a,
            "count_b": self.count_b,
            "count_intersection": self.count_intersection,
            "percent_a": self.fraction_a,
            "percent_b": self.fraction_b,
            "percent_intersection": self.fraction_intersection,
        }


def keyframe_overlap(a, b, total: int) -> OverlapReport:
    """Set overlap of two key-frame lists, as counts and percentages of total.

    Frames are identified by (sequence_id, frame_index); duplicates within
    a list collapse.
    """
    if total <= 0:
        raise ValueError(f"total must be positive, got {total}")
    keys_a = {f.key for f in a}
    keys_b = {f.key for f in b}
    common = keys_a & keys_b
    return OverlapReport(
        count_a=len(keys_a),
        count_b=len(keys_b),
        count_intersection=len(common),
        fraction_a=100.0 * len(keys_a) / total,
        fraction_b=100.0 * len(keys_b) / total,
        fraction_intersection=100.0 * len(common) / total,
    )


def kfold_split(sequences: Sequence, k: int, seed: int = 0) -> list[tuple[list, list]]:
    """Partition sequences into k (train, validation) folds.

    Splitting is by whole sequence, never by frame, to avoid temporal
    leakage. Folds are disjoint, cover the input, differ in size by at
    most one and are deterministic for a given seed.
    """
    sequences = list(sequences)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if len(sequences) < k:
        raise ValueError(
            f"cannot form {k} folds from {len(sequences)} sequences"
        )
    order = list(range(len(sequences)))
    random.Random(seed).shuffle(order)
    folds: list[list] = [[] for _ in range(k)]
    for position, seq_index in enumerate(order):
        folds[position % k].append(sequences[seq_index])
    splits = []
    for i in range(k):
        validation = folds[i]
        training = [s for j, fold in enumerate(folds) if j != i for s in fold]
        splits.append((training, validation))
    return splits
