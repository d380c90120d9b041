"""Classification metrics, coarse rollups, permissive accuracy, and
type-distribution reports."""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LabelRecord
from .errors import SocialTyperError
from .ontology import COARSE_ORDER, TypeSchema

MACRO_OVER_UNION = "union"
MACRO_OVER_GOLD = "gold"


class EvaluationError(SocialTyperError):
    """Mismatched prediction/gold sets or malformed matrices."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns are predicted labels."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.labels)
        if len(set(self.labels)) != n or n == 0:
            raise EvaluationError("labels must be non-empty and unique")
        if self.counts.shape != (n, n):
            raise EvaluationError(
                f"counts shape {self.counts.shape} does not match {n} labels"
            )
        if np.any(self.counts < 0):
            raise EvaluationError("counts must be non-negative")
        self.counts.setflags(write=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    per_class: tuple[ClassMetrics, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "per_class": [
                {
                    "label": c.label,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "support": c.support,
                }
                for c in self.per_class
            ],
        }


def _index_by_entity(
    records: Sequence[LabelRecord], kind: str
) -> dict[str, LabelRecord]:
    out: dict[str, LabelRecord] = {}
    for rec in records:
        if rec.entity_id in out:
            raise EvaluationError(
                f"entity {rec.entity_id!r} has more than one {kind} label"
            )
        out[rec.entity_id] = rec
    return out


def confusion(
    preds: Sequence[LabelRecord],
    gold: Sequence[LabelRecord],
    vocab: Sequence[str],
) -> ConfusionMatrix:
    """Count (gold, predicted) label pairs over the gold entity set.

    Every gold entity needs a prediction; labels must come from ``vocab``.
    """
    labels = tuple(vocab)
    index = {label: i for i, label in enumerate(labels)}
    if len(index) != len(labels):
        raise EvaluationError("vocab contains duplicates")
    pred_by_entity = _index_by_entity(preds, "predicted")
    gold_by_entity = _index_by_entity(gold, "gold")
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for entity_id, gold_rec in gold_by_entity.items():
        pred_rec = pred_by_entity.get(entity_id)
        if pred_rec is None:
            raise EvaluationError(f"entity {entity_id!r} has no prediction")
        if gold_rec.fine not in index:
            raise EvaluationError(f"gold label {gold_rec.fine!r} outside vocab")
        if pred_rec.fine not in index:
            raise EvaluationError(f"predicted label {pred_rec.fine!r} outside vocab")
        counts[index[gold_rec.fine], index[pred_rec.fine]] += 1
    return ConfusionMatrix(labels, counts)


def metrics(
    matrix: ConfusionMatrix, macro_over: str = MACRO_OVER_UNION
) -> MetricsReport:
    """Accuracy, macro/weighted F1, and per-class precision/recall/F1.

    Zero denominators yield 0. Macro-F1 averages over classes present in
    gold or predictions (``macro_over="union"``, the default) or in gold
    only (``macro_over="gold"``); either way zero-support classes in the
    average contribute an F1 of 0.
    """
    if matrix.total == 0:
        raise EvaluationError("empty confusion matrix")
    if macro_over not in (MACRO_OVER_UNION, MACRO_OVER_GOLD):
        raise EvaluationError(f"unknown macro_over mode {macro_over!r}")
    counts = matrix.counts
    n = matrix.total
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    per_class = []
    f1_present = []
    weighted = 0.0
    for i, label in enumerate(matrix.labels):
        tp = int(counts[i, i])
        support = int(row_sums[i])
        predicted = int(col_sums[i])
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        per_class.append(ClassMetrics(label, precision, recall, f1, support))
        weighted += (support / n) * f1
        present = support > 0 if macro_over == MACRO_OVER_GOLD else (
            support > 0 or predicted > 0
        )
        if present:
            f1_present.append(f1)
    macro = sum(f1_present) / len(f1_present) if f1_present else 0.0
    accuracy = float(np.trace(counts)) / n
    return MetricsReport(
        accuracy=accuracy,
        macro_f1=macro,
        weighted_f1=weighted,
        per_class=tuple(per_class),
    )


def _to_coarse(records: Sequence[LabelRecord], schema: TypeSchema) -> list[LabelRecord]:
    return [
        LabelRecord(rec.entity_id, schema.coarse_of(rec.fine).value, rec.source)
        for rec in records
    ]


def coarse_rollup(
    preds: Sequence[LabelRecord],
    gold: Sequence[LabelRecord],
    schema: TypeSchema,
    macro_over: str = MACRO_OVER_UNION,
) -> MetricsReport:
    """Metrics after mapping every fine label to its coarse type."""
    vocab = [c.value for c in COARSE_ORDER]
    return metrics(
        confusion(_to_coarse(preds, schema), _to_coarse(gold, schema), vocab),
        macro_over=macro_over,
    )


def permissive_accuracy(
    preds: Sequence[LabelRecord],
    primary: Sequence[LabelRecord],
    secondary: Sequence[LabelRecord] = (),
) -> float:
    """Ratio of entities whose prediction matches the primary label or any
    of the entity's secondary labels."""
    pred_by_entity = _index_by_entity(preds, "predicted")
    primary_by_entity = _index_by_entity(primary, "primary")
    if not primary_by_entity:
        raise EvaluationError("no primary labels to evaluate against")
    secondary_by_entity: dict[str, set[str]] = {}
    for rec in secondary:
        secondary_by_entity.setdefault(rec.entity_id, set()).add(rec.fine)
    hits = 0
    for entity_id, gold_rec in primary_by_entity.items():
        pred_rec = pred_by_entity.get(entity_id)
        if pred_rec is None:
            raise EvaluationError(f"entity {entity_id!r} has no prediction")
        if pred_rec.fine == gold_rec.fine or pred_rec.fine in secondary_by_entity.get(
            entity_id, ()
        ):
            hits += 1
    return hits / len(primary_by_entity)


@dataclass(frozen=True)
class DistributionRow:
    coarse: str
    fine: str
    ratio: float
    cumulative: float


def type_distribution(
    labels: Sequence[LabelRecord], schema: TypeSchema
) -> list[DistributionRow]:
    """Fine-type frequency table, descending by ratio with ties by name;
    cumulative ratios end at 1."""
    if not labels:
        raise EvaluationError("no labels to summarize")
    counts: dict[str, int] = {}
    for rec in labels:
        counts[rec.fine] = counts.get(rec.fine, 0) + 1
    total = len(labels)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    rows = []
    running = 0
    for fine, count in ordered:
        running += count
        rows.append(
            DistributionRow(
                coarse=schema.coarse_of(fine).value,
                fine=fine,
                ratio=count / total,
                cumulative=running / total,
            )
        )
    return rows


def write_report_json(report: MetricsReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def format_report_text(report: MetricsReport, extras: Mapping[str, float] | None = None) -> str:
    """Aligned-column plain-text rendering of a metrics report."""
    width = max([len("label"), *(len(c.label) for c in report.per_class)])
    lines = [
        f"accuracy     {report.accuracy:.4f}",
        f"macro_f1     {report.macro_f1:.4f}",
        f"weighted_f1  {report.weighted_f1:.4f}",
    ]
    for name, value in (extras or {}).items():
        lines.append(f"{name:<12} {value:.4f}")
    lines.append("")
    lines.append(
        f"{'label':<{width}}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>7}"
    )
    for c in report.per_class:
        lines.append(
            f"{c.label:<{width}}  {c.precision:>9.4f}  {c.recall:>9.4f}  "
            f"{c.f1:>9.4f}  {c.support:>7d}"
        )
    return "\n".join(lines) + "\n"
