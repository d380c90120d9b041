"""Weak supervision: specialize fine labels from description embeddings.

A classifier is trained on gold-labeled entities (single ``content`` segment,
plain cross-entropy) and used to assign fine types to aligned entities whose
KB entry carried no label or only a coarse one.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import classifier as clf
from .corpus import AlignmentRecord, LabelRecord, LabelSource
from .embedstore import EmbeddingSet
from .errors import SocialTyperError
from .evaluation import confusion, metrics
from .ontology import CoarseType, TypeSchema


class WeakLabelError(SocialTyperError):
    """Unusable gold set or targets."""


class TargetKind(enum.Enum):
    NO_LABEL = "no_label"
    COARSE_ONLY = "coarse_only"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class WeakTarget:
    """An aligned entity awaiting a weakly supervised fine label.

    ``coarse`` is the known coarse category and is required for
    ``coarse_only`` targets.
    """

    entity_id: str
    kind: TargetKind
    coarse: CoarseType | None = None

    def __post_init__(self) -> None:
        if self.kind is TargetKind.COARSE_ONLY and self.coarse is None:
            raise WeakLabelError(
                f"target {self.entity_id!r} is coarse_only but has no coarse type"
            )


@dataclass(frozen=True)
class WeakLabelConfig:
    train: clf.TrainConfig = clf.TrainConfig()
    hidden_dims: tuple[int, ...] = (50,)
    holdout_fraction: float = 0.01
    enforce_coarse: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise WeakLabelError("holdout_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class WeakLabelReport:
    """Outcome of one specialization run."""

    model: clf.MlpModel
    holdout_weighted_f1: float
    holdout_size: int
    assigned: dict[str, int] = field(default_factory=dict)
    skipped_no_embedding: int = 0
    skipped_no_candidate: int = 0

    def to_dict(self) -> dict:
        return {
            "holdout_weighted_f1": self.holdout_weighted_f1,
            "holdout_size": self.holdout_size,
            "assigned": dict(self.assigned),
            "skipped_no_embedding": self.skipped_no_embedding,
            "skipped_no_candidate": self.skipped_no_candidate,
        }


def derive_weak_targets(
    alignments: Sequence[AlignmentRecord], schema: TypeSchema
) -> list[WeakTarget]:
    """Weak-supervision targets among aligned entities.

    Entities without a DBpedia path become ``no_label`` targets; entities
    whose path leaf is not a schema fine type (too coarse or pruned) become
    ``coarse_only`` targets carrying the path's coarse category.
    """
    targets = []
    for rec in alignments:
        if rec.dbpedia_path is None:
            targets.append(WeakTarget(rec.entity_id, TargetKind.NO_LABEL))
        elif rec.dbpedia_path.leaf not in schema:
            targets.append(
                WeakTarget(
                    rec.entity_id,
                    TargetKind.COARSE_ONLY,
                    schema.coarse_of_path(rec.dbpedia_path),
                )
            )
    return targets


def _stratified_holdout(
    labels: Sequence[str], fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Seeded per-class split; the holdout takes round(fraction * n_c)
    examples of each class, preserving class proportions within one."""
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    rng = np.random.default_rng(seed)
    holdout: list[int] = []
    for label in sorted(by_class):
        members = by_class[label]
        take = int(np.floor(fraction * len(members) + 0.5))
        if take > 0:
            picked = rng.choice(len(members), size=take, replace=False)
            holdout.extend(members[i] for i in picked)
    holdout_set = set(holdout)
    train = [i for i in range(len(labels)) if i not in holdout_set]
    return train, sorted(holdout)


def specialize_labels(
    desc_embeddings: EmbeddingSet,
    gold: Sequence[LabelRecord],
    targets: Sequence[WeakTarget],
    schema: TypeSchema,
    config: WeakLabelConfig = WeakLabelConfig(),
) -> tuple[list[LabelRecord], WeakLabelReport]:
    """Train on gold description embeddings and label the targets.

    ``no_label`` targets get the argmax fine type with source
    ``weak_wikidata``; ``coarse_only`` targets get source
    ``weak_specialized`` and, when the argmax disagrees with the known
    coarse type, fall back to the argmax within that coarse class. Targets
    without an embedding are skipped and counted in the report.
    """
    if not gold:
        raise WeakLabelError("gold label set is empty")
    for rec in gold:
        if rec.entity_id not in desc_embeddings:
            raise WeakLabelError(
                f"gold entity {rec.entity_id!r} has no description embedding"
            )
        if rec.fine not in schema:
            raise WeakLabelError(f"gold label {rec.fine!r} is not a schema fine type")
    vocab = sorted({rec.fine for rec in gold})
    label_index = {name: i for i, name in enumerate(vocab)}
    xs = [desc_embeddings.vector(rec.entity_id) for rec in gold]
    ys = [label_index[rec.fine] for rec in gold]
    train_idx, holdout_idx = _stratified_holdout(
        [rec.fine for rec in gold], config.holdout_fraction, config.train.seed
    )
    if not train_idx:
        raise WeakLabelError("holdout fraction leaves no training examples")
    segmap = clf.make_segment_map([(clf.CONTENT_SEGMENT, desc_embeddings.dim)])
    model = clf.init_model(
        desc_embeddings.dim,
        config.hidden_dims,
        vocab,
        segmap,
        loss_weights=(0.0, 0.0, 1.0),
        seed=config.train.seed,
    )
    trained, _ = clf.train(
        model, [(xs[i], ys[i]) for i in train_idx], config.train
    )
    holdout_f1 = 0.0
    if holdout_idx:
        gold_rows = [gold[i] for i in holdout_idx]
        probs = np.stack([clf.forward(trained, xs[i]) for i in holdout_idx])
        preds = [
            LabelRecord(rec.entity_id, vocab[int(p.argmax())], LabelSource.PREDICTED)
            for rec, p in zip(gold_rows, probs)
        ]
        holdout_f1 = metrics(confusion(preds, gold_rows, vocab)).weighted_f1

    per_coarse: dict[CoarseType, list[int]] = {}
    for i, name in enumerate(vocab):
        per_coarse.setdefault(schema.coarse_of(name), []).append(i)

    assigned: dict[str, int] = {
        LabelSource.WEAK_WIKIDATA.value: 0,
        LabelSource.WEAK_SPECIALIZED.value: 0,
    }
    skipped_no_embedding = 0
    skipped_no_candidate = 0
    out: list[LabelRecord] = []
    for target in targets:
        if target.entity_id not in desc_embeddings:
            skipped_no_embedding += 1
            continue
        probs = clf.forward(trained, desc_embeddings.vector(target.entity_id))
        best = int(probs.argmax())
        if target.kind is TargetKind.NO_LABEL:
            source = LabelSource.WEAK_WIKIDATA
        else:
            source = LabelSource.WEAK_SPECIALIZED
            if config.enforce_coarse and schema.coarse_of(vocab[best]) is not target.coarse:
                candidates = per_coarse.get(target.coarse, [])
                if not candidates:
                    skipped_no_candidate += 1
                    continue
                best = candidates[int(probs[candidates].argmax())]
        out.append(
            LabelRecord(
                target.entity_id, vocab[best], source, confidence=float(probs[best])
            )
        )
        assigned[source.value] += 1
    report = WeakLabelReport(
        model=trained,
        holdout_weighted_f1=holdout_f1,
        holdout_size=len(holdout_idx),
        assigned=assigned,
        skipped_no_embedding=skipped_no_embedding,
        skipped_no_candidate=skipped_no_candidate,
    )
    return out, report
