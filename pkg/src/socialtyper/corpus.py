"""Social-KB corpus loading, KB alignment joins, and label records.

Alignment is a pure offline join: entity accounts are matched against a
reverse index extracted from a Wikidata dump (twitter id -> Qid) and, via
the Qid, against DBpedia type paths. Matched entities with a sufficiently
specific path become gold-labeled training examples.
"""

from __future__ import annotations

import enum
import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import SocialTyperError
from .ontology import OntologyError, TypePath, TypeSchema

logger = logging.getLogger(__name__)


class CorpusError(SocialTyperError):
    """Malformed corpus file or inconsistent record set."""


class AmbiguousIndexError(CorpusError):
    """One twitter id maps to more than one Qid in the reverse index."""


class LabelSource(enum.Enum):
    ALIGNED_DBPEDIA = "aligned_dbpedia"
    WEAK_WIKIDATA = "weak_wikidata"
    WEAK_SPECIALIZED = "weak_specialized"
    MANUAL_PRIMARY = "manual_primary"
    MANUAL_SECONDARY = "manual_secondary"
    PREDICTED = "predicted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EntityRecord:
    """One popular account in the social KB."""

    id: str
    handle: str
    followers: int
    description: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("entity id must be non-empty")
        if self.followers < 0:
            raise CorpusError(f"entity {self.id!r}: negative follower count")


@dataclass(frozen=True)
class AlignmentRecord:
    """Join result for one entity: its Qid and, when verified, a DBpedia path."""

    entity_id: str
    qid: str | None = None
    wikidata_description: str | None = None
    dbpedia_path: TypePath | None = None

    def __post_init__(self) -> None:
        if self.dbpedia_path is not None and self.qid is None:
            raise CorpusError(
                f"entity {self.entity_id!r}: DBpedia path without a Qid"
            )


@dataclass(frozen=True)
class LabelRecord:
    """A fine-type assignment for one entity with its provenance."""

    entity_id: str
    fine: str
    source: LabelSource
    confidence: float | None = None


def load_entities(path: str | Path) -> list[EntityRecord]:
    """Load entities.jsonl; one JSON object per line, order preserved."""
    records: list[EntityRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
            if not isinstance(doc, dict):
                raise CorpusError(f"{path}: line {lineno}: expected a JSON object")
            record = EntityRecord(
                id=_expect_str(doc, "id", lineno),
                handle=_expect_str(doc, "handle", lineno),
                followers=_expect_int(doc, "followers", lineno),
                description=_optional_str(doc, "description", lineno),
            )
            if record.id in seen:
                raise CorpusError(f"{path}: duplicate entity id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    return records


def _expect_str(doc: dict, key: str, lineno: int) -> str:
    value = doc.get(key)
    if not isinstance(value, str):
        raise CorpusError(f"line {lineno}: field {key!r} must be a string")
    return value


def _expect_int(doc: dict, key: str, lineno: int) -> int:
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise CorpusError(f"line {lineno}: field {key!r} must be an integer")
    return value


def _optional_str(doc: dict, key: str, lineno: int) -> str | None:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise CorpusError(f"line {lineno}: field {key!r} must be a string")
    return value


def build_wikidata_index(
    rows: Iterable[tuple[str, str, str]],
) -> dict[str, tuple[str, str]]:
    """Build the reverse index twitter_id -> (qid, description) from
    (qid, twitter_id, description) rows.

    A twitter id listed under two different Qids is ambiguous and aborts;
    exact duplicate rows are tolerated.
    """
    index: dict[str, tuple[str, str]] = {}
    for qid, twitter_id, description in rows:
        if twitter_id in index and index[twitter_id][0] != qid:
            raise AmbiguousIndexError(
                f"twitter id {twitter_id!r} maps to both "
                f"{index[twitter_id][0]!r} and {qid!r}"
            )
        index[twitter_id] = (qid, description)
    return index


def read_wikidata_index(path: str | Path) -> dict[str, tuple[str, str]]:
    """Read wikidata_index.tsv (qid \\t twitter_id \\t description)."""

    def rows() -> Iterable[tuple[str, str, str]]:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t", 2)
                if len(parts) < 2 or not parts[0] or not parts[1]:
                    raise CorpusError(
                        f"{path}: line {lineno}: expected qid\\ttwitter_id\\tdescription"
                    )
                description = parts[2] if len(parts) == 3 else ""
                yield parts[0], parts[1], description

    return build_wikidata_index(rows())


def read_dbpedia_types(path: str | Path) -> dict[str, TypePath]:
    """Read dbpedia_types.tsv (qid \\t path). The first path per Qid wins;
    later duplicates are logged and ignored."""
    mapping: dict[str, TypePath] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusError(f"{path}: line {lineno}: expected qid\\tpath")
            qid, text = parts
            try:
                parsed = TypePath(tuple(text.split("/")))
            except OntologyError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None
            if qid in mapping:
                logger.warning(
                    "%s: line %d: duplicate path for %s; keeping the first",
                    path,
                    lineno,
                    qid,
                )
                continue
            mapping[qid] = parsed
    return mapping


def align_wikidata(
    entities: Sequence[EntityRecord],
    index: Mapping[str, tuple[str, str]],
) -> list[AlignmentRecord]:
    """Exact join on account id against the reverse index, input order kept."""
    out = []
    for entity in entities:
        hit = index.get(entity.id)
        if hit is None:
            continue
        qid, description = hit
        out.append(
            AlignmentRecord(
                entity_id=entity.id,
                qid=qid,
                wikidata_description=description or None,
            )
        )
    return out


def attach_dbpedia(
    alignments: Sequence[AlignmentRecord],
    dbpedia: Mapping[str, TypePath],
) -> list[AlignmentRecord]:
    """Attach the DBpedia path to records whose Qid appears in the dump map."""
    out = []
    for rec in alignments:
        path = dbpedia.get(rec.qid) if rec.qid is not None else None
        if path is None:
            out.append(rec)
        else:
            out.append(
                AlignmentRecord(
                    entity_id=rec.entity_id,
                    qid=rec.qid,
                    wikidata_description=rec.wikidata_description,
                    dbpedia_path=path,
                )
            )
    return out


def build_gold_labels(
    alignments: Sequence[AlignmentRecord],
    schema: TypeSchema,
) -> list[LabelRecord]:
    """Gold labels for alignments whose path leaf is a schema fine type.

    Paths above fine granularity (e.g. a bare coarse category) or with a
    pruned leaf produce no gold label; those entities remain weak-supervision
    targets.
    """
    out = []
    for rec in alignments:
        if rec.dbpedia_path is None:
            continue
        leaf = rec.dbpedia_path.leaf
        if leaf in schema:
            out.append(
                LabelRecord(rec.entity_id, leaf, LabelSource.ALIGNED_DBPEDIA)
            )
    return out


_WEAK_SOURCES = (LabelSource.WEAK_WIKIDATA, LabelSource.WEAK_SPECIALIZED)


def merge_label_sources(
    gold: Sequence[LabelRecord],
    weak: Sequence[LabelRecord],
) -> tuple[list[LabelRecord], dict[str, int]]:
    """Merge gold and weak labels into one training label per entity.

    Gold wins over weak; conflicting gold labels for one entity abort. The
    returned counts report how many labels each source contributed.
    """
    by_entity: dict[str, LabelRecord] = {}
    for rec in gold:
        if rec.source is not LabelSource.ALIGNED_DBPEDIA:
            raise CorpusError(
                f"gold label for {rec.entity_id!r} has source {rec.source}"
            )
        if rec.entity_id in by_entity:
            raise CorpusError(
                f"conflicting gold labels for entity {rec.entity_id!r}"
            )
        by_entity[rec.entity_id] = rec
    merged = list(gold)
    for rec in weak:
        if rec.source not in _WEAK_SOURCES:
            raise CorpusError(
                f"weak label for {rec.entity_id!r} has source {rec.source}"
            )
        if rec.entity_id in by_entity:
            continue
        by_entity[rec.entity_id] = rec
        merged.append(rec)
    counts: dict[str, int] = {}
    for rec in merged:
        counts[rec.source.value] = counts.get(rec.source.value, 0) + 1
    counts["total"] = len(merged)
    return merged, counts


def write_labels(labels: Sequence[LabelRecord], path: str | Path) -> None:
    """Write labels.tsv (entity_id \\t fine \\t source [\\t confidence])."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in labels:
            row = f"{rec.entity_id}\t{rec.fine}\t{rec.source.value}"
            if rec.confidence is not None:
                row += f"\t{rec.confidence!r}"
            fh.write(row + "\n")


def read_labels(path: str | Path) -> list[LabelRecord]:
    """Read labels.tsv; a fourth confidence column is accepted."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4) or not all(parts[:3]):
                raise CorpusError(
                    f"{path}: line {lineno}: expected entity_id\\tfine\\tsource"
                )
            try:
                source = LabelSource(parts[2])
            except ValueError:
                raise CorpusError(
                    f"{path}: line {lineno}: unknown label source {parts[2]!r}"
                ) from None
            confidence = None
            if len(parts) == 4:
                try:
                    confidence = float(parts[3])
                except ValueError:
                    raise CorpusError(
                        f"{path}: line {lineno}: bad confidence {parts[3]!r}"
                    ) from None
            out.append(LabelRecord(parts[0], parts[1], source, confidence))
    return out


def _clean_field(text: str | None) -> str:
    if text is None:
        return ""
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def write_alignments(alignments: Sequence[AlignmentRecord], path: str | Path) -> None:
    """Write alignments.tsv (entity_id \\t qid \\t description \\t path);
    missing fields are empty strings, tabs inside text are flattened."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in alignments:
            fh.write(
                "\t".join(
                    (
                        rec.entity_id,
                        rec.qid or "",
                        _clean_field(rec.wikidata_description),
                        rec.dbpedia_path.text() if rec.dbpedia_path else "",
                    )
                )
                + "\n"
            )


def read_alignments(path: str | Path) -> list[AlignmentRecord]:
    """Read alignments.tsv written by :func:`write_alignments`."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4 or not parts[0]:
                raise CorpusError(
                    f"{path}: line {lineno}: expected 4 tab-separated fields"
                )
            entity_id, qid, description, path_text = parts
            try:
                parsed = (
                    TypePath(tuple(path_text.split("/"))) if path_text else None
                )
            except OntologyError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None
            out.append(
                AlignmentRecord(
                    entity_id=entity_id,
                    qid=qid or None,
                    wikidata_description=description or None,
                    dbpedia_path=parsed,
                )
            )
    return out


@dataclass(frozen=True)
class CoverageBin:
    """Alignment coverage of one popularity bin."""

    bin_index: int
    size: int
    wikidata_aligned: int
    dbpedia_aligned: int

    @property
    def wikidata_ratio(self) -> float:
        return self.wikidata_aligned / self.size

    @property
    def dbpedia_ratio(self) -> float:
        return self.dbpedia_aligned / self.size


def coverage_by_popularity(
    entities: Sequence[EntityRecord],
    alignments: Sequence[AlignmentRecord],
    bin_size: int = 10_000,
) -> list[CoverageBin]:
    """Alignment ratios per bin of ``bin_size`` entities ordered by
    descending follower count (ties broken by ascending id); bin 0 holds the
    most popular accounts."""
    if bin_size < 1:
        raise CorpusError("bin_size must be >= 1")
    wikidata_ids = {rec.entity_id for rec in alignments if rec.qid is not None}
    dbpedia_ids = {
        rec.entity_id for rec in alignments if rec.dbpedia_path is not None
    }
    ordered = sorted(entities, key=lambda e: (-e.followers, e.id))
    bins = []
    for start in range(0, len(ordered), bin_size):
        chunk = ordered[start : start + bin_size]
        bins.append(
            CoverageBin(
                bin_index=start // bin_size,
                size=len(chunk),
                wikidata_aligned=sum(1 for e in chunk if e.id in wikidata_ids),
                dbpedia_aligned=sum(1 for e in chunk if e.id in dbpedia_ids),
            )
        )
    return bins
