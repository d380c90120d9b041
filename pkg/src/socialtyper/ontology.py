"""Hierarchical type paths and induction of the fine/coarse labeling schema.

Type paths are root-to-leaf chains like
``Thing/Species/Eukaryote/Animal/Person/Artist/MusicalArtist``. The schema
keeps the leaf names of sufficiently frequent, sufficiently deep paths as
fine types and assigns each one of five coarse categories.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SocialTyperError

SEPARATOR = "/"

DEFAULT_DEPTH_CUTOFF = 3
DEFAULT_MIN_COUNT = 5


class OntologyError(SocialTyperError):
    """Malformed path text or inconsistent schema input."""


class SchemaConflictError(OntologyError):
    """The same leaf name maps to two different coarse types."""


class UnknownFineTypeError(OntologyError):
    """Lookup of a fine type that is not part of the schema."""


class CoarseType(enum.Enum):
    """Closed set of five top-level categories."""

    PERSON = "Person"
    ORGANISATION = "Organisation"
    PLACE = "Place"
    WORK = "Work"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


#: Canonical ordering used for coarse-level reports.
COARSE_ORDER = (
    CoarseType.PERSON,
    CoarseType.ORGANISATION,
    CoarseType.PLACE,
    CoarseType.WORK,
    CoarseType.OTHER,
)

#: Root-segment mapping used when the caller does not supply one.
DEFAULT_COARSE_ROOTS: Mapping[str, CoarseType] = {
    "Person": CoarseType.PERSON,
    "Organisation": CoarseType.ORGANISATION,
    "Place": CoarseType.PLACE,
    "Work": CoarseType.WORK,
}


@dataclass(frozen=True)
class TypePath:
    """Ordered segments of one ontology path, root first."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise OntologyError("type path must have at least one segment")
        for seg in self.segments:
            if not seg:
                raise OntologyError("type path contains an empty segment")
            if SEPARATOR in seg:
                raise OntologyError(f"segment {seg!r} contains the separator")
        for a, b in zip(self.segments, self.segments[1:]):
            if a == b:
                raise OntologyError(f"adjacent duplicate segment {a!r}")

    @property
    def leaf(self) -> str:
        return self.segments[-1]

    def text(self) -> str:
        return SEPARATOR.join(self.segments)


@dataclass(frozen=True)
class FineType:
    """Leaf type name plus its coarse category."""

    name: str
    coarse: CoarseType


@dataclass(frozen=True)
class TypeSchema:
    """Induced two-level type system.

    ``fine_types`` is sorted by name; ``coarse_roots`` maps path segment
    names to coarse categories and is only needed to classify new paths,
    not to look up already-induced fine types.
    """

    depth_cutoff: int
    min_count: int
    fine_types: tuple[FineType, ...]
    coarse_roots: Mapping[str, CoarseType] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.depth_cutoff < 1:
            raise OntologyError("depth_cutoff must be >= 1")
        if self.min_count < 1:
            raise OntologyError("min_count must be >= 1")
        names = [ft.name for ft in self.fine_types]
        if len(set(names)) != len(names):
            raise OntologyError("duplicate fine type name in schema")
        object.__setattr__(
            self, "_by_name", {ft.name: ft.coarse for ft in self.fine_types}
        )

    def fine_names(self) -> tuple[str, ...]:
        return tuple(ft.name for ft in self.fine_types)

    def __contains__(self, fine: str) -> bool:
        return fine in self._by_name  # type: ignore[attr-defined]

    def coarse_of(self, fine: str) -> CoarseType:
        try:
            return self._by_name[fine]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownFineTypeError(f"unknown fine type {fine!r}") from None

    def coarse_of_path(self, path: TypePath) -> CoarseType:
        return path_coarse(path, self.depth_cutoff, self.coarse_roots)


def parse_type_paths(lines: Iterable[str]) -> list[TypePath]:
    """Parse one ``/``-separated path per line; blank lines are skipped.

    Raises OntologyError naming the 1-based line number on malformed input.
    """
    paths = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            paths.append(TypePath(tuple(line.split(SEPARATOR))))
        except OntologyError as exc:
            raise OntologyError(f"line {lineno}: {exc}") from None
    return paths


def read_path_file(path: str | Path) -> list[tuple[TypePath, int]]:
    """Read a path file with an optional ``\\t<count>`` suffix per line.

    Lines without a count default to 1. Counts must be non-negative.
    """
    out: list[tuple[TypePath, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            count = 1
            if "\t" in line:
                text, count_text = line.rsplit("\t", 1)
                try:
                    count = int(count_text)
                except ValueError:
                    raise OntologyError(
                        f"line {lineno}: count {count_text!r} is not an integer"
                    ) from None
                if count < 0:
                    raise OntologyError(f"line {lineno}: negative count {count}")
                line = text.strip()
            try:
                parsed = TypePath(tuple(line.split(SEPARATOR)))
            except OntologyError as exc:
                raise OntologyError(f"line {lineno}: {exc}") from None
            out.append((parsed, count))
    return out


def leaf_type(path: TypePath) -> str:
    """Return the last segment of a path."""
    return path.leaf


def path_coarse(
    path: TypePath,
    depth_cutoff: int,
    coarse_roots: Mapping[str, CoarseType],
) -> CoarseType:
    """Coarse category of a path: the first segment at 1-based position
    ``depth_cutoff`` or deeper that appears in ``coarse_roots``, else Other.
    """
    for seg in path.segments[depth_cutoff - 1 :]:
        if seg in coarse_roots:
            return coarse_roots[seg]
    return CoarseType.OTHER


def induce_schema(
    paths: Iterable[tuple[TypePath, int]],
    depth_cutoff: int = DEFAULT_DEPTH_CUTOFF,
    min_count: int = DEFAULT_MIN_COUNT,
    coarse_roots: Mapping[str, CoarseType] = DEFAULT_COARSE_ROOTS,
) -> TypeSchema:
    """Induce the fine/coarse schema from counted paths.

    Paths no deeper than ``depth_cutoff`` are dropped (their leaves are
    abstract). Counts of paths sharing a leaf name are summed; leaves with a
    total below ``min_count`` are pruned. A leaf reached under two different
    coarse categories is a conflict and raises SchemaConflictError.
    """
    if depth_cutoff < 1:
        raise OntologyError("depth_cutoff must be >= 1")
    if min_count < 1:
        raise OntologyError("min_count must be >= 1")
    totals: dict[str, int] = {}
    coarse_by_leaf: dict[str, CoarseType] = {}
    for path, count in paths:
        if count < 0:
            raise OntologyError(f"negative count {count} for path {path.text()!r}")
        if len(path.segments) <= depth_cutoff:
            continue
        leaf = path.leaf
        coarse = path_coarse(path, depth_cutoff, coarse_roots)
        if leaf in coarse_by_leaf and coarse_by_leaf[leaf] is not coarse:
            raise SchemaConflictError(
                f"leaf {leaf!r} maps to both {coarse_by_leaf[leaf]} and {coarse}"
            )
        coarse_by_leaf[leaf] = coarse
        totals[leaf] = totals.get(leaf, 0) + count
    fine = tuple(
        FineType(name, coarse_by_leaf[name])
        for name in sorted(totals)
        if totals[name] >= min_count
    )
    return TypeSchema(
        depth_cutoff=depth_cutoff,
        min_count=min_count,
        fine_types=fine,
        coarse_roots=dict(coarse_roots),
    )


def coarse_of(schema: TypeSchema, fine: str) -> CoarseType:
    """Stored coarse assignment of a schema fine type."""
    return schema.coarse_of(fine)


def write_schema(schema: TypeSchema, path: str | Path) -> None:
    """Write the schema as JSON with sorted keys (coarse_roots are not
    persisted; pass them explicitly to operations that classify new paths)."""
    doc = {
        "depth_cutoff": schema.depth_cutoff,
        "min_count": schema.min_count,
        "fine_types": [
            {"coarse": ft.coarse.value, "name": ft.name} for ft in schema.fine_types
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_schema(path: str | Path) -> TypeSchema:
    """Load a schema written by :func:`write_schema`."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"{path}: invalid schema JSON: {exc}") from None
    try:
        fine = tuple(
            FineType(item["name"], CoarseType(item["coarse"]))
            for item in doc["fine_types"]
        )
        return TypeSchema(
            depth_cutoff=int(doc["depth_cutoff"]),
            min_count=int(doc["min_count"]),
            fine_types=fine,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise OntologyError(f"{path}: invalid schema document: {exc}") from None


def coarse_roots_from_json(doc: Mapping[str, str]) -> dict[str, CoarseType]:
    """Convert a ``{segment: coarse_name}`` mapping into typed coarse roots."""
    try:
        return {seg: CoarseType(name) for seg, name in doc.items()}
    except ValueError as exc:
        raise OntologyError(f"invalid coarse root mapping: {exc}") from None
