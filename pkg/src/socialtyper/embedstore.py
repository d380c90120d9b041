"""Embedding storage, per-entity aggregation, and concatenation fusion.

The on-disk EMB1 layout is fixed little-endian: magic ``EMB1``, u32 dim,
u32 record count, then per record a u16 id byte-length, the UTF-8 id, and
dim float32 values. Arithmetic is done in float64 in memory; files store
float32.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SocialTyperError

MAGIC = b"EMB1"
TEXT_SUFFIX = ".etsv"

_HEADER = struct.Struct("<4sII")
_ID_LEN = struct.Struct("<H")


class EmbeddingError(SocialTyperError):
    """Inconsistent vectors or ids."""


class Emb1FormatError(SocialTyperError):
    """Malformed embedding file; the message carries a byte or line offset."""


class EmbeddingSet:
    """Immutable id -> vector store of uniform dimension.

    Vectors are float64 rows of a read-only matrix; insertion order of ids
    is preserved and determines file write order.
    """

    def __init__(self, entries: Mapping[str, Sequence[float]] | Iterable[tuple[str, Sequence[float]]], dim: int | None = None):
        pairs = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if dim is None:
            if not pairs:
                raise EmbeddingError("cannot infer dim from an empty entry set")
            dim = len(np.asarray(pairs[0][1], dtype=np.float64).ravel())
        if dim < 1:
            raise EmbeddingError("dim must be >= 1")
        ids = []
        seen = set()
        matrix = np.empty((len(pairs), dim), dtype=np.float64)
        for row, (entity_id, vector) in enumerate(pairs):
            if not entity_id:
                raise EmbeddingError("empty entity id")
            if entity_id in seen:
                raise EmbeddingError(f"duplicate entity id {entity_id!r}")
            seen.add(entity_id)
            arr = np.asarray(vector, dtype=np.float64).ravel()
            if arr.shape != (dim,):
                raise EmbeddingError(
                    f"entity {entity_id!r}: expected dim {dim}, got {arr.shape[0]}"
                )
            if not np.all(np.isfinite(arr)):
                raise EmbeddingError(f"entity {entity_id!r}: non-finite component")
            ids.append(entity_id)
            matrix[row] = arr
        self._dim = dim
        self._ids = tuple(ids)
        self._index = {eid: i for i, eid in enumerate(ids)}
        matrix.setflags(write=False)
        self._matrix = matrix

    @classmethod
    def from_matrix(cls, ids: Sequence[str], matrix: np.ndarray) -> "EmbeddingSet":
        """Adopt a prebuilt (n, dim) float64 matrix without copying rows."""
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise EmbeddingError("matrix shape does not match id count")
        if matrix.shape[1] < 1:
            raise EmbeddingError("dim must be >= 1")
        if len(set(ids)) != len(ids) or any(not i for i in ids):
            raise EmbeddingError("ids must be non-empty and unique")
        if not np.all(np.isfinite(matrix)):
            raise EmbeddingError("matrix contains non-finite components")
        obj = cls.__new__(cls)
        obj._dim = matrix.shape[1]
        obj._ids = tuple(ids)
        obj._index = {eid: i for i, eid in enumerate(ids)}
        matrix.setflags(write=False)
        obj._matrix = matrix
        return obj

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._index

    def row_of(self, entity_id: str) -> int:
        try:
            return self._index[entity_id]
        except KeyError:
            raise EmbeddingError(f"unknown entity id {entity_id!r}") from None

    def vector(self, entity_id: str) -> np.ndarray:
        return self._matrix[self.row_of(entity_id)]

    def items(self) -> Iterable[tuple[str, np.ndarray]]:
        for i, entity_id in enumerate(self._ids):
            yield entity_id, self._matrix[i]


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    length: int


@dataclass(frozen=True)
class SegmentMap:
    """Named, contiguous coordinate ranges of a fused vector."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise EmbeddingError("segment map must have at least one segment")
        names = [s.name for s in self.segments]
        if len(set(names)) != len(names):
            raise EmbeddingError("duplicate segment name")
        expected = 0
        for seg in self.segments:
            if not seg.name:
                raise EmbeddingError("empty segment name")
            if seg.offset != expected:
                raise EmbeddingError(
                    f"segment {seg.name!r} starts at {seg.offset}, expected {expected}"
                )
            if seg.length < 1:
                raise EmbeddingError(f"segment {seg.name!r} has non-positive length")
            expected += seg.length

    @property
    def total_dim(self) -> int:
        return sum(s.length for s in self.segments)

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.segments)

    def slice_of(self, name: str) -> slice:
        for seg in self.segments:
            if seg.name == name:
                return slice(seg.offset, seg.offset + seg.length)
        raise EmbeddingError(f"unknown segment {name!r}")

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"length": s.length, "name": s.name, "offset": s.offset}
                for s in self.segments
            ]
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SegmentMap":
        try:
            segments = tuple(
                Segment(item["name"], int(item["offset"]), int(item["length"]))
                for item in doc["segments"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"invalid segment map document: {exc}") from None
        return cls(segments)


def write_embeddings(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Write an embedding file; ``*.etsv`` paths get the text format,
    anything else the EMB1 binary format."""
    if str(path).endswith(TEXT_SUFFIX):
        _write_text(embeddings, path)
    else:
        _write_binary(embeddings, path)


def read_embeddings(path: str | Path) -> EmbeddingSet:
    """Read an embedding file written by :func:`write_embeddings`."""
    if str(path).endswith(TEXT_SUFFIX):
        return _read_text(path)
    return _read_binary(path)


def _write_binary(embeddings: EmbeddingSet, path: str | Path) -> None:
    with np.errstate(over="ignore"):
        stored = embeddings.matrix.astype("<f4")
    if not np.all(np.isfinite(stored)):
        raise Emb1FormatError("a component overflows float32 storage")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, embeddings.dim, len(embeddings)))
        for row, entity_id in enumerate(embeddings.ids):
            encoded = entity_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise Emb1FormatError(f"id {entity_id!r} exceeds 65535 bytes")
            fh.write(_ID_LEN.pack(len(encoded)))
            fh.write(encoded)
            fh.write(stored[row].tobytes())


def _read_binary(path: str | Path) -> EmbeddingSet:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise Emb1FormatError(f"{path}: truncated header at byte offset {len(data)}")
    magic, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise Emb1FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    if dim < 1:
        raise Emb1FormatError(f"{path}: dim {dim} out of range at byte offset 4")
    offset = _HEADER.size
    row_bytes = 4 * dim
    ids: list[str] = []
    matrix = np.empty((count, dim), dtype=np.float64)
    for row in range(count):
        if offset + _ID_LEN.size > len(data):
            raise Emb1FormatError(f"{path}: truncated record at byte offset {offset}")
        (id_len,) = _ID_LEN.unpack_from(data, offset)
        offset += _ID_LEN.size
        if offset + id_len + row_bytes > len(data):
            raise Emb1FormatError(f"{path}: truncated record at byte offset {offset}")
        try:
            entity_id = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise Emb1FormatError(
                f"{path}: invalid UTF-8 id at byte offset {offset}"
            ) from None
        offset += id_len
        values = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        if not np.all(np.isfinite(values)):
            raise Emb1FormatError(
                f"{path}: non-finite value in record at byte offset {offset}"
            )
        offset += row_bytes
        ids.append(entity_id)
        matrix[row] = values.astype(np.float64)
    if offset != len(data):
        raise Emb1FormatError(f"{path}: trailing bytes at byte offset {offset}")
    if len(set(ids)) != len(ids):
        raise Emb1FormatError(f"{path}: duplicate id in file")
    if not all(ids):
        raise Emb1FormatError(f"{path}: empty id in file")
    return EmbeddingSet.from_matrix(ids, matrix)


def _write_text(embeddings: EmbeddingSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entity_id, vector in embeddings.items():
            fh.write(entity_id + "\t" + " ".join(repr(v) for v in vector.tolist()) + "\n")


def _read_text(path: str | Path) -> EmbeddingSet:
    pairs: list[tuple[str, list[float]]] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise Emb1FormatError(f"{path}: line {lineno}: expected id\\tvalues")
            try:
                values = [float(v) for v in parts[1].split()]
            except ValueError:
                raise Emb1FormatError(
                    f"{path}: line {lineno}: non-numeric value"
                ) from None
            if dim is None:
                dim = len(values)
            if len(values) != dim or dim == 0:
                raise Emb1FormatError(
                    f"{path}: line {lineno}: expected {dim} values, got {len(values)}"
                )
            pairs.append((parts[0], values))
    if dim is None:
        raise Emb1FormatError(f"{path}: empty text embedding file")
    try:
        return EmbeddingSet(pairs, dim=dim)
    except EmbeddingError as exc:
        raise Emb1FormatError(f"{path}: {exc}") from None


def aggregate_mean(
    per_tweet: Iterable[tuple[str, Sequence[float]]],
) -> EmbeddingSet:
    """Component-wise arithmetic mean of each entity's vectors.

    Entities appear in first-occurrence order; all vectors must share one
    dimension.
    """
    groups: dict[str, list[np.ndarray]] = {}
    dim: int | None = None
    for entity_id, vector in per_tweet:
        arr = np.asarray(vector, dtype=np.float64).ravel()
        if dim is None:
            dim = arr.shape[0]
        if arr.shape[0] != dim:
            raise EmbeddingError(
                f"entity {entity_id!r}: expected dim {dim}, got {arr.shape[0]}"
            )
        groups.setdefault(entity_id, []).append(arr)
    if dim is None:
        raise EmbeddingError("no vectors to aggregate")
    ids = list(groups)
    matrix = np.empty((len(ids), dim), dtype=np.float64)
    for row, entity_id in enumerate(ids):
        matrix[row] = np.mean(np.stack(groups[entity_id]), axis=0)
    return EmbeddingSet.from_matrix(ids, matrix)


def fuse(parts: Sequence[tuple[str, EmbeddingSet]]) -> tuple[EmbeddingSet, SegmentMap]:
    """Concatenate embedding spaces over the intersection of their ids.

    The output dimension is the sum of part dimensions; the segment map
    records each part's coordinate range in input order. Entities missing
    from any part are dropped.
    """
    if not parts:
        raise EmbeddingError("fuse requires at least one part")
    names = [name for name, _ in parts]
    if len(set(names)) != len(names):
        raise EmbeddingError("duplicate segment name in fuse parts")
    shared = [eid for eid in parts[0][1].ids if all(eid in es for _, es in parts[1:])]
    if not shared:
        raise EmbeddingError("no entity is present in every part")
    segments = []
    offset = 0
    for name, es in parts:
        segments.append(Segment(name, offset, es.dim))
        offset += es.dim
    segmap = SegmentMap(tuple(segments))
    matrix = np.empty((len(shared), segmap.total_dim), dtype=np.float64)
    for name, es in parts:
        rows = [es.row_of(eid) for eid in shared]
        matrix[:, segmap.slice_of(name)] = es.matrix[rows]
    return EmbeddingSet.from_matrix(shared, matrix), segmap


def slice_part(
    embeddings: EmbeddingSet, segmap: SegmentMap, name: str
) -> EmbeddingSet:
    """Extract one named coordinate range as its own embedding set."""
    if embeddings.dim != segmap.total_dim:
        raise EmbeddingError(
            f"segment map covers {segmap.total_dim} dims, set has {embeddings.dim}"
        )
    part = np.array(embeddings.matrix[:, segmap.slice_of(name)])
    return EmbeddingSet.from_matrix(list(embeddings.ids), part)
