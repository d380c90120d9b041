"""Entity similarity: cosine scoring, exhaustive top-k retrieval, and the
retrieve-then-rerank composition over two embedding spaces."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .embedstore import EmbeddingSet
from .errors import SocialTyperError


class SimilarityError(SocialTyperError):
    """Unknown query, dimension mismatch, or undefined similarity."""


@dataclass(frozen=True)
class RankedList:
    """Ordered (entity_id, score) answers to one similarity query."""

    query_id: str
    entries: tuple[tuple[str, float], ...]
    warning: str | None = None

    def ids(self) -> tuple[str, ...]:
        return tuple(eid for eid, _ in self.entries)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity of two non-zero vectors of equal dimension."""
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise SimilarityError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise SimilarityError("cosine similarity is undefined for a zero vector")
    return float(a @ b / (na * nb))


def _ordered_entries(
    ids: Sequence[str], scores: np.ndarray, k: int | None
) -> tuple[tuple[str, float], ...]:
    """Sort by descending score with ties by ascending id; keep the top k."""
    by_id = sorted(range(len(ids)), key=lambda i: ids[i])
    ranked = sorted(by_id, key=lambda i: -scores[i])
    if k is not None:
        ranked = ranked[:k]
    return tuple((ids[i], float(scores[i])) for i in ranked)


def _candidate_scores(
    embeddings: EmbeddingSet, query_id: str, candidate_ids: Sequence[str]
) -> np.ndarray:
    q = embeddings.vector(query_id)
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise SimilarityError(f"query {query_id!r} is a zero vector")
    rows = [embeddings.row_of(eid) for eid in candidate_ids]
    m = embeddings.matrix[rows]
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        bad = candidate_ids[int(np.argmax(norms == 0.0))]
        raise SimilarityError(f"entity {bad!r} is a zero vector")
    return (m @ q) / (norms * qn)


def topk(query_id: str, embeddings: EmbeddingSet, k: int) -> RankedList:
    """The k entities most cosine-similar to the query, query excluded.

    Returns the whole pool when it has fewer than k entities; equal scores
    order by ascending entity id. The scan is exhaustive over the set.
    """
    if k < 1:
        raise SimilarityError("k must be >= 1")
    if query_id not in embeddings:
        raise SimilarityError(f"unknown query entity {query_id!r}")
    n = len(embeddings)
    if n == 1:
        return RankedList(query_id, ())
    query_row = embeddings.row_of(query_id)
    matrix = embeddings.matrix
    # One fused pass; norm(axis=1) would materialize an |matrix| copy.
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    if np.any(norms == 0.0):
        bad = embeddings.ids[int(np.argmax(norms == 0.0))]
        raise SimilarityError(f"entity {bad!r} is a zero vector")
    scores = (matrix @ matrix[query_row]) / (norms * norms[query_row])
    ids = np.asarray(embeddings.ids)
    id_rank = np.empty(n, dtype=np.int64)
    id_rank[np.argsort(ids, kind="stable")] = np.arange(n)
    order = np.lexsort((id_rank, -scores))
    order = order[order != query_row][:k]
    return RankedList(
        query_id,
        tuple((embeddings.ids[i], float(scores[i])) for i in order),
    )


def rerank(
    query_id: str, first: EmbeddingSet, second: EmbeddingSet, k: int
) -> RankedList:
    """Retrieve the top-k pool in the first space, then reorder it by
    similarity in the second space (scores reported from the second).

    Candidates absent from the second space are dropped; an empty overlap
    yields an empty list with a warning flag.
    """
    if query_id not in first:
        raise SimilarityError(f"query {query_id!r} missing from the first space")
    if query_id not in second:
        raise SimilarityError(f"query {query_id!r} missing from the second space")
    pool = topk(query_id, first, k)
    candidates = [eid for eid in pool.ids() if eid in second]
    if not candidates:
        return RankedList(query_id, (), warning="no stage-1 candidate is present in the second space")
    scores = _candidate_scores(second, query_id, candidates)
    return RankedList(query_id, _ordered_entries(candidates, scores, None))


def concat_topk(
    query_id: str, first: EmbeddingSet, second: EmbeddingSet, k: int
) -> RankedList:
    """Comparison variant: cosine over the concatenated vectors of entities
    present in both spaces."""
    if query_id not in first or query_id not in second:
        raise SimilarityError(f"query {query_id!r} missing from a space")
    shared = [eid for eid in first.ids if eid in second]
    matrix = np.concatenate(
        [first.matrix[[first.row_of(e) for e in shared]],
         second.matrix[[second.row_of(e) for e in shared]]],
        axis=1,
    )
    fused = EmbeddingSet.from_matrix(shared, matrix)
    return topk(query_id, fused, k)


def averaged_topk(
    query_id: str,
    first: EmbeddingSet,
    second: EmbeddingSet,
    k: int,
    weight: float = 0.5,
) -> RankedList:
    """Comparison variant: rank by ``weight*cos_first + (1-weight)*cos_second``
    over entities present in both spaces."""
    if not 0.0 <= weight <= 1.0:
        raise SimilarityError("weight must lie in [0, 1]")
    if query_id not in first or query_id not in second:
        raise SimilarityError(f"query {query_id!r} missing from a space")
    shared = [eid for eid in first.ids if eid in second and eid != query_id]
    if not shared:
        return RankedList(query_id, (), warning="no entity is present in both spaces")
    s1 = _candidate_scores(first, query_id, shared)
    s2 = _candidate_scores(second, query_id, shared)
    return RankedList(
        query_id, _ordered_entries(shared, weight * s1 + (1.0 - weight) * s2, k)
    )
