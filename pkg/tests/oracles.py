"""Independent brute-force oracles used to cross-check the library.

Everything here is written against the definitions directly (plain loops,
exact summation) and deliberately shares no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def confusion_tally(pairs, vocab):
    """Count (gold, pred) pairs into a nested dict."""
    counts = {g: {p: 0 for p in vocab} for g in vocab}
    for gold, pred in pairs:
        counts[gold][pred] += 1
    return counts


def metrics_oracle(labels, counts):
    """Accuracy / per-class P, R, F1 / macro / weighted from a counts matrix.

    ``counts[i][j]`` is the number of examples with gold ``labels[i]``
    predicted as ``labels[j]``. Zero denominators give 0; macro averages
    over classes present in gold or predictions.
    """
    n_classes = len(labels)
    total = sum(sum(row) for row in counts)
    per_class = {}
    macro_terms = []
    weighted = 0.0
    for i in range(n_classes):
        tp = counts[i][i]
        support = sum(counts[i][j] for j in range(n_classes))
        predicted = sum(counts[g][i] for g in range(n_classes))
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[labels[i]] = (precision, recall, f1, support)
        weighted += (support / total) * f1
        if support > 0 or predicted > 0:
            macro_terms.append(f1)
    accuracy = sum(counts[i][i] for i in range(n_classes)) / total
    macro = sum(macro_terms) / len(macro_terms) if macro_terms else 0.0
    return {
        "accuracy": accuracy,
        "macro_f1": macro,
        "weighted_f1": weighted,
        "per_class": per_class,
    }


def mean_oracle(vectors):
    """Component-wise mean via exact (fsum) summation."""
    n = len(vectors)
    dim = len(vectors[0])
    return [math.fsum(v[j] for v in vectors) / n for j in range(dim)]


def cosine_oracle(u, v):
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(a * a for a in u))
    nv = math.sqrt(math.fsum(b * b for b in v))
    return dot / (nu * nv)


def topk_oracle(query_id, entries, k):
    """Exhaustive ranking: all candidates sorted by (-cosine, id)."""
    query = entries[query_id]
    scored = [
        (eid, cosine_oracle(query, vec))
        for eid, vec in entries.items()
        if eid != query_id
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def rerank_oracle(query_id, first, second, k):
    """Two-stage ranking: top-k in ``first``, reordered by ``second``."""
    pool = [eid for eid, _ in topk_oracle(query_id, first, k)]
    kept = [eid for eid in pool if eid in second]
    scored = [(eid, cosine_oracle(second[query_id], second[eid])) for eid in kept]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def align_oracle(entity_ids, index_rows):
    """Double-loop exact join of entity ids against (qid, twitter_id) rows."""
    out = []
    for entity_id in entity_ids:
        for qid, twitter_id in index_rows:
            if twitter_id == entity_id:
                out.append((entity_id, qid))
                break
    return out


def attach_oracle(pairs, dbpedia_rows):
    """Double-loop join of (entity_id, qid) pairs against (qid, path) rows."""
    out = []
    for entity_id, qid in pairs:
        found = None
        for row_qid, path in dbpedia_rows:
            if row_qid == qid:
                found = path
                break
        out.append((entity_id, qid, found))
    return out


def nearest_centroid_labels(train_x, train_y, queries):
    """Assign each query the label of the closest class centroid."""
    classes = sorted(set(train_y))
    centroids = {}
    for label in classes:
        members = [x for x, y in zip(train_x, train_y) if y == label]
        centroids[label] = mean_oracle(members)
    out = []
    for q in queries:
        best = min(
            classes,
            key=lambda label: math.fsum(
                (a - b) ** 2 for a, b in zip(q, centroids[label])
            ),
        )
        out.append(best)
    return out


def softmax_regression_accuracy(train_x, train_y, test_x, test_y, n_classes,
                                epochs=500, lr=0.5):
    """Independent multinomial logistic regression via full-batch gradient
    descent; returns test accuracy."""
    x = np.asarray(train_x, dtype=np.float64)
    y = np.asarray(train_y, dtype=np.int64)
    n, dim = x.shape
    w = np.zeros((dim, n_classes))
    b = np.zeros(n_classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for _ in range(epochs):
        z = x @ w + b
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        dz = (p - onehot) / n
        w -= lr * (x.T @ dz)
        b -= lr * dz.sum(axis=0)
    zt = np.asarray(test_x, dtype=np.float64) @ w + b
    pred = zt.argmax(axis=1)
    return float(np.mean(pred == np.asarray(test_y)))
