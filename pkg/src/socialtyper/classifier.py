"""Feed-forward softmax type classifier with the segment-masked composite loss.

The loss of one example is ``alpha*L1 + beta*L2 + gamma*L3`` where L1 is the
cross-entropy after zeroing the content coordinates of the input, L2 after
zeroing the network coordinates, and L3 with the input unmasked. All three
terms run through the same shared parameters; gradients are the weighted sum
of the three backward passes.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LabelRecord, LabelSource
from .embedstore import EmbeddingSet, Segment, SegmentMap
from .errors import SocialTyperError

NETWORK_SEGMENT = "network"
CONTENT_SEGMENT = "content"

DEFAULT_HIDDEN_DIMS = (50,)
DEFAULT_LOSS_WEIGHTS = (5.0, 1.0, 1.0)


class ClassifierError(SocialTyperError):
    """Invalid model configuration or input."""


class ModelFormatError(ClassifierError):
    """Unreadable or version-incompatible model file."""


class TrainingDivergedError(ClassifierError):
    """Non-finite loss encountered during training."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 17
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ClassifierError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ClassifierError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ClassifierError("learning_rate must be > 0")


@dataclass(frozen=True)
class MlpModel:
    """Immutable classifier: layer parameters plus label vocabulary,
    segment map, and loss weights."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    label_vocab: tuple[str, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    segment_map: SegmentMap
    loss_weights: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not self.label_vocab:
            raise ClassifierError("label vocabulary must be non-empty")
        if len(set(self.label_vocab)) != len(self.label_vocab):
            raise ClassifierError("label vocabulary contains duplicates")
        if self.input_dim < 1:
            raise ClassifierError("input_dim must be >= 1")
        if any(h < 1 for h in self.hidden_dims):
            raise ClassifierError("hidden layer sizes must be >= 1")
        dims = (self.input_dim, *self.hidden_dims, len(self.label_vocab))
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ClassifierError("layer count does not match dims")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ClassifierError(
                    f"layer {i}: shape {w.shape} does not chain {dims[i]}->{dims[i+1]}"
                )
        if len(self.loss_weights) != 3 or any(w < 0 for w in self.loss_weights):
            raise ClassifierError("loss weights must be three non-negative values")
        if not any(w > 0 for w in self.loss_weights):
            raise ClassifierError("loss weights must not all be zero")
        if self.segment_map.total_dim != self.input_dim:
            raise ClassifierError(
                f"segment map covers {self.segment_map.total_dim} dims, "
                f"input_dim is {self.input_dim}"
            )
        for arr in (*self.weights, *self.biases):
            arr.setflags(write=False)

    @property
    def n_labels(self) -> int:
        return len(self.label_vocab)

    def label_index(self, fine: str) -> int:
        try:
            return self.label_vocab.index(fine)
        except ValueError:
            raise ClassifierError(f"label {fine!r} not in vocabulary") from None


def init_model(
    input_dim: int,
    hidden_dims: Sequence[int],
    label_vocab: Sequence[str],
    segment_map: SegmentMap,
    loss_weights: Sequence[float] = DEFAULT_LOSS_WEIGHTS,
    seed: int = 17,
) -> MlpModel:
    """Seeded initialization: weights uniform in +-sqrt(6/(fan_in+fan_out)),
    biases zero. The same seed yields a bit-identical model."""
    rng = np.random.default_rng(seed)
    dims = (int(input_dim), *(int(h) for h in hidden_dims), len(label_vocab))
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        if fan_in < 1 or fan_out < 1:
            raise ClassifierError("layer sizes must be >= 1")
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpModel(
        input_dim=int(input_dim),
        hidden_dims=tuple(int(h) for h in hidden_dims),
        label_vocab=tuple(label_vocab),
        weights=tuple(weights),
        biases=tuple(biases),
        segment_map=segment_map,
        loss_weights=(
            float(loss_weights[0]),
            float(loss_weights[1]),
            float(loss_weights[2]),
        ),
    )


def _check_input(model: MlpModel, x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.shape != (model.input_dim,):
        raise ClassifierError(
            f"input has dim {arr.shape[0]}, model expects {model.input_dim}"
        )
    return arr


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_pass(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Single-example forward; returns per-layer activations and the probs."""
    activations = [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return activations, _softmax_rows(activations[-1])


def forward(model: MlpModel, x: Sequence[float]) -> np.ndarray:
    """Class probability vector for one input (rectifier hidden layers,
    softmax output)."""
    arr = _check_input(model, x)
    _, probs = _forward_pass(model, arr)
    return probs


def _check_label(model: MlpModel, y: int) -> int:
    y = int(y)
    if not 0 <= y < model.n_labels:
        raise ClassifierError(f"label index {y} outside vocabulary of {model.n_labels}")
    return y


def cross_entropy(model: MlpModel, x: Sequence[float], y: int) -> float:
    """Plain cross-entropy of the unmasked forward pass for one example."""
    arr = _check_input(model, x)
    y = _check_label(model, y)
    _, probs = _forward_pass(model, arr)
    with np.errstate(divide="ignore"):
        return float(-np.log(probs[y]))


def _single_backward(
    model: MlpModel, x: np.ndarray, y: int
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    activations, probs = _forward_pass(model, x)
    with np.errstate(divide="ignore"):
        loss = float(-np.log(probs[y]))
    dz = probs.copy()
    dz[y] -= 1.0
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.weights)  # type: ignore[list-item]
    for i in range(len(model.weights) - 1, -1, -1):
        a_prev = activations[i]
        grads[i] = (np.outer(a_prev, dz), dz.copy())
        if i > 0:
            da = dz @ model.weights[i].T
            dz = da * (activations[i] > 0.0)
    return loss, grads


def _masked(x: np.ndarray, segment_map: SegmentMap, zero_name: str) -> np.ndarray:
    out = x.copy()
    out[segment_map.slice_of(zero_name)] = 0.0
    return out


def _require_mask_segments(model: MlpModel) -> None:
    alpha, beta, _ = model.loss_weights
    if alpha == 0 and beta == 0:
        return
    if set(model.segment_map.names()) != {NETWORK_SEGMENT, CONTENT_SEGMENT}:
        raise ClassifierError(
            "masked loss terms need exactly the segments "
            f"{{{NETWORK_SEGMENT!r}, {CONTENT_SEGMENT!r}}}; "
            f"got {model.segment_map.names()}"
        )


def composite_loss(
    model: MlpModel, x: Sequence[float], y: int
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Composite loss and its exact gradients for one example.

    Returns ``alpha*L1 + beta*L2 + gamma*L3`` and per-layer ``(dW, db)``
    pairs that are the identically weighted sums of the three backward
    passes. Zero-weight terms are skipped without changing the result.
    """
    arr = _check_input(model, x)
    y = _check_label(model, y)
    _require_mask_segments(model)
    alpha, beta, gamma = model.loss_weights
    total = 0.0
    acc: list[list[np.ndarray]] = [
        [np.zeros_like(w), np.zeros_like(b)]
        for w, b in zip(model.weights, model.biases)
    ]

    def add_term(weight: float, x_term: np.ndarray) -> None:
        nonlocal total
        loss, grads = _single_backward(model, x_term, y)
        total += weight * loss
        for i, (dw, db) in enumerate(grads):
            acc[i][0] += weight * dw
            acc[i][1] += weight * db

    if alpha != 0:
        add_term(alpha, _masked(arr, model.segment_map, CONTENT_SEGMENT))
    if beta != 0:
        add_term(beta, _masked(arr, model.segment_map, NETWORK_SEGMENT))
    if gamma != 0:
        add_term(gamma, arr)
    return total, [(dw, db) for dw, db in acc]


def _batch_forward(
    weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], x: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    activations = [x]
    a = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return activations, _softmax_rows(activations[-1])


def _batch_backward(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean loss over the batch and gradients of that mean."""
    n = x.shape[0]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        activations, probs = _batch_forward(weights, biases, x)
        loss = float(np.mean(-np.log(probs[np.arange(n), y])))
    dz = probs.copy()
    dz[np.arange(n), y] -= 1.0
    dz /= n
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(weights)  # type: ignore[list-item]
    for i in range(len(weights) - 1, -1, -1):
        a_prev = activations[i]
        grads[i] = (a_prev.T @ dz, dz.sum(axis=0))
        if i > 0:
            da = dz @ weights[i].T
            dz = da * (activations[i] > 0.0)
    return loss, grads


def train(
    model: MlpModel,
    dataset: Sequence[tuple[Sequence[float], int]],
    config: TrainConfig,
) -> tuple[MlpModel, list[float]]:
    """Mini-batch gradient descent with the composite loss.

    Shuffling is seeded, so a fixed seed reproduces the final weights
    bit-for-bit. Returns the trained model and the per-epoch mean loss.
    """
    if not dataset:
        raise ClassifierError("training dataset is empty")
    _require_mask_segments(model)
    x = np.asarray([np.asarray(v, dtype=np.float64).ravel() for v, _ in dataset])
    if x.shape[1] != model.input_dim:
        raise ClassifierError(
            f"dataset dim {x.shape[1]} does not match input_dim {model.input_dim}"
        )
    y = np.asarray([_check_label(model, label) for _, label in dataset], dtype=np.int64)
    n = x.shape[0]
    alpha, beta, gamma = model.loss_weights
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    masks = {}
    if alpha != 0:
        masks["l1"] = model.segment_map.slice_of(CONTENT_SEGMENT)
    if beta != 0:
        masks["l2"] = model.segment_map.slice_of(NETWORK_SEGMENT)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_loss = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            batch_loss = 0.0
            acc = [
                [np.zeros_like(w), np.zeros_like(b)]
                for w, b in zip(weights, biases)
            ]

            def add_term(weight: float, xb_term: np.ndarray) -> None:
                nonlocal batch_loss
                loss, grads = _batch_backward(weights, biases, xb_term, yb)
                batch_loss += weight * loss
                for i, (dw, db) in enumerate(grads):
                    acc[i][0] += weight * dw
                    acc[i][1] += weight * db

            if alpha != 0:
                masked = xb.copy()
                masked[:, masks["l1"]] = 0.0
                add_term(alpha, masked)
            if beta != 0:
                masked = xb.copy()
                masked[:, masks["l2"]] = 0.0
                add_term(beta, masked)
            if gamma != 0:
                add_term(gamma, xb)
            if not math.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}"
                )
            for i in range(len(weights)):
                weights[i] -= config.learning_rate * acc[i][0]
                biases[i] -= config.learning_rate * acc[i][1]
            epoch_loss += batch_loss * len(idx)
        history.append(epoch_loss / n)
    trained = MlpModel(
        input_dim=model.input_dim,
        hidden_dims=model.hidden_dims,
        label_vocab=model.label_vocab,
        weights=tuple(weights),
        biases=tuple(biases),
        segment_map=model.segment_map,
        loss_weights=model.loss_weights,
    )
    return trained, history


def predict_probs(model: MlpModel, embeddings: EmbeddingSet) -> np.ndarray:
    """Probability matrix over the vocabulary, rows in set order."""
    if embeddings.dim != model.input_dim:
        raise ClassifierError(
            f"embedding dim {embeddings.dim} does not match input_dim {model.input_dim}"
        )
    out = np.empty((len(embeddings), model.n_labels), dtype=np.float64)
    for start in range(0, len(embeddings), 8192):
        chunk = embeddings.matrix[start : start + 8192]
        _, probs = _batch_forward(model.weights, model.biases, chunk)
        out[start : start + len(chunk)] = probs
    return out


def predict(model: MlpModel, embeddings: EmbeddingSet) -> list[LabelRecord]:
    """Argmax label per entity with its probability as confidence.

    Ties resolve to the lowest vocabulary index.
    """
    probs = predict_probs(model, embeddings)
    best = probs.argmax(axis=1)
    return [
        LabelRecord(
            entity_id=eid,
            fine=model.label_vocab[best[i]],
            source=LabelSource.PREDICTED,
            confidence=float(probs[i, best[i]]),
        )
        for i, eid in enumerate(embeddings.ids)
    ]


MODEL_VERSION = 1


def _format_number(v: float) -> str:
    if not math.isfinite(v):
        raise ModelFormatError("cannot serialize a non-finite number")
    return format(v, ".17g")


def _dump_json(obj) -> str:
    if isinstance(obj, dict):
        items = ",".join(
            f"{json.dumps(k)}:{_dump_json(obj[k])}" for k in sorted(obj)
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_dump_json(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_number(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise ModelFormatError(f"cannot serialize {type(obj).__name__}")


def save_model(model: MlpModel, path: str | Path) -> None:
    """Write model.json; numbers carry 17 significant digits so reloading
    reproduces the exact float64 parameters."""
    doc = {
        "version": MODEL_VERSION,
        "input_dim": model.input_dim,
        "hidden_dims": list(model.hidden_dims),
        "label_vocab": list(model.label_vocab),
        "segment_map": model.segment_map.to_dict(),
        "loss_weights": {
            "alpha": model.loss_weights[0],
            "beta": model.loss_weights[1],
            "gamma": model.loss_weights[2],
        },
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_json(doc))
        fh.write("\n")


def load_model(path: str | Path) -> MlpModel:
    """Load model.json written by :func:`save_model`."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid model JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {doc.get('version')!r}"
            if isinstance(doc, dict)
            else f"{path}: not a model document"
        )
    try:
        weights = tuple(
            np.asarray(layer["weights"], dtype=np.float64) for layer in doc["layers"]
        )
        biases = tuple(
            np.asarray(layer["bias"], dtype=np.float64) for layer in doc["layers"]
        )
        lw = doc["loss_weights"]
        return MlpModel(
            input_dim=int(doc["input_dim"]),
            hidden_dims=tuple(int(h) for h in doc["hidden_dims"]),
            label_vocab=tuple(doc["label_vocab"]),
            weights=weights,
            biases=biases,
            segment_map=SegmentMap.from_dict(doc["segment_map"]),
            loss_weights=(float(lw["alpha"]), float(lw["beta"]), float(lw["gamma"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: invalid model document: {exc}") from None


def sweep_loss_weights(
    train_set: Sequence[tuple[Sequence[float], int]],
    val_set: Sequence[tuple[Sequence[float], int]],
    input_dim: int,
    label_vocab: Sequence[str],
    segment_map: SegmentMap,
    candidates: Sequence[tuple[float, float, float]],
    hidden_dims: Sequence[int] = DEFAULT_HIDDEN_DIMS,
    config: TrainConfig = TrainConfig(),
    init_seed: int = 17,
) -> list[tuple[tuple[float, float, float], float]]:
    """Train once per candidate (alpha, beta, gamma) and rank the weight
    triples by validation accuracy, best first; ties order by triple."""
    if not val_set:
        raise ClassifierError("validation set is empty")
    results = []
    for weights in candidates:
        model = init_model(
            input_dim, hidden_dims, label_vocab, segment_map, weights, init_seed
        )
        trained, _ = train(model, train_set, config)
        correct = 0
        for x, y in val_set:
            probs = forward(trained, x)
            correct += int(int(probs.argmax()) == _check_label(trained, y))
        results.append(
            (
                (float(weights[0]), float(weights[1]), float(weights[2])),
                correct / len(val_set),
            )
        )
    results.sort(key=lambda item: (-item[1], item[0]))
    return results


def make_segment_map(parts: Sequence[tuple[str, int]]) -> SegmentMap:
    """Convenience constructor from (name, length) pairs."""
    segments = []
    offset = 0
    for name, length in parts:
        segments.append(Segment(name, offset, length))
        offset += length
    return SegmentMap(tuple(segments))
