"""Logistic matrix factorization on logged clicks.

Users are keyed by session id (every session is a distinct cold-start user),
items by catalog id. Click probability is the sigmoid of the latent dot
product plus user/item/global biases, trained by minibatch SGD with L2
regularization and gradient-norm clipping.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .logs import InteractionLog, log_arrays

GRAD_CLIP_NORM = 10.0


@dataclass
class MfModel:
    user_vectors: np.ndarray   # (n_users, dim)
    item_vectors: np.ndarray   # (n_items, dim)
    user_bias: np.ndarray
    item_bias: np.ndarray
    global_bias: float
    item_seen: np.ndarray      # items that appeared in the training log
    loss_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.item_vectors.shape[1]

    def predict(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        z = (
            (self.user_vectors[users] * self.item_vectors[items]).sum(axis=1)
            + self.user_bias[users]
            + self.item_bias[items]
            + self.global_bias
        )
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _clip(gradient: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(gradient))
    if norm > GRAD_CLIP_NORM:
        return gradient * (GRAD_CLIP_NORM / norm)
    return gradient


def fit_mf(
    log: InteractionLog,
    dim: int = 10,
    epochs: int = 30,
    seed: int = 0,
    learning_rate: float = 0.05,
    l2: float = 1e-4,
    batch_size: int = 256,
) -> MfModel:
    """Train on every (session, item, click) triple in the log.

    Deterministic given the seed: initialization and epoch shuffles come from
    one generator.
    """
    if dim <= 0:
        raise ValueError(f"embedding dimension must be positive, got {dim}")
    if not log.rows:
        raise ValueError("cannot fit on an empty log")
    sessions, _, items, _, clicks = log_arrays(log)
    n_users = int(sessions.max()) + 1
    n_items = log.n_items
    slate = log.slate_size
    users_flat = np.repeat(sessions, slate)
    items_flat = items.ravel()
    y = clicks.ravel().astype(np.float64)

    rng = np.random.default_rng(seed)
    model = MfModel(
        user_vectors=rng.normal(scale=0.1, size=(n_users, dim)),
        item_vectors=rng.normal(scale=0.1, size=(n_items, dim)),
        user_bias=np.zeros(n_users),
        item_bias=np.zeros(n_items),
        global_bias=0.0,
        item_seen=np.bincount(items_flat, minlength=n_items) > 0,
    )

    n = len(y)
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            u, i, t = users_flat[batch], items_flat[batch], y[batch]
            p = model.predict(u, i)
            err = p - t
            epoch_loss += float(
                -(t * np.log(np.clip(p, 1e-12, 1)) + (1 - t) * np.log(np.clip(1 - p, 1e-12, 1))).sum()
            )
            gu = _clip(err[:, None] * model.item_vectors[i] + l2 * model.user_vectors[u])
            gi = _clip(err[:, None] * model.user_vectors[u] + l2 * model.item_vectors[i])
            np.add.at(model.user_vectors, u, -learning_rate * gu)
            np.add.at(model.item_vectors, i, -learning_rate * gi)
            np.add.at(model.user_bias, u, -learning_rate * err)
            np.add.at(model.item_bias, i, -learning_rate * err)
            model.global_bias -= learning_rate * float(err.mean())
        model.loss_history.append(epoch_loss / n)
    if not np.isfinite(model.item_vectors).all() or not np.isfinite(model.user_vectors).all():
        raise RuntimeError("matrix factorization diverged to non-finite parameters")
    return model


@dataclass
class ItemEmbeddingTable:
    """Exported item vectors keyed by item id; unseen items carry the zero
    vector and are flagged."""

    vectors: np.ndarray
    flagged_unseen: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def export_item_embeddings(model: MfModel) -> ItemEmbeddingTable:
    vectors = model.item_vectors.copy()
    unseen = ~model.item_seen
    vectors[unseen] = 0.0
    return ItemEmbeddingTable(vectors=vectors, flagged_unseen=unseen)


def write_item_embeddings(table: ItemEmbeddingTable, path: str | Path) -> None:
    with open(path, "w") as fh:
        for item_id, vector in enumerate(table.vectors):
            fh.write(
                json.dumps(
                    {
                        "item": item_id,
                        "vector": vector.tolist(),
                        "unseen": bool(table.flagged_unseen[item_id]),
                    }
                )
                + "\n"
            )


def read_item_embeddings(path: str | Path) -> ItemEmbeddingTable:
    vectors, unseen = [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        vectors.append(record["vector"])
        unseen.append(bool(record.get("unseen", False)))
    if not vectors:
        raise ValueError(f"{path}: empty embedding table")
    return ItemEmbeddingTable(
        vectors=np.asarray(vectors, dtype=np.float64),
        flagged_unseen=np.asarray(unseen, dtype=bool),
    )
