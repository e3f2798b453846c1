"""Sparse unit-norm topic embeddings for items and users.

Items and users live in the same ``n_topics``-dimensional space. An embedding
is created by drawing all components uniformly from [0, 1], keeping a small
random subset of topics, zeroing the rest, and normalizing to unit Euclidean
norm. Items keep 2-3 topics, users 3-5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ITEM_TOPIC_COUNTS = (2, 3)
USER_TOPIC_COUNTS = (3, 4, 5)

NORM_ATOL = 1e-9


@dataclass
class Catalog:
    """Fixed item set: one embedding row per item plus its main topic."""

    vectors: np.ndarray      # (n_items, n_topics) float64, unit rows
    main_topics: np.ndarray  # (n_items,) int64, argmax of each row

    @property
    def n_items(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_topics(self) -> int:
        return self.vectors.shape[1]


def sample_embedding(
    rng: np.random.Generator,
    n_topics: int,
    topic_counts: tuple[int, ...],
    topic_prior: np.ndarray | None = None,
    support: np.ndarray | None = None,
) -> np.ndarray:
    """Draw one sparse unit-norm embedding.

    ``topic_prior`` biases which topics are kept (sampled without
    replacement). ``support`` fixes the kept topics outright, skipping the
    topic-count and topic-subset draws; used for catalog-backed items.
    """
    components = rng.uniform(0.0, 1.0, size=n_topics)
    if support is not None:
        topics = np.asarray(support, dtype=np.int64)
    else:
        count = topic_counts[rng.integers(len(topic_counts))]
        if topic_prior is not None:
            prior = np.asarray(topic_prior, dtype=np.float64)
            if prior.shape != (n_topics,):
                raise ValueError(
                    f"topic prior has length {prior.shape}, expected ({n_topics},)"
                )
            if abs(prior.sum() - 1.0) > NORM_ATOL:
                raise ValueError(f"topic prior sums to {prior.sum()!r}, expected 1")
            if int(np.count_nonzero(prior)) < count:
                raise ValueError(
                    f"topic prior has fewer than {count} nonzero entries; cannot draw "
                    f"{count} distinct topics"
                )
            topics = rng.choice(n_topics, size=count, replace=False, p=prior)
        else:
            topics = rng.choice(n_topics, size=count, replace=False)
    keep = np.zeros(n_topics, dtype=bool)
    keep[topics] = True
    components[~keep] = 0.0
    norm = float(np.linalg.norm(components))
    if norm == 0.0:
        raise ValueError("degenerate embedding: all kept components are zero")
    return components / norm


def sample_user(
    rng: np.random.Generator,
    n_topics: int,
    topic_prior: np.ndarray | None = None,
) -> np.ndarray:
    """Draw a fresh user embedding covering 3-5 topics."""
    return sample_embedding(rng, n_topics, USER_TOPIC_COUNTS, topic_prior=topic_prior)


def generate_catalog(
    n_items: int,
    n_topics: int,
    seed: int | np.random.SeedSequence,
) -> Catalog:
    """Generate the item set. Bitwise-deterministic given the seed."""
    rng = np.random.default_rng(seed)
    vectors = np.empty((n_items, n_topics), dtype=np.float64)
    for i in range(n_items):
        vectors[i] = sample_embedding(rng, n_topics, ITEM_TOPIC_COUNTS)
    return Catalog(vectors=vectors, main_topics=vectors.argmax(axis=1).astype(np.int64))


def relevance(item: np.ndarray, user: np.ndarray) -> float:
    """Inner product of item and user embeddings; in [0, 1] for unit inputs."""
    item = np.asarray(item, dtype=np.float64)
    user = np.asarray(user, dtype=np.float64)
    if item.shape != user.shape:
        raise ValueError(f"embedding length mismatch: {item.shape} vs {user.shape}")
    return float(item @ user)
