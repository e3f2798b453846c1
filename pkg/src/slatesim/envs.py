"""Named environment presets, catalog files, and the semi-synthetic variant.

The nine built-in presets differ only in their :class:`SimulatorConfig`
values. Reranking presets have as many items as slate positions, so every
valid action is a permutation of the whole item set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SimulatorConfig
from .embeddings import Catalog, sample_embedding, sample_user
from .engine import Simulator

_SINGLE = dict(session_length=100, slate_size=1, n_items=1000, n_topics=10,
               lambda_scale=100.0, mu_shift=0.65, alpha_range=1.0, epsilon_decay=0.85)
_TOPK = dict(session_length=100, slate_size=10, n_items=1000, n_topics=10,
             lambda_scale=100.0, mu_shift=0.65, alpha_range=1.0, epsilon_decay=0.85)
_RERANK = dict(session_length=10, slate_size=10, n_items=10, n_topics=10,
               lambda_scale=5.0, mu_shift=0.30, alpha_range=1.0, epsilon_decay=0.85)
_BORED = dict(boredom_recent_clicks=10, boredom_window=5, boredom_threshold=5,
              boredom_variant="churn_and_return")

ENVIRONMENTS: dict[str, dict] = {
    "SingleItem-Static": dict(_SINGLE, influence_weight=1.0, observability="full"),
    "SingleItem-PartialObs": dict(_SINGLE, influence_weight=1.0, observability="partial"),
    "SingleItem-BoredInf": dict(_SINGLE, **_BORED, influence_weight=0.95,
                                observability="full"),
    "SlateTopK-Bored": dict(_TOPK, **_BORED, influence_weight=1.0, observability="full"),
    "SlateTopK-BoredInf": dict(_TOPK, **_BORED, influence_weight=0.95,
                               observability="full"),
    "SlateTopK-PartialObs": dict(_TOPK, **_BORED, influence_weight=0.95,
                                 observability="partial"),
    "SlateTopK-Uncertain": dict(_TOPK, **_BORED, influence_weight=0.95,
                                observability="partial", lambda_scale=5.0),
    "SlateRerank-Static": dict(_RERANK, influence_weight=1.0, observability="full"),
    "SlateRerank-Bored": dict(_RERANK, **_BORED, influence_weight=1.0,
                              observability="full"),
}

UNCERTAIN_LAMBDAS = (2.0, 5.0, 10.0)


def env_config(
    name: str,
    seed: int = 0,
    lambda_scale: float | None = None,
    influence_weight: float | None = None,
) -> SimulatorConfig:
    """Config for a named preset, with optional uncertainty/influence overrides."""
    if name not in ENVIRONMENTS:
        known = ", ".join(sorted(ENVIRONMENTS))
        raise KeyError(f"unknown environment {name!r}; known: {known}")
    values = dict(ENVIRONMENTS[name])
    if lambda_scale is not None:
        values["lambda_scale"] = float(lambda_scale)
    if influence_weight is not None:
        values["influence_weight"] = float(influence_weight)
    return SimulatorConfig(master_seed=seed, **values)


def make_env(
    name: str,
    seed: int = 0,
    lambda_scale: float | None = None,
    influence_weight: float | None = None,
) -> Simulator:
    """Build a fully configured engine for one of the named presets."""
    return Simulator(env_config(name, seed, lambda_scale, influence_weight), name=name)


def list_envs() -> list[str]:
    return list(ENVIRONMENTS)


# -- catalog-backed (semi-synthetic) environments ------------------------------


@dataclass
class CatalogFile:
    """Item metadata loaded from disk: topics and like counts per item."""

    item_ids: list[int]
    item_topics: list[list[str]]   # >= 1 topic name per item
    likes: np.ndarray              # (n_items,) non-negative ints
    topic_names: list[str]         # sorted topic universe

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_topics(self) -> int:
        return len(self.topic_names)

    def topic_index(self, name: str) -> int:
        return self.topic_names.index(name)

    def supports(self) -> list[np.ndarray]:
        """Topic-index support per item, in file order."""
        index = {name: i for i, name in enumerate(self.topic_names)}
        return [
            np.array(sorted(index[t] for t in topics), dtype=np.int64)
            for topics in self.item_topics
        ]


def load_catalog_file(path: str | Path) -> CatalogFile:
    """Read a line-delimited catalog: one JSON record per item."""
    item_ids, item_topics, likes = [], [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: not a JSON record: {exc}") from exc
        try:
            item_id = int(record["item"])
            topics = list(record["topics"])
            like_count = int(record["likes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(
                f"{path}:{lineno}: expected fields item, topics, likes"
            ) from exc
        if not topics:
            raise ValueError(f"{path}:{lineno}: item {item_id} has no topics")
        if like_count < 0:
            raise ValueError(f"{path}:{lineno}: negative like count")
        item_ids.append(item_id)
        item_topics.append([str(t) for t in topics])
        likes.append(like_count)
    if not item_ids:
        raise ValueError(f"{path}: empty catalog")
    topic_names = sorted({t for topics in item_topics for t in topics})
    return CatalogFile(
        item_ids=item_ids,
        item_topics=item_topics,
        likes=np.asarray(likes, dtype=np.int64),
        topic_names=topic_names,
    )


def compute_topic_prior(catalog: CatalogFile) -> np.ndarray:
    """Per-topic probability proportional to the mean like count of the
    topic's items."""
    mean_likes = np.zeros(catalog.n_topics, dtype=np.float64)
    for j, name in enumerate(catalog.topic_names):
        member = [i for i, topics in enumerate(catalog.item_topics) if name in topics]
        if not member:
            raise ValueError(f"topic {name!r} has no items")
        mean_likes[j] = catalog.likes[member].mean()
    total = mean_likes.sum()
    if total <= 0.0:
        raise ValueError("catalog has no likes; topic prior undefined")
    return mean_likes / total


def example_catalog_path() -> Path:
    """Small synthetic catalog shipped with the package."""
    return Path(__file__).parent / "data" / "example_catalog.jsonl"


def make_semi_synthetic_env(
    catalog_file: CatalogFile,
    seed: int = 0,
    base: SimulatorConfig | None = None,
    name: str = "SemiSynthetic",
) -> Simulator:
    """Engine whose item supports come from a catalog file and whose users are
    drawn with a likes-based topic prior.

    Item embedding values are still drawn uniformly on the fixed support and
    unit-normalized; supports larger than the synthetic 2-3 topic range are
    allowed. Dimensions are taken from the catalog.
    """
    template = base if base is not None else SimulatorConfig(
        master_seed=seed, **ENVIRONMENTS["SlateTopK-Bored"]
    )
    config = template.replace(
        n_items=catalog_file.n_items,
        n_topics=catalog_file.n_topics,
        master_seed=seed,
    )
    catalog_seq = np.random.SeedSequence(config.master_seed).spawn(3)[0]
    rng = np.random.default_rng(catalog_seq)
    supports = catalog_file.supports()
    vectors = np.empty((config.n_items, config.n_topics), dtype=np.float64)
    for i, support in enumerate(supports):
        vectors[i] = sample_embedding(rng, config.n_topics, (), support=support)
    catalog = Catalog(
        vectors=vectors, main_topics=vectors.argmax(axis=1).astype(np.int64)
    )
    prior = compute_topic_prior(catalog_file)
    return Simulator(
        config,
        catalog=catalog,
        user_sampler=lambda r: sample_user(r, config.n_topics, topic_prior=prior),
        name=name,
    )
