"""Baseline and learnable recommendation policies.

Oracle policies read the engine's true (masked) user state and are fully
deterministic; ties in any relevance ordering break by ascending item id.
The learnable policy is a linear-softmax scorer over the observation vector
trained with policy gradients and a top-K correction for slates.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .engine import Simulator

POLICY_NAMES_DOC = (
    "one of: random, greedy_oracle, reverse_oracle, mixture_logging, reinforce"
)


def random_slate(n_items: int, slate_size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform slate without replacement; a permutation when sizes match."""
    return rng.choice(n_items, size=slate_size, replace=False)


def _ranked_slate(scores: np.ndarray, slate_size: int, descending: bool) -> np.ndarray:
    ids = np.arange(len(scores))
    key = -scores if descending else scores
    order = np.lexsort((ids, key))  # primary: score direction, secondary: ascending id
    return order[:slate_size].astype(np.int64)


def greedy_oracle_slate(
    user_embedding: np.ndarray, item_vectors: np.ndarray, slate_size: int
) -> np.ndarray:
    """Top slate by relevance, best first."""
    return _ranked_slate(item_vectors @ user_embedding, slate_size, descending=True)


def reverse_oracle_slate(
    user_embedding: np.ndarray, item_vectors: np.ndarray, slate_size: int
) -> np.ndarray:
    """Top slate by relevance, worst first; the adversarial logging baseline."""
    return _ranked_slate(item_vectors @ user_embedding, slate_size, descending=False)


def mixture_logging_slate(
    user_embedding: np.ndarray,
    item_vectors: np.ndarray,
    slate_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per rank: fair coin between the greedy item at that rank and a uniform
    random item; collisions are resolved by re-drawing uniformly among unused
    items, which keeps the per-rank greedy share at one half up to the small
    collision mass."""
    greedy = greedy_oracle_slate(user_embedding, item_vectors, len(item_vectors))
    n_items = len(item_vectors)
    slate = np.empty(slate_size, dtype=np.int64)
    used: set[int] = set()
    for rank in range(slate_size):
        if rng.random() < 0.5:
            pick = int(greedy[rank])
        else:
            pick = int(rng.integers(n_items))
        while pick in used:
            pick = int(rng.integers(n_items))
        slate[rank] = pick
        used.add(pick)
    return slate


class Policy:
    """Minimal policy interface used by the experiment harness."""

    is_learning = False
    name = "policy"

    def act(self, observation: np.ndarray, env: Simulator) -> np.ndarray:
        raise NotImplementedError

    def begin_episode(self) -> None:
        pass

    def record(self, observation, slate, reward, clicks) -> None:
        pass

    def end_episode(self) -> None:
        pass


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, observation, env):
        return random_slate(env.config.n_items, env.config.slate_size, self.rng)


class GreedyOraclePolicy(Policy):
    """Ranks by relevance against the engine's true masked user state.

    ``item_vectors`` swaps the engine's catalog for an external embedding
    table (e.g. one learned by matrix factorization); dimensions must match
    the user state.
    """

    name = "greedy_oracle"
    _descending = True

    def __init__(self, item_vectors: np.ndarray | None = None):
        self.item_vectors = item_vectors

    def act(self, observation, env):
        user = env.effective_user_embedding()
        vectors = self.item_vectors if self.item_vectors is not None else env.catalog.vectors
        if vectors.shape[1] != len(user):
            raise ValueError(
                f"item vectors have dim {vectors.shape[1]}, user state has {len(user)}"
            )
        return _ranked_slate(vectors @ user, env.config.slate_size, self._descending)


class ReverseOraclePolicy(GreedyOraclePolicy):
    name = "reverse_oracle"
    _descending = False


class MixtureLoggingPolicy(Policy):
    name = "mixture_logging"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, observation, env):
        return mixture_logging_slate(
            env.effective_user_embedding(),
            env.catalog.vectors,
            env.config.slate_size,
            self.rng,
        )


@dataclass
class Episode:
    """Completed-episode record consumed by the policy-gradient update."""

    observations: list = field(default_factory=list)
    slates: list = field(default_factory=list)
    clicks: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.observations)


def first_click_rewards(episode: Episode) -> np.ndarray:
    """Binary per-step signal: 1 when the slate received any click."""
    return np.array([1.0 if c.any() else 0.0 for c in episode.clicks])


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


class LinearSoftmaxPolicy(Policy):
    """Slate policy with per-item logits linear in the observation.

    Slates are drawn without replacement by successive softmax
    renormalization (sampled via Gumbel top-k, which is distributionally
    identical). Updates follow the policy gradient with the slate-size
    correction K*(1-pi)^(K-1) per sampled item and the first click in the
    slate as the step reward.
    """

    is_learning = True
    name = "reinforce"

    def __init__(
        self,
        n_items: int,
        obs_dim: int,
        slate_size: int,
        learning_rate: float = 20.0,
        gamma: float = 0.0,
        buffer_size: int = 100,
        update_batch_episodes: int = 30,
        seed: int = 0,
    ):
        self.weights = np.zeros((n_items, obs_dim), dtype=np.float64)
        self.slate_size = slate_size
        self.learning_rate = learning_rate
        self.gamma = gamma
        self.buffer: deque[Episode] = deque(maxlen=buffer_size)
        self.update_batch_episodes = update_batch_episodes
        self.rng = np.random.default_rng(seed)
        self._episode: Episode | None = None

    # -- sampling --------------------------------------------------------------

    def sample_slate(
        self, observation: np.ndarray, rng: np.random.Generator | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Draw a slate without replacement; returns (slate, per-item log-probs
        under the base softmax)."""
        rng = rng or self.rng
        logits = self.weights @ observation
        keys = logits + rng.gumbel(size=len(logits))
        slate = np.argsort(-keys, kind="stable")[: self.slate_size].astype(np.int64)
        log_probs = self._log_softmax(logits)[slate]
        return slate, log_probs

    def act(self, observation, env):
        slate, _ = self.sample_slate(observation)
        return slate

    @staticmethod
    def _log_softmax(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max()
        return shifted - np.log(np.exp(shifted).sum())

    # -- episode bookkeeping ----------------------------------------------------

    def begin_episode(self):
        self._episode = Episode()

    def record(self, observation, slate, reward, clicks):
        assert self._episode is not None
        self._episode.observations.append(np.asarray(observation, dtype=np.float64))
        self._episode.slates.append(np.asarray(slate, dtype=np.int64))
        self._episode.clicks.append(np.asarray(clicks, dtype=bool))

    def end_episode(self):
        if self._episode is None or len(self._episode) == 0:
            self._episode = None
            return
        episode = self._episode
        self._episode = None
        self.buffer.append(episode)
        recent = list(self.buffer)[-self.update_batch_episodes:]
        self.update(recent)

    # -- learning ----------------------------------------------------------------

    def _step_coefficients(
        self, weights: np.ndarray, episode: Episode
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-step softmax probabilities and per-slate-item coefficients
        lambda_K * G_t computed at ``weights``."""
        obs = np.stack(episode.observations)            # (T, d)
        slates = np.stack(episode.slates)               # (T, S)
        logits = obs @ weights.T                        # (T, n_items)
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        returns = discounted_returns(first_click_rewards(episode), self.gamma)
        pi_a = np.take_along_axis(probs, slates, axis=1)          # (T, S)
        k = self.slate_size
        lam = k * (1.0 - pi_a) ** (k - 1)
        coef = lam * returns[:, None]
        return probs, pi_a, coef

    def gradient(self, weights: np.ndarray, episodes: list[Episode]) -> np.ndarray:
        """Analytic policy gradient of the surrogate objective (mean over steps)."""
        grad = np.zeros_like(weights)
        steps = 0
        for episode in episodes:
            obs = np.stack(episode.observations)
            slates = np.stack(episode.slates)
            probs, _, coef = self._step_coefficients(weights, episode)
            per_item = np.zeros_like(probs)                        # (T, n_items)
            np.add.at(per_item, (np.arange(len(slates))[:, None], slates), coef)
            per_item -= coef.sum(axis=1, keepdims=True) * probs
            grad += per_item.T @ obs
            steps += len(episode)
        return grad / steps

    def surrogate_objective(
        self, weights: np.ndarray, episodes: list[Episode],
        reference_weights: np.ndarray | None = None,
    ) -> float:
        """Sum of coef * log pi(a|s) with coefficients frozen at the reference
        weights; its exact gradient at the reference equals :meth:`gradient`."""
        ref = reference_weights if reference_weights is not None else weights
        total = 0.0
        steps = 0
        for episode in episodes:
            obs = np.stack(episode.observations)
            slates = np.stack(episode.slates)
            _, _, coef = self._step_coefficients(ref, episode)
            logits = obs @ weights.T
            logits -= logits.max(axis=1, keepdims=True)
            log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
            total += float(
                (coef * np.take_along_axis(log_probs, slates, axis=1)).sum()
            )
            steps += len(episode)
        return total / steps

    def update(self, episodes: list[Episode]) -> None:
        """One plain gradient-ascent step over the given episodes."""
        if not episodes:
            raise ValueError("update() needs at least one episode")
        self.weights += self.learning_rate * self.gradient(self.weights, episodes)


def reinforce_sample_slate(policy, observation, rng=None):
    return policy.sample_slate(observation, rng=rng)


def reinforce_update(policy, episodes):
    policy.update(episodes)
