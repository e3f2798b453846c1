"""Generative user model and the step/reset environment contract.

One :class:`Simulator` instance owns a fixed item catalog and plays out
sessions against freshly sampled users. Each step: the per-position click
probability is attractiveness times rank examination, clicks feed the
boredom detector and the influence drift, and the observation returned
describes the state the next action faces.

Three independent RNG streams (catalog, user sampling, clicks/noise) are
split off the master seed, so reseeding a session never perturbs the catalog.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimulatorConfig
from .embeddings import Catalog, generate_catalog, sample_user

CLICK_STREAM_CHILDREN = 2  # reset(seed) splits into (user, click) child streams


class SimulationError(RuntimeError):
    """Raised when the environment contract is violated (bad slate, dead session)."""


def attractiveness(
    rel: float | np.ndarray,
    lambda_scale: float,
    mu_shift: float,
    alpha_range: float,
) -> float | np.ndarray:
    """Scaled, shifted sigmoid of relevance, capped at ``alpha_range``.

    The exponent is clamped at +-500 so extreme inputs saturate instead of
    overflowing; the clamp is invisible at double precision.
    """
    z = np.clip(lambda_scale * (np.asarray(rel, dtype=np.float64) - mu_shift), -500.0, 500.0)
    out = alpha_range / (1.0 + np.exp(-z))
    return float(out) if np.isscalar(rel) or np.ndim(rel) == 0 else out


def examination(rank: int, epsilon_decay: float) -> float:
    """Probability that the user examines the slate down to ``rank`` (1-based)."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return float(epsilon_decay ** (rank - 1))


def examination_vector(slate_size: int, epsilon_decay: float) -> np.ndarray:
    return epsilon_decay ** np.arange(slate_size, dtype=np.float64)


@dataclass
class SessionState:
    """Evolving user state within one session."""

    user_base: np.ndarray           # unit-norm base embedding; never masked in place
    bored_timeouts: np.ndarray      # (n_topics,) int64; 0 = not bored
    click_history: list[tuple[int, int, int]] = field(default_factory=list)
    step_index: int = 0             # 0 before the first agent step

    def effective_user(self) -> np.ndarray:
        """Base embedding with bored topics masked out."""
        if not self.bored_timeouts.any():
            return self.user_base
        return self.user_base * (self.bored_timeouts == 0)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: int
    terminated: bool
    info: dict


def slate_click_probabilities(
    state: SessionState,
    slate: np.ndarray,
    catalog: Catalog,
    config: SimulatorConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Relevance scores and per-position click probabilities for a slate."""
    rel = catalog.vectors[slate] @ state.effective_user()
    attr = attractiveness(rel, config.lambda_scale, config.mu_shift, config.alpha_range)
    exam = examination_vector(len(slate), config.epsilon_decay)
    return rel, attr * exam


def sample_slate_clicks(
    state: SessionState,
    slate: np.ndarray,
    catalog: Catalog,
    config: SimulatorConfig,
    click_rng: np.random.Generator,
) -> np.ndarray:
    """Independent Bernoulli click per position; exactly one uniform draw each."""
    slate = _validate_slate(slate, catalog.n_items, len(slate))
    _, probs = slate_click_probabilities(state, slate, catalog, config)
    return click_rng.random(len(slate)) < probs


def recent_topic_counts(state: SessionState, config: SimulatorConfig) -> np.ndarray:
    """Main-topic counts over the most recent clicks.

    Considers clicks from the last ``boredom_window`` steps, keeping at most
    the ``boredom_recent_clicks`` most recent ones.
    """
    counts = np.zeros(config.n_topics, dtype=np.int64)
    horizon = state.step_index - config.boredom_window
    history = state.click_history
    start = len(history)
    while start > 0 and history[start - 1][0] > horizon:
        start -= 1
    start = max(start, len(history) - config.boredom_recent_clicks)
    for _, _, topic in history[start:]:
        counts[topic] += 1
    return counts


def detect_boredom(state: SessionState, config: SimulatorConfig) -> set[int]:
    """Topics whose recent same-main-topic click count reaches the threshold.

    Topics whose timeout is still running cannot re-trigger.
    """
    counts = recent_topic_counts(state, config)
    if config.strict_boredom_threshold:
        over = counts > config.boredom_threshold
    else:
        over = counts >= config.boredom_threshold
    over &= state.bored_timeouts == 0
    return set(np.nonzero(over)[0].tolist())


def apply_boredom(state: SessionState, topics: set[int], config: SimulatorConfig) -> None:
    """Start boredom timeouts. Masking happens at read time; the base embedding
    is never destroyed, so expiry restores the original components."""
    if not topics or config.boredom_variant == "none":
        return
    if config.boredom_variant == "churn_and_return":
        state.bored_timeouts[:] = config.boredom_window
    else:  # loss_of_interest
        state.bored_timeouts[list(topics)] = config.boredom_window


def apply_influence(
    state: SessionState,
    clicked_vectors: np.ndarray,
    influence_weight: float,
    renormalize: bool = True,
) -> None:
    """Drift the base embedding toward the mean of this step's clicked items.

    Skipped entirely at weight 1.0 so static sessions keep the base embedding
    bitwise unchanged.
    """
    if influence_weight >= 1.0 or len(clicked_vectors) == 0:
        return
    mean = clicked_vectors.mean(axis=0)
    updated = influence_weight * state.user_base + (1.0 - influence_weight) * mean
    if renormalize:
        norm = float(np.linalg.norm(updated))
        if norm > 0.0:
            updated = updated / norm
    state.user_base = updated


def build_observation(
    state: SessionState,
    last_slate: np.ndarray,
    last_clicks: np.ndarray,
    config: SimulatorConfig,
    mode: str | None = None,
) -> np.ndarray:
    """Observation vector for the requested mode (defaults to the config's).

    Full mode: [effective user embedding | recent-topic histogram | timeout
    vector], each of length ``n_topics``. The histogram is count/threshold
    clipped to [0, 1]; the timeout vector is remaining/window with non-bored
    topics reporting 1. Partial mode: [slate item ids | click indicators |
    histogram].
    """
    mode = mode or config.observability
    counts = recent_topic_counts(state, config)
    histogram = np.clip(counts / config.boredom_threshold, 0.0, 1.0)
    if mode == "full":
        timeouts = state.bored_timeouts
        timeout_vec = np.where(
            timeouts > 0, timeouts / config.boredom_window, 1.0
        )
        return np.concatenate([state.effective_user(), histogram, timeout_vec])
    return np.concatenate(
        [
            np.asarray(last_slate, dtype=np.float64),
            np.asarray(last_clicks, dtype=np.float64),
            histogram,
        ]
    )


def _validate_slate(slate, n_items: int, slate_size: int) -> np.ndarray:
    arr = np.asarray(slate)
    if arr.ndim != 1 or len(arr) != slate_size:
        raise SimulationError(
            f"slate must be a flat list of {slate_size} item ids, got shape {arr.shape}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(np.int64)):
            raise SimulationError("slate item ids must be integers")
    arr = arr.astype(np.int64)
    if arr.min(initial=0) < 0 or arr.max(initial=-1) >= n_items:
        raise SimulationError(f"slate item ids must be in [0, {n_items})")
    if len(np.unique(arr)) != slate_size:
        raise SimulationError("slate contains duplicate item ids")
    return arr


class Simulator:
    """Single-session recommendation environment.

    Not safe for concurrent mutation; run one instance per worker. Instances
    constructed with the same config are bitwise-identical given the same
    reset seeds and action sequences.
    """

    def __init__(
        self,
        config: SimulatorConfig,
        catalog: Catalog | None = None,
        user_sampler=None,
        name: str = "custom",
    ):
        config.validate()
        self.config = config
        self.name = name
        seq = np.random.SeedSequence(config.master_seed)
        catalog_seq, user_seq, click_seq = seq.spawn(3)
        self.catalog = catalog if catalog is not None else generate_catalog(
            config.n_items, config.n_topics, catalog_seq
        )
        if self.catalog.n_items != config.n_items or self.catalog.n_topics != config.n_topics:
            raise ValueError(
                f"catalog shape {self.catalog.vectors.shape} does not match config "
                f"({config.n_items}, {config.n_topics})"
            )
        self._user_sampler = user_sampler or (
            lambda rng: sample_user(rng, config.n_topics)
        )
        self._user_rng = np.random.default_rng(user_seq)
        self._click_rng = np.random.default_rng(click_seq)
        self._exam = examination_vector(config.slate_size, config.epsilon_decay)
        self._state: SessionState | None = None
        self._terminated = True
        self._last_slate = np.zeros(config.slate_size, dtype=np.int64)
        self._last_clicks = np.zeros(config.slate_size, dtype=bool)

    # -- environment contract -------------------------------------------------

    def reset(
        self, seed: int | np.random.SeedSequence | None = None
    ) -> tuple[np.ndarray, dict]:
        """Start a session with a fresh user.

        The first slate is a random probe issued internally: its clicks seed
        the click history and the first observation, but its reward is not
        credited and it does not consume an agent step. Passing a seed
        reseeds the user and click streams, leaving the catalog untouched.
        """
        if seed is not None:
            root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
            user_seq, click_seq = root.spawn(CLICK_STREAM_CHILDREN)
            self._user_rng = np.random.default_rng(user_seq)
            self._click_rng = np.random.default_rng(click_seq)
        cfg = self.config
        self._state = SessionState(
            user_base=self._user_sampler(self._user_rng),
            bored_timeouts=np.zeros(cfg.n_topics, dtype=np.int64),
        )
        self._terminated = False
        probe = self._click_rng.choice(cfg.n_items, size=cfg.slate_size, replace=False)
        observation, info = self._interact(probe)
        return observation, info

    def step(self, slate) -> StepOutcome:
        """Advance the session by one recommendation."""
        if self._terminated or self._state is None:
            raise SimulationError("step() on a terminated session; call reset() first")
        cfg = self.config
        slate = _validate_slate(slate, cfg.n_items, cfg.slate_size)
        self._state.step_index += 1
        observation, info = self._interact(slate)
        self._terminated = self._state.step_index >= cfg.session_length
        return StepOutcome(
            observation=observation,
            reward=int(info["clicks"].sum()),
            terminated=self._terminated,
            info=info,
        )

    # -- read-only accessors ---------------------------------------------------

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def state(self) -> SessionState:
        if self._state is None:
            raise SimulationError("no active session; call reset() first")
        return self._state

    def effective_user_embedding(self) -> np.ndarray:
        """True masked user state; intended for oracle policies and logging."""
        return self.state.effective_user().copy()

    def full_observation(self) -> np.ndarray:
        """Full-layout observation regardless of the configured observability."""
        return build_observation(
            self.state, self._last_slate, self._last_clicks, self.config, mode="full"
        )

    # -- one interaction (shared by the reset probe and agent steps) -----------

    def _interact(self, slate: np.ndarray) -> tuple[np.ndarray, dict]:
        cfg = self.config
        state = self._state
        # Clicks are sampled against the state as it stood at the start of the
        # step; timeouts tick down afterwards, so a fresh timeout of W blocks
        # exactly W subsequent steps.
        rel = self.catalog.vectors[slate] @ state.effective_user()
        attr = attractiveness(rel, cfg.lambda_scale, cfg.mu_shift, cfg.alpha_range)
        clicks = self._click_rng.random(cfg.slate_size) < attr * self._exam
        bored_now = int((state.bored_timeouts > 0).sum())

        np.subtract(
            state.bored_timeouts, 1, out=state.bored_timeouts,
            where=state.bored_timeouts > 0,
        )
        clicked_ids = slate[clicks]
        if clicked_ids.size:
            step = state.step_index
            topics = self.catalog.main_topics
            for item in clicked_ids:
                state.click_history.append((step, int(item), int(topics[item])))
        if cfg.boredom_variant != "none":
            apply_boredom(state, detect_boredom(state, cfg), cfg)
        if clicked_ids.size:
            apply_influence(
                state,
                self.catalog.vectors[clicked_ids],
                cfg.influence_weight,
                cfg.renormalize_user,
            )
        self._last_slate = slate
        self._last_clicks = clicks
        observation = build_observation(state, slate, clicks, cfg)
        info = {
            "scores": rel,
            "clicks": clicks,
            "bored_topics": bored_now,
        }
        return observation, info
