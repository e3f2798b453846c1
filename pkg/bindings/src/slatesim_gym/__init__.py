"""Gymnasium-compatible bindings for the slatesim engine.

Exposes each built-in environment through the standard five-tuple ``step`` /
``(observation, info)`` ``reset`` interface with space descriptors, under the
engine's own environment names:

    import slatesim_gym
    env = slatesim_gym.make("SlateTopK-Bored", seed=0)
    observation, info = env.reset(seed=42)
    observation, reward, terminated, truncated, info = env.step(action)

Observations, rewards, termination flags, and ``info["scores"]`` are
byte-for-byte those of the wrapped engine; errors surface as typed
exceptions and never corrupt engine state.
"""
from __future__ import annotations

import numpy as np

from slatesim.engine import SimulationError, Simulator
from slatesim.envs import ENVIRONMENTS, make_env

from .spaces import Box, MultiDiscrete

__version__ = "0.1.0"

__all__ = ["BoundEnv", "Box", "ClosedEnvError", "MultiDiscrete", "make", "registry"]


class ClosedEnvError(RuntimeError):
    """Operation on a handle whose engine has been released."""


class BoundEnv:
    """One handle per engine instance; confined to a single thread.

    The action space is the set of duplicate-free item-id vectors of slate
    length; the observation space follows the engine's configured layout.
    """

    metadata = {"render_modes": []}

    def __init__(self, simulator: Simulator):
        self._simulator = simulator
        cfg = simulator.config
        self.action_space = MultiDiscrete(np.full(cfg.slate_size, cfg.n_items))
        if cfg.observability == "full":
            low = np.zeros(cfg.full_observation_dim)
            high = np.ones(cfg.full_observation_dim)
        else:
            slate, topics = cfg.slate_size, cfg.n_topics
            low = np.zeros(cfg.partial_observation_dim)
            high = np.concatenate(
                [np.full(slate, cfg.n_items - 1), np.ones(slate), np.ones(topics)]
            )
        self.observation_space = Box(low=low, high=high, shape=low.shape)
        self.reward_range = (0, cfg.slate_size)
        self.spec_name = simulator.name

    # -- environment API -------------------------------------------------------

    def reset(self, *, seed: int | None = None, options: dict | None = None):
        simulator = self._require_open()
        observation, info = simulator.reset(seed=seed)
        return observation, info

    def step(self, action):
        simulator = self._require_open()
        outcome = simulator.step(action)
        return (
            outcome.observation,
            outcome.reward,
            outcome.terminated,
            False,
            outcome.info,
        )

    def render(self):
        return None

    def close(self) -> None:
        self._simulator = None

    # -- engine passthroughs used by oracle policies and logging ----------------

    @property
    def unwrapped(self) -> Simulator:
        return self._require_open()

    def _require_open(self) -> Simulator:
        if self._simulator is None:
            raise ClosedEnvError("environment handle is closed")
        return self._simulator


def registry() -> list[str]:
    """Environment ids available to :func:`make`."""
    return list(ENVIRONMENTS)


def make(
    name: str,
    seed: int = 0,
    lambda_scale: float | None = None,
    influence_weight: float | None = None,
) -> BoundEnv:
    """Instantiate a bound environment by its registered name."""
    return BoundEnv(make_env(name, seed, lambda_scale, influence_weight))
