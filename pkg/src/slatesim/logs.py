"""Replayable interaction logs for offline click-model and MF training.

A log is line-delimited JSON: a self-describing header record followed by one
record per step. Full-layout observation snapshots are recorded even for
partially observable environments, since offline models train on the ideal
user state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import Simulator
from .policies import Policy


@dataclass
class LogRow:
    session: int
    step: int
    observation: np.ndarray   # full-layout snapshot of the state the clicks saw
    items: np.ndarray         # slate in rank order
    ranks: np.ndarray         # permutation of 1..slate_size
    clicks: np.ndarray        # booleans, same order as items


@dataclass
class InteractionLog:
    header: dict
    rows: list[LogRow] = field(default_factory=list)

    @property
    def slate_size(self) -> int:
        return int(self.header["slate_size"])

    @property
    def n_items(self) -> int:
        return int(self.header["n_items"])

    @property
    def obs_dim(self) -> int:
        return int(self.header["obs_dim"])

    def validate(self) -> None:
        expected = set(range(1, self.slate_size + 1))
        for row in self.rows:
            if set(row.ranks.tolist()) != expected:
                raise ValueError(
                    f"session {row.session} step {row.step}: ranks are not a "
                    f"permutation of 1..{self.slate_size}"
                )


def generate_log(
    env: Simulator,
    policy: Policy,
    n_sessions: int,
    seed: int = 0,
) -> InteractionLog:
    """Roll out full episodes and record every step.

    Session resets are seeded from ``seed``, so regenerating with the same
    environment, policy, and seed reproduces the log exactly.
    """
    cfg = env.config
    header = {
        "kind": "interaction_log",
        "env": env.name,
        "seed": seed,
        "policy": policy.name,
        "n_sessions": n_sessions,
        "slate_size": cfg.slate_size,
        "n_items": cfg.n_items,
        "obs_dim": cfg.full_observation_dim,
    }
    log = InteractionLog(header=header)
    ranks = np.arange(1, cfg.slate_size + 1, dtype=np.int64)
    session_seeds = np.random.SeedSequence(seed).spawn(n_sessions)
    for session, session_seed in enumerate(session_seeds):
        observation, _ = env.reset(seed=session_seed)
        for step in range(1, cfg.session_length + 1):
            snapshot = env.full_observation()
            slate = policy.act(observation, env)
            outcome = env.step(slate)
            log.rows.append(
                LogRow(
                    session=session,
                    step=step,
                    observation=snapshot,
                    items=np.asarray(slate, dtype=np.int64),
                    ranks=ranks.copy(),
                    clicks=outcome.info["clicks"].copy(),
                )
            )
            observation = outcome.observation
            if outcome.terminated:
                break
    return log


def write_log(log: InteractionLog, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(log.header) + "\n")
        for row in log.rows:
            fh.write(
                json.dumps(
                    {
                        "session": row.session,
                        "step": row.step,
                        "obs": row.observation.tolist(),
                        "items": row.items.tolist(),
                        "ranks": row.ranks.tolist(),
                        "clicks": row.clicks.astype(int).tolist(),
                    }
                )
                + "\n"
            )


def read_log(path: str | Path) -> InteractionLog:
    with open(path) as fh:
        first = fh.readline()
        if not first:
            raise ValueError(f"{path}: empty file")
        header = json.loads(first)
        if header.get("kind") != "interaction_log":
            raise ValueError(f"{path}: missing interaction_log header record")
        rows = []
        for line in fh:
            record = json.loads(line)
            rows.append(
                LogRow(
                    session=int(record["session"]),
                    step=int(record["step"]),
                    observation=np.asarray(record["obs"], dtype=np.float64),
                    items=np.asarray(record["items"], dtype=np.int64),
                    ranks=np.asarray(record["ranks"], dtype=np.int64),
                    clicks=np.asarray(record["clicks"], dtype=bool),
                )
            )
    return InteractionLog(header=header, rows=rows)


def log_arrays(log: InteractionLog) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack rows into (sessions, observations, items, ranks, clicks) arrays."""
    if not log.rows:
        raise ValueError("log has no rows")
    sessions = np.array([r.session for r in log.rows], dtype=np.int64)
    observations = np.stack([r.observation for r in log.rows])
    items = np.stack([r.items for r in log.rows])
    ranks = np.stack([r.ranks for r in log.rows])
    clicks = np.stack([r.clicks for r in log.rows])
    return sessions, observations, items, ranks, clicks
