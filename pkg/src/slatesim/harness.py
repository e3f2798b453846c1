"""Experiment orchestration: seeded runs, validation checkpoints, sweeps,
score dumps, throughput benchmarking, and metric emission.

A training step is one agent recommendation; episodes roll over every
``session_length`` steps. Validation users come from a seed stream disjoint
from training, derived from (run seed, a fixed tag, checkpoint, episode), so
train and validation users never coincide and sweeps with matching seeds are
bitwise comparable across environments that share a configuration.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError
from .engine import Simulator
from .envs import make_env
from .mf import read_item_embeddings
from .policies import (
    GreedyOraclePolicy,
    LinearSoftmaxPolicy,
    MixtureLoggingPolicy,
    Policy,
    RandomPolicy,
    ReverseOraclePolicy,
)

VALIDATION_TAG = 0x56414C  # namespaces validation seed streams away from training
TRAINING_TAG = 0x545249

# two-sided 97.5% Student-t quantiles for small sample sizes
_T_975 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
    8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145,
    15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086,
    25: 2.060, 30: 2.042,
}


def t_critical(df: int) -> float:
    if df <= 0:
        return 0.0
    if df in _T_975:
        return _T_975[df]
    for bound in sorted(_T_975):
        if df <= bound:
            return _T_975[bound]
    return 1.96


def ci95_halfwidth(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(t_critical(len(values) - 1) * values.std(ddof=1) / np.sqrt(len(values)))


@dataclass
class ExperimentConfig:
    env_name: str
    policy_name: str
    seeds: tuple[int, ...] = (0, 1, 2)
    n_training_steps: int = 100_000
    validation_every: int = 50_000
    n_validation_episodes: int = 25
    lambda_scale: float | None = None
    influence_weight: float | None = None
    policy_kwargs: dict = field(default_factory=dict)
    item_embeddings_path: str | None = None
    include_initial_checkpoint: bool = True

    def validate(self) -> None:
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for name in ("n_training_steps", "validation_every", "n_validation_episodes"):
            if getattr(self, name) < 0 or (name != "n_training_steps" and getattr(self, name) <= 0):
                raise ConfigError(f"{name} must be positive")


@dataclass
class MetricsRecord:
    env: str
    policy: str
    seed: int
    checkpoint: int
    training_step: int
    mean_return: float
    ci_return: float
    mean_boredom: float
    ci_boredom: float
    n_episodes: int


@dataclass
class AggregateRecord:
    env: str
    policy: str
    checkpoint: int
    training_step: int
    mean_return: float
    ci_return: float
    mean_boredom: float
    ci_boredom: float
    n_seeds: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[MetricsRecord]
    aggregates: list[AggregateRecord]

    def final_aggregate(self) -> AggregateRecord:
        return self.aggregates[-1]


POLICY_REGISTRY = ("random", "greedy_oracle", "reverse_oracle", "mixture_logging",
                   "reinforce")


def make_policy(
    name: str,
    env: Simulator,
    seed: int = 0,
    item_embeddings_path: str | None = None,
    **kwargs,
) -> Policy:
    cfg = env.config
    item_vectors = None
    if item_embeddings_path is not None:
        item_vectors = read_item_embeddings(item_embeddings_path).vectors
    if name == "random":
        return RandomPolicy(seed=seed)
    if name == "greedy_oracle":
        return GreedyOraclePolicy(item_vectors=item_vectors)
    if name == "reverse_oracle":
        return ReverseOraclePolicy(item_vectors=item_vectors)
    if name == "mixture_logging":
        return MixtureLoggingPolicy(seed=seed)
    if name == "reinforce":
        defaults = dict(
            learning_rate=20.0,
            gamma=0.0 if cfg.is_static else 0.8,
            buffer_size=100,
        )
        defaults.update(kwargs)
        return LinearSoftmaxPolicy(
            n_items=cfg.n_items,
            obs_dim=cfg.observation_dim,
            slate_size=cfg.slate_size,
            seed=seed,
            **defaults,
        )
    raise ConfigError(f"unknown policy {name!r}; known: {', '.join(POLICY_REGISTRY)}")


def run_episode(
    env: Simulator, policy: Policy, reset_seed, learn: bool = False
) -> tuple[int, int]:
    """One full session; returns (return, boredom-step count)."""
    observation, _ = env.reset(seed=reset_seed)
    if learn:
        policy.begin_episode()
    total = 0
    bored_steps = 0
    while not env.terminated:
        slate = policy.act(observation, env)
        outcome = env.step(slate)
        total += outcome.reward
        if outcome.info["bored_topics"] > 0:
            bored_steps += 1
        if learn:
            policy.record(observation, slate, outcome.reward, outcome.info["clicks"])
        observation = outcome.observation
    if learn:
        policy.end_episode()
    return total, bored_steps


def boredom_metric(bored_topic_counts: list[int]) -> int:
    """Number of agent steps during which at least one topic was bored."""
    return sum(1 for count in bored_topic_counts if count > 0)


def _validation_seed(seed: int, checkpoint: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, VALIDATION_TAG, checkpoint, episode])


def validate_policy(
    env: Simulator,
    policy: Policy,
    seed: int,
    checkpoint: int,
    n_episodes: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Frozen-policy evaluation on fresh users; never updates parameters."""
    returns = np.empty(n_episodes)
    boredoms = np.empty(n_episodes)
    for episode in range(n_episodes):
        ret, bored = run_episode(
            env, policy, _validation_seed(seed, checkpoint, episode), learn=False
        )
        returns[episode] = ret
        boredoms[episode] = bored
    return returns, boredoms


def _run_seed(config: ExperimentConfig, seed: int) -> list[MetricsRecord]:
    """All checkpoints for one seed; self-contained so seeds can run in
    separate worker processes without sharing state or rng streams."""
    records: list[MetricsRecord] = []
    n_checkpoints = config.n_training_steps // config.validation_every if config.n_training_steps else 0
    checkpoint_ids = list(range(0 if config.include_initial_checkpoint else 1,
                                n_checkpoints + 1))
    if not checkpoint_ids:
        checkpoint_ids = [0]
    env = make_env(config.env_name, seed, config.lambda_scale, config.influence_weight)
    val_env = make_env(config.env_name, seed, config.lambda_scale, config.influence_weight)
    policy = make_policy(
        config.policy_name, env, seed=seed,
        item_embeddings_path=config.item_embeddings_path,
        **config.policy_kwargs,
    )
    train_seeds = iter_training_seeds(seed)
    steps_done = 0
    for checkpoint in checkpoint_ids:
        target = checkpoint * config.validation_every
        if policy.is_learning:
            while steps_done < target:
                run_episode(env, policy, next(train_seeds), learn=True)
                steps_done += env.config.session_length
        returns, boredoms = validate_policy(
            val_env, policy, seed, checkpoint, config.n_validation_episodes
        )
        records.append(
            MetricsRecord(
                env=config.env_name,
                policy=config.policy_name,
                seed=seed,
                checkpoint=checkpoint,
                training_step=target if policy.is_learning else 0,
                mean_return=float(returns.mean()),
                ci_return=ci95_halfwidth(returns),
                mean_boredom=float(boredoms.mean()),
                ci_boredom=ci95_halfwidth(boredoms),
                n_episodes=config.n_validation_episodes,
            )
        )
    return records


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Interleave training and validation checkpoints for every seed.

    Non-learning policies skip the training steps but are still evaluated at
    every scheduled checkpoint. With ``workers`` > 1, seeds run in parallel
    worker processes; results are identical to the serial order because every
    seed owns its environments, policy, and rng streams.
    """
    config.validate()
    records: list[MetricsRecord] = []
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for seed_records in pool.map(
                _run_seed, [config] * len(config.seeds), config.seeds
            ):
                records.extend(seed_records)
    else:
        for seed in config.seeds:
            records.extend(_run_seed(config, seed))
    return ExperimentResult(
        config=config, records=records, aggregates=aggregate_records(records)
    )


def iter_training_seeds(seed: int):
    episode = 0
    while True:
        yield np.random.SeedSequence([seed, TRAINING_TAG, episode])
        episode += 1


def aggregate_records(records: list[MetricsRecord]) -> list[AggregateRecord]:
    out = []
    keys = sorted({(r.env, r.policy, r.checkpoint, r.training_step) for r in records},
                  key=lambda k: (k[0], k[1], k[2]))
    for env, policy, checkpoint, step in keys:
        group = [r for r in records
                 if (r.env, r.policy, r.checkpoint, r.training_step) == (env, policy, checkpoint, step)]
        rets = np.array([r.mean_return for r in group])
        bors = np.array([r.mean_boredom for r in group])
        out.append(
            AggregateRecord(
                env=env, policy=policy, checkpoint=checkpoint, training_step=step,
                mean_return=float(rets.mean()), ci_return=ci95_halfwidth(rets),
                mean_boredom=float(bors.mean()), ci_boredom=ci95_halfwidth(bors),
                n_seeds=len(group),
            )
        )
    return out


SWEEP_PARAMETERS = ("lambda", "omega")


@dataclass
class SweepResult:
    parameter: str
    values: tuple[float, ...]
    results: dict[float, ExperimentResult]

    def table(self) -> list[dict]:
        rows = []
        for value in self.values:
            final = self.results[value].final_aggregate()
            rows.append(
                {
                    "parameter": self.parameter,
                    "value": value,
                    "env": final.env,
                    "policy": final.policy,
                    "mean_return": final.mean_return,
                    "ci_return": final.ci_return,
                    "mean_boredom": final.mean_boredom,
                    "ci_boredom": final.ci_boredom,
                    "n_seeds": final.n_seeds,
                }
            )
        return rows


def sweep(config: ExperimentConfig, parameter: str, values, workers: int = 1) -> SweepResult:
    """One full experiment per parameter value, same seeds throughout."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    results = {}
    for value in values:
        if parameter == "lambda":
            run_cfg = ExperimentConfig(**{**config.__dict__, "lambda_scale": float(value)})
        else:
            run_cfg = ExperimentConfig(**{**config.__dict__, "influence_weight": float(value)})
        results[float(value)] = run_experiment(run_cfg, workers=workers)
    return SweepResult(parameter=parameter, values=tuple(float(v) for v in values),
                       results=results)


def score_distribution(
    env: Simulator,
    policy: Policy,
    n_steps: int,
    seed: int = 0,
    bins: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of the relevance scores of recommended items over ``n_steps``
    recommendations; bin edges span [0, 1]."""
    scores = np.empty(n_steps * env.config.slate_size)
    filled = 0
    episode = 0
    observation, _ = env.reset(seed=np.random.SeedSequence([seed, episode]))
    for _ in range(n_steps):
        if env.terminated:
            episode += 1
            observation, _ = env.reset(seed=np.random.SeedSequence([seed, episode]))
        outcome = env.step(policy.act(observation, env))
        slate_scores = outcome.info["scores"]
        scores[filled : filled + len(slate_scores)] = slate_scores
        filled += len(slate_scores)
        observation = outcome.observation
    counts, edges = np.histogram(scores[:filled], bins=bins, range=(0.0, 1.0))
    return counts, edges


def throughput_bench(env_name: str, n_steps: int = 50_000, seed: int = 0) -> float:
    """Steps per second driving the environment with a random policy on one
    core (affinity pinned where the platform allows)."""
    previous_affinity = None
    try:
        previous_affinity = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {min(previous_affinity)})
    except (AttributeError, OSError):
        previous_affinity = None
    try:
        env = make_env(env_name, seed)
        policy = RandomPolicy(seed=seed)
        observation, _ = env.reset(seed=np.random.SeedSequence([seed, 0]))
        episode = 0
        start = time.perf_counter()
        for _ in range(n_steps):
            if env.terminated:
                episode += 1
                observation, _ = env.reset(seed=np.random.SeedSequence([seed, episode]))
            observation = env.step(policy.act(observation, env)).observation
        elapsed = time.perf_counter() - start
    finally:
        if previous_affinity is not None:
            os.sched_setaffinity(0, previous_affinity)
    return n_steps / elapsed


# -- metric emission -----------------------------------------------------------

_RECORD_FIELDS = ["env", "policy", "seed", "checkpoint", "training_step",
                  "mean_return", "ci_return", "mean_boredom", "ci_boredom",
                  "n_episodes"]
_AGGREGATE_FIELDS = ["env", "policy", "checkpoint", "training_step",
                     "mean_return", "ci_return", "mean_boredom", "ci_boredom",
                     "n_seeds"]

EMIT_FORMATS = ("csv", "jsonl")


def emit_metrics(
    result: ExperimentResult, out_dir: str | Path, fmt: str = "csv"
) -> tuple[Path, Path]:
    """Write one per-(seed, checkpoint) file and one across-seed aggregate file."""
    if fmt not in EMIT_FORMATS:
        raise ConfigError(f"format must be one of {EMIT_FORMATS}, got {fmt!r}")
    if not result.records:
        raise ConfigError("no records to emit")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / f"metrics.{fmt}"
    aggregate_path = out_dir / f"metrics_aggregate.{fmt}"
    _write_rows(records_path, _RECORD_FIELDS,
                [r.__dict__ for r in result.records], fmt)
    _write_rows(aggregate_path, _AGGREGATE_FIELDS,
                [a.__dict__ for a in result.aggregates], fmt)
    return records_path, aggregate_path


def _write_rows(path: Path, fields: list[str], rows: list[dict], fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_value(row[k]) for k in fields})
    else:
        with open(path, "w") as fh:
            for row in rows:
                fh.write(json.dumps({k: row[k] for k in fields}) + "\n")


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    return value


def read_metrics_csv(path: str | Path) -> list[dict]:
    """Parse a metrics CSV back into typed rows; floats round-trip exactly."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if key in ("seed", "checkpoint", "training_step", "n_episodes", "n_seeds"):
                    parsed[key] = int(value)
                elif key in ("mean_return", "ci_return", "mean_boredom", "ci_boredom"):
                    parsed[key] = float(value)
                else:
                    parsed[key] = value
            out.append(parsed)
    return out
