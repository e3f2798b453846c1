"""Seeded simulation engine for slate and single-item recommendation."""

from .config import SimulatorConfig, ConfigError, read_config, write_config
from .embeddings import Catalog, generate_catalog, relevance, sample_user
from .engine import (
    SessionState,
    SimulationError,
    Simulator,
    StepOutcome,
    attractiveness,
    examination,
)
from .envs import (
    ENVIRONMENTS,
    CatalogFile,
    compute_topic_prior,
    env_config,
    example_catalog_path,
    list_envs,
    load_catalog_file,
    make_env,
    make_semi_synthetic_env,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    emit_metrics,
    make_policy,
    run_experiment,
    score_distribution,
    sweep,
    throughput_bench,
)
from .logs import InteractionLog, generate_log, read_log, write_log
from .policies import (
    GreedyOraclePolicy,
    LinearSoftmaxPolicy,
    MixtureLoggingPolicy,
    RandomPolicy,
    ReverseOraclePolicy,
)

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CatalogFile",
    "ConfigError",
    "ENVIRONMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "GreedyOraclePolicy",
    "InteractionLog",
    "LinearSoftmaxPolicy",
    "MixtureLoggingPolicy",
    "RandomPolicy",
    "ReverseOraclePolicy",
    "SessionState",
    "SimulationError",
    "Simulator",
    "SimulatorConfig",
    "StepOutcome",
    "attractiveness",
    "compute_topic_prior",
    "emit_metrics",
    "env_config",
    "examination",
    "example_catalog_path",
    "generate_catalog",
    "generate_log",
    "list_envs",
    "load_catalog_file",
    "make_env",
    "make_policy",
    "make_semi_synthetic_env",
    "read_config",
    "read_log",
    "relevance",
    "run_experiment",
    "sample_user",
    "score_distribution",
    "sweep",
    "throughput_bench",
    "write_config",
    "write_log",
]
