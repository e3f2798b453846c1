"""Simulator configuration and its key = value file format."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

OBSERVABILITY_MODES = ("full", "partial")
BOREDOM_VARIANTS = ("none", "loss_of_interest", "churn_and_return")


class ConfigError(ValueError):
    """Raised for invalid simulator or experiment configuration."""


@dataclass
class SimulatorConfig:
    """All knobs of the simulation engine.

    Boredom bookkeeping fields are always present because the observation
    layout (recent-topic histogram, timeout vector) uses them even when
    ``boredom_variant`` is ``"none"``.
    """

    session_length: int = 100        # agent steps per session
    slate_size: int = 10             # items recommended per step
    n_items: int = 1000
    n_topics: int = 10
    lambda_scale: float = 100.0      # steepness of the attractiveness sigmoid
    mu_shift: float = 0.65           # midpoint of the attractiveness sigmoid
    alpha_range: float = 1.0         # attractiveness cap
    epsilon_decay: float = 0.85      # per-rank examination decay
    boredom_recent_clicks: int = 10  # max clicks considered when detecting boredom
    boredom_window: int = 5          # recency window in steps; also the timeout length
    boredom_threshold: int = 5       # same-main-topic click count that triggers boredom
    influence_weight: float = 1.0    # weight of the previous user embedding; 1.0 = no drift
    observability: str = "full"
    boredom_variant: str = "none"
    master_seed: int = 0
    renormalize_user: bool = True    # restore unit norm after an influence update
    strict_boredom_threshold: bool = False  # trigger on count > threshold instead of >=

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        positive = {
            "session_length": self.session_length,
            "slate_size": self.slate_size,
            "n_items": self.n_items,
            "n_topics": self.n_topics,
            "boredom_recent_clicks": self.boredom_recent_clicks,
            "boredom_window": self.boredom_window,
            "boredom_threshold": self.boredom_threshold,
        }
        for name, value in positive.items():
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.slate_size > self.n_items:
            raise ConfigError(
                f"slate_size ({self.slate_size}) cannot exceed n_items ({self.n_items})"
            )
        if self.boredom_threshold > self.boredom_recent_clicks:
            raise ConfigError(
                f"boredom_threshold ({self.boredom_threshold}) cannot exceed "
                f"boredom_recent_clicks ({self.boredom_recent_clicks})"
            )
        if not 0.0 <= self.alpha_range <= 1.0:
            raise ConfigError(f"alpha_range must be in [0, 1], got {self.alpha_range}")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError(f"epsilon_decay must be in (0, 1], got {self.epsilon_decay}")
        if not 0.0 <= self.influence_weight <= 1.0:
            raise ConfigError(
                f"influence_weight must be in [0, 1], got {self.influence_weight}"
            )
        if self.observability not in OBSERVABILITY_MODES:
            raise ConfigError(
                f"observability must be one of {OBSERVABILITY_MODES}, got {self.observability!r}"
            )
        if self.boredom_variant not in BOREDOM_VARIANTS:
            raise ConfigError(
                f"boredom_variant must be one of {BOREDOM_VARIANTS}, got {self.boredom_variant!r}"
            )

    @property
    def full_observation_dim(self) -> int:
        return 3 * self.n_topics

    @property
    def partial_observation_dim(self) -> int:
        return 2 * self.slate_size + self.n_topics

    @property
    def observation_dim(self) -> int:
        if self.observability == "full":
            return self.full_observation_dim
        return self.partial_observation_dim

    @property
    def is_static(self) -> bool:
        """True when neither boredom nor influence can alter the user state."""
        return self.boredom_variant == "none" and self.influence_weight == 1.0

    def replace(self, **changes) -> "SimulatorConfig":
        return dataclasses.replace(self, **changes)


def write_config(config: SimulatorConfig, path: str | Path) -> None:
    """Write one ``name = value`` line per field; values are JSON literals."""
    lines = [
        f"{field.name} = {json.dumps(getattr(config, field.name))}"
        for field in dataclasses.fields(config)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_config(path: str | Path) -> SimulatorConfig:
    """Parse a file written by :func:`write_config`. Round-trips bit-exactly."""
    known = {f.name for f in dataclasses.fields(SimulatorConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'name = value', got {raw!r}")
        name, _, literal = line.partition("=")
        name = name.strip()
        if name not in known:
            raise ConfigError(f"{path}:{lineno}: unknown field {name!r}")
        try:
            values[name] = json.loads(literal.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {name}: {exc}") from exc
    return SimulatorConfig(**values)
