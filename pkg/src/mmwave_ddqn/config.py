"""Run configuration: defaults follow the two-street setup with 16-antenna BSs."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from mmwave_ddqn.channel import PropagationParams


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field."""


@dataclass
class RunConfig:
    # topology
    bs_positions: list[list[float]] = field(default_factory=lambda: [[5.0, -5.0], [-25.0, -5.0]])
    n_bs: int = 2
    n_ues: int = 2
    n_tx: int = 16
    n_rx: int = 1
    spacing_over_wavelength: float = 0.5
    tx_power_dbm: float = 30.0
    noise_dbm: float = -84.0
    codebook_size: int = 8
    # streets
    half_length: float = 50.0
    half_width: float = 4.0
    speed_min: float = 2.0
    speed_max: float = 5.0
    dt: float = 1.0
    max_steps: int = 60
    # propagation
    propagation: PropagationParams = field(default_factory=PropagationParams)
    # agents
    memory_length: int = 8
    include_locations: bool = False
    gamma: float = 0.95
    learning_rates: list[float] = field(default_factory=lambda: [0.0001, 0.005])
    epsilon_max: float = 0.9
    epsilon_min: float = 0.1
    epsilon_decay_fraction: float = 0.8
    batch_size: int = 32
    replay_capacity: int = 10_000
    target_sync_steps: int = 200
    reward_mode: str = "text"
    rate_scale: float = 20.0
    position_scale: float = 50.0
    # run control
    episodes: int = 2000
    eval_episodes: int = 100
    checkpoint_every: int = 100
    seed: int = 0
    out_dir: str = "runs/default"
    # evaluation against a model trained for another UE count; None = n_ues
    train_n_ues: int | None = None

    def __post_init__(self):
        if isinstance(self.propagation, dict):
            self.propagation = _build(PropagationParams, self.propagation, "propagation.")
        self.validate()

    def validate(self) -> None:
        for name in ("n_bs", "n_ues", "n_tx", "n_rx", "codebook_size", "memory_length",
                     "max_steps", "episodes", "eval_episodes", "checkpoint_every",
                     "batch_size", "replay_capacity", "target_sync_steps"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if len(self.bs_positions) < self.n_bs:
            raise ConfigError(f"bs_positions lists {len(self.bs_positions)} sites for n_bs={self.n_bs}")
        if any(len(p) != 2 for p in self.bs_positions):
            raise ConfigError("bs_positions entries must be [x, y] pairs")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not self.learning_rates or any(lr <= 0 for lr in self.learning_rates):
            raise ConfigError("learning_rates must be a non-empty list of positive values")
        if not 0.0 <= self.epsilon_min <= self.epsilon_max <= 1.0:
            raise ConfigError("need 0 <= epsilon_min <= epsilon_max <= 1")
        if not 0.0 < self.epsilon_decay_fraction <= 1.0:
            raise ConfigError("epsilon_decay_fraction must be in (0, 1]")
        if not 0.0 < self.speed_min <= self.speed_max:
            raise ConfigError("need 0 < speed_min <= speed_max")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.reward_mode not in ("text", "algorithm"):
            raise ConfigError(f"reward_mode must be 'text' or 'algorithm', got {self.reward_mode!r}")
        if self.train_n_ues is not None and self.train_n_ues < 1:
            raise ConfigError("train_n_ues must be >= 1")

    @property
    def model_n_ues(self) -> int:
        return self.n_ues if self.train_n_ues is None else self.train_n_ues

    def learning_rate(self, bs_id: int) -> float:
        """Per-BS learning rate; the list cycles when there are more BSs than entries."""
        return self.learning_rates[bs_id % len(self.learning_rates)]

    def epsilon_at(self, episode: int) -> float:
        """Linear decay from epsilon_max to epsilon_min, then flat."""
        span = max(1, round(self.epsilon_decay_fraction * self.episodes))
        frac = min(1.0, episode / span)
        return self.epsilon_max + (self.epsilon_min - self.epsilon_max) * frac

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data: dict, prefix: str = ""):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config field {prefix}{key}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix.rstrip('.') or cls.__name__}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, dict(data))


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read a JSON config; omitted fields keep their defaults."""
    data = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)
