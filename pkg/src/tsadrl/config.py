"""Run configuration: one flat record covering data, model, and loop settings.

Configs load from JSON, reject unknown keys loudly, and serialize back in a
stable form so a run directory always carries the exact settings it ran with.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError

POTENTIAL_KINDS = ("heuristic", "llm", "constant")
MODES = ("active", "full")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    mode: str = "active"
    episodes: int = 30
    n_steps: int = 25
    train_frac: float = 0.5

    # data source: a CSV path for univariate, or data+label matrices
    data_path: str | None = None
    label_path: str | None = None

    # reconstruction model
    vae_hidden: tuple[int, ...] = (64, 32)
    vae_latent: int = 8
    vae_epochs: int = 30
    vae_lr: float = 1e-3
    vae_batch_size: int = 64

    # agent
    hidden: int = 64
    lr: float = 1e-3
    gamma: float = 0.99
    buffer_capacity: int = 100_000
    batch_size: int = 64
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 50_000
    target_sync_every: int = 500
    update_every: int = 1
    warmup_steps: int = 1000

    # reconstruction-reward coefficient controller
    lambda_init: float = 0.1
    lambda_alpha: float = 0.001
    lambda_min: float = 0.0
    lambda_max: float = 2.0
    r_target_frac: float = 0.8

    # shaping potential
    potential: str = "heuristic"
    constant_potential: float = 0.0
    llm_base_url: str | None = None
    llm_model: str = "gpt-3.5-turbo"
    llm_cache_path: str | None = None

    # active labeling
    queries_per_round: int = 10
    propagate_top_k: int = 20
    propagate_conf_threshold: float = 0.9
    propagate_iters: int = 50
    propagate_sigma: float | None = None

    point_adjusted: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.potential not in POTENTIAL_KINDS:
            raise ConfigError(
                f"potential must be one of {POTENTIAL_KINDS}, got {self.potential!r}"
            )
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if not 0.0 <= self.r_target_frac <= 1.0:
            raise ConfigError(f"r_target_frac must be in [0, 1], got {self.r_target_frac}")
        if self.potential == "llm" and not self.llm_base_url:
            raise ConfigError("potential 'llm' needs llm_base_url")
        object.__setattr__(self, "vae_hidden", tuple(int(h) for h in self.vae_hidden))

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
        known = set(cls.field_names())
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["vae_hidden"] = list(self.vae_hidden)
        return out

    def with_overrides(self, **overrides) -> "RunConfig":
        known = set(self.field_names())
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return dataclasses.replace(self, **overrides)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw)


def save_config(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
