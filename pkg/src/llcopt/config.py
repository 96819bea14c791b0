"""Run configuration: YAML schema, defaults, and provenance hashing.

A run file has four optional sections; omitted keys fall back to the
defaults shown in the README:

    environment:  steps_per_episode, reward_threshold
    loss_model:   r_lr, r_cr, r_lm
    ppo:          learning_rate, clip_eps, gamma, gae_lambda,
                  epochs_per_batch, batch_episodes, minibatch_size,
                  value_coeff, entropy_coeff
    training:     episodes, seeds, workers, checkpoint_interval

Every output file a run produces is stamped with config_hash() of the
resolved configuration so results stay traceable to their settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .circuit import LossModel, ValidationError
from .environment import EpisodeConfig
from .ppo import PpoConfig


@dataclass(frozen=True)
class RunConfig:
    episodes: int = 10000
    seeds: tuple[int, ...] = (0,)
    workers: int = 1
    checkpoint_interval: int = 25
    ppo: PpoConfig = field(default_factory=PpoConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    loss: LossModel = field(default_factory=LossModel)

    def validate(self) -> None:
        if self.episodes < 0:
            raise ValidationError(f"episodes must be >= 0, got {self.episodes}")
        if not self.seeds:
            raise ValidationError("need at least one seed")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.checkpoint_interval < 1:
            raise ValidationError(f"checkpoint_interval must be >= 1, got {self.checkpoint_interval}")
        self.ppo.validate()
        self.episode.validate()
        self.loss.validate()


_SECTION_KEYS = {
    "environment": {"steps_per_episode", "reward_threshold"},
    "loss_model": {"r_lr", "r_cr", "r_lm"},
    "ppo": {
        "learning_rate", "clip_eps", "gamma", "gae_lambda", "epochs_per_batch",
        "batch_episodes", "minibatch_size", "value_coeff", "entropy_coeff",
        "log_std_init", "lr_decay_to",
    },
    "training": {"episodes", "seeds", "workers", "checkpoint_interval"},
}


def _check_keys(section: str, data: dict) -> None:
    unknown = set(data) - _SECTION_KEYS[section]
    if unknown:
        raise ValidationError(f"unknown keys in section {section!r}: {sorted(unknown)}")


def run_config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError(f"config root must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ValidationError(f"unknown config sections: {sorted(unknown)}")
    env = raw.get("environment") or {}
    loss = raw.get("loss_model") or {}
    ppo = raw.get("ppo") or {}
    training = raw.get("training") or {}
    for name, data in (("environment", env), ("loss_model", loss),
                       ("ppo", ppo), ("training", training)):
        if not isinstance(data, dict):
            raise ValidationError(f"section {name!r} must be a mapping")
        _check_keys(name, data)

    episode = EpisodeConfig(
        steps=int(env.get("steps_per_episode", 50)),
        reward_threshold=float(env.get("reward_threshold", 0.815)),
    )
    cfg = RunConfig(
        episodes=int(training.get("episodes", 10000)),
        seeds=tuple(int(s) for s in training.get("seeds", [0])),
        workers=int(training.get("workers", 1)),
        checkpoint_interval=int(training.get("checkpoint_interval", 25)),
        ppo=PpoConfig(**{k: v for k, v in ppo.items()}),
        episode=episode,
        loss=LossModel(**{k: float(v) for k, v in loss.items()}),
    )
    cfg.validate()
    return cfg


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return run_config_from_dict(raw or {})


def as_dict(cfg: RunConfig) -> dict:
    return {
        "environment": {
            "steps_per_episode": cfg.episode.steps,
            "reward_threshold": cfg.episode.reward_threshold,
        },
        "loss_model": {"r_lr": cfg.loss.r_lr, "r_cr": cfg.loss.r_cr, "r_lm": cfg.loss.r_lm},
        "ppo": dict(vars(cfg.ppo)),
        "training": {
            "episodes": cfg.episodes,
            "seeds": list(cfg.seeds),
            "workers": cfg.workers,
            "checkpoint_interval": cfg.checkpoint_interval,
        },
    }


def config_hash(cfg: RunConfig) -> str:
    """Short digest of the resolved configuration for file headers."""
    canonical = json.dumps(as_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
