"""LLC converter parameter tuning: first-harmonic model, RL environment,
PPO agent, baselines, and evaluation reports."""

from .circuit import (
    LOSSLESS,
    CircuitParams,
    LossModel,
    OperatingPointResult,
    TankResponse,
    ValidationError,
    resonant_frequency,
    simulate_operating_point,
    tank_response,
)
from .environment import (
    EpisodeConfig,
    LlcEnv,
    TargetSpec,
    power_reward,
    scale_power_reward,
    shape_action,
    total_reward,
)
from .ppo import PpoAgent, PpoConfig, Trajectory, compute_gae
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .baselines import BaselineResult, hill_climb, random_search
from .config import RunConfig, config_hash, load_run_config
from .training import collect_batch, evaluate_policy, run_training
from .evaluation import EvalReport, GridSpec, grid_eval, trace_episode

__version__ = "0.1.0"

__all__ = [
    "LOSSLESS",
    "BaselineResult",
    "CheckpointError",
    "CircuitParams",
    "EpisodeConfig",
    "EvalReport",
    "GridSpec",
    "LlcEnv",
    "LossModel",
    "OperatingPointResult",
    "PpoAgent",
    "PpoConfig",
    "RunConfig",
    "TankResponse",
    "TargetSpec",
    "Trajectory",
    "ValidationError",
    "collect_batch",
    "compute_gae",
    "config_hash",
    "evaluate_policy",
    "grid_eval",
    "hill_climb",
    "load_checkpoint",
    "load_run_config",
    "power_reward",
    "random_search",
    "resonant_frequency",
    "run_training",
    "save_checkpoint",
    "scale_power_reward",
    "shape_action",
    "simulate_operating_point",
    "tank_response",
    "total_reward",
    "trace_episode",
]
