"""Derivative-free reference optimizers for the same tuning problem.

These put the agent's 50-step budget in context: random search and a
greedy hill climber, both scored with the episode reward.  One evaluation
means simulating both operation points of one parameter set, the same
unit of work as one environment step.  The climber accepts on a smoothed
reward (threshold 0) because a greedy method cannot move across the
plateau of zeros the hard threshold creates; reported rewards always use
the configured threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import PARAM_NAMES, PARAM_RANGES, CircuitParams, LossModel, simulate_operating_point
from .environment import (
    EpisodeConfig,
    TargetSpec,
    power_reward,
    scale_power_reward,
    total_reward,
)

_RESTART_PATIENCE = 500


@dataclass(frozen=True)
class BaselineResult:
    best_params: CircuitParams
    best_reward: float
    evaluations_used: int


class _Objective:
    """Scores parameter sets against one target, counting evaluations."""

    def __init__(self, target: TargetSpec, loss: LossModel, threshold: float):
        target.validate()
        self.target = target
        self.loss = loss
        self.threshold = threshold
        self.evaluations = 0

    def __call__(self, params: CircuitParams) -> tuple[float, float]:
        """Returns (thresholded reward, smooth reward) for one evaluation."""
        self.evaluations += 1
        op_1 = simulate_operating_point(params, params.f_1, self.loss)
        op_2 = simulate_operating_point(params, params.f_2, self.loss)
        r_p1 = power_reward(op_1.p_r, self.target.p_t1)
        r_p2 = power_reward(op_2.p_r, self.target.p_t2)
        hard = total_reward(
            op_1.e, op_2.e,
            scale_power_reward(r_p1, self.threshold),
            scale_power_reward(r_p2, self.threshold),
        )
        smooth = total_reward(op_1.e, op_2.e, r_p1, r_p2)
        return hard, smooth


def _random_params(rng: np.random.Generator, target: TargetSpec) -> CircuitParams:
    values = {name: rng.uniform(lo, hi) for name, (lo, hi) in PARAM_RANGES.items()}
    return CircuitParams(**values, v_in=target.v_in, r_load=target.r_load)


def random_search(
    target: TargetSpec,
    budget: int,
    seed: int = 0,
    loss: LossModel | None = None,
    episode: EpisodeConfig | None = None,
) -> BaselineResult:
    """Uniformly sample the parameter space; keep the best draw."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    objective = _Objective(
        target, loss if loss is not None else LossModel(),
        (episode or EpisodeConfig()).reward_threshold,
    )
    rng = np.random.default_rng(seed)
    best_params, best_reward = None, -1.0
    for _ in range(budget):
        candidate = _random_params(rng, target)
        reward, _ = objective(candidate)
        if reward > best_reward:
            best_params, best_reward = candidate, reward
    return BaselineResult(best_params, best_reward, objective.evaluations)


def hill_climb(
    target: TargetSpec,
    budget: int,
    step_frac: float = 0.05,
    seed: int = 0,
    loss: LossModel | None = None,
    episode: EpisodeConfig | None = None,
) -> BaselineResult:
    """Greedy single-parameter perturbation search with random restarts."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if not 0.0 < step_frac <= 0.1:
        raise ValueError(f"step_frac must be in (0, 0.1], got {step_frac}")
    objective = _Objective(
        target, loss if loss is not None else LossModel(),
        (episode or EpisodeConfig()).reward_threshold,
    )
    rng = np.random.default_rng(seed)

    current = _random_params(rng, target)
    best_reward, current_smooth = objective(current)
    best_params = current
    rejections = 0
    while objective.evaluations < budget:
        index = rng.integers(0, len(PARAM_NAMES))
        name = PARAM_NAMES[index]
        lo, hi = PARAM_RANGES[name]
        shift = rng.uniform(-step_frac, step_frac) * (hi - lo)
        value = float(np.clip(getattr(current, name) + shift, lo, hi))
        candidate = CircuitParams(**{**_as_dict(current), name: value})
        reward, smooth = objective(candidate)
        if reward > best_reward:
            best_params, best_reward = candidate, reward
        if smooth > current_smooth:
            current, current_smooth = candidate, smooth
            rejections = 0
            continue
        rejections += 1
        if rejections >= _RESTART_PATIENCE and objective.evaluations < budget:
            current = _random_params(rng, target)
            reward, current_smooth = objective(current)
            if reward > best_reward:
                best_params, best_reward = current, reward
            rejections = 0
    return BaselineResult(best_params, best_reward, objective.evaluations)


def _as_dict(params: CircuitParams) -> dict:
    return {
        "l_r": params.l_r, "l_m": params.l_m, "c_r": params.c_r, "k": params.k,
        "f_1": params.f_1, "f_2": params.f_2, "v_in": params.v_in, "r_load": params.r_load,
    }
