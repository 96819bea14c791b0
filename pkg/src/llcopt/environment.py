"""Episodic tuning environment around the converter model.

One episode is a fixed number of parameter-update steps toward a target
configuration (two output powers plus the fixed input voltage and load).
The six tunable quantities start at uniform random values, every step
nudges them by at most 10% of their range, and a single reward is paid out
at the final step: the mean of the two efficiencies and the two scaled
power rewards, or zero if either output power misses its admission
threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .circuit import (
    PARAM_NAMES,
    PARAM_RANGES,
    RLOAD_RANGE,
    VIN_RANGE,
    CircuitParams,
    LossModel,
    OperatingPointResult,
    ValidationError,
    simulate_operating_point,
)

TARGET_P1_RANGE = (100.0, 300.0)
TARGET_P2_RANGE = (4000.0, 5000.0)

POWER_SCALE = 5000.0
STATE_SIZE = 16
ACTION_SIZE = 6
MAX_STEP_FRACTION = 0.10

_RANGE_LO = np.array([PARAM_RANGES[n][0] for n in PARAM_NAMES])
_RANGE_HI = np.array([PARAM_RANGES[n][1] for n in PARAM_NAMES])
_RANGE_WIDTH = _RANGE_HI - _RANGE_LO

TRACE_COLUMNS = (
    "step", "l_r", "l_m", "c_r", "k", "f_1", "f_2",
    "p_r1", "p_r2", "e_1", "e_2", "reward",
)


@dataclass(frozen=True)
class TargetSpec:
    """A user- or training-time converter configuration to hit."""

    p_t1: float
    p_t2: float
    v_in: float
    r_load: float

    def validate(self) -> None:
        bounds = {
            "p_t1": TARGET_P1_RANGE,
            "p_t2": TARGET_P2_RANGE,
            "v_in": VIN_RANGE,
            "r_load": RLOAD_RANGE,
        }
        for name, (lo, hi) in bounds.items():
            value = getattr(self, name)
            if not (math.isfinite(value) and lo <= value <= hi):
                raise ValidationError(f"{name}={value!r} outside [{lo!r}, {hi!r}]")


@dataclass(frozen=True)
class EpisodeConfig:
    steps: int = 50
    reward_threshold: float = 0.815
    seed: int | None = None

    def validate(self) -> None:
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 <= self.reward_threshold < 1.0:
            raise ValidationError(
                f"reward_threshold must be in [0, 1), got {self.reward_threshold}"
            )


def power_reward(p_r: float, p_t: float) -> float:
    """1 minus the normalized power deviation |p_r - p_t| / (p_r + p_t)."""
    if p_r + p_t <= 0.0:
        raise ValidationError(f"p_r + p_t must be positive, got {p_r!r} + {p_t!r}")
    return 1.0 - abs(p_r - p_t) / (p_r + p_t)


def scale_power_reward(r_p: float, threshold: float) -> float | None:
    """Rescale a power reward to [0, 1] above the threshold.

    Returns None when r_p falls below the threshold, which marks the
    episode as lost; exactly hitting the threshold still counts.
    """
    if r_p < threshold:
        return None
    return (r_p - threshold) / (1.0 - threshold)


def total_reward(
    e_1: float, e_2: float, r_p1: float | None, r_p2: float | None
) -> float:
    """Mean of both efficiencies and both scaled power rewards; 0 if lost."""
    if r_p1 is None or r_p2 is None:
        return 0.0
    return 0.25 * (e_1 + r_p1 + e_2 + r_p2)


def params_to_array(params: CircuitParams) -> np.ndarray:
    return np.array([getattr(params, n) for n in PARAM_NAMES])


def log_step_gain(x: np.ndarray | float):
    """Sub-linear step-size gain g(x) = (10^x - 1) / 9 on [0, 1]."""
    return (np.power(10.0, x) - 1.0) / 9.0


def shape_action(action: Sequence[float], current: CircuitParams) -> CircuitParams:
    """Apply one shaped update step to the tunable parameters.

    Each action component in [-1, 1] moves its parameter by at most 10% of
    the parameter's range, scaled through a logarithmic gain that favors
    small steps; results are clamped back into the ranges.
    """
    a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
    values = params_to_array(current)
    delta = np.sign(a) * MAX_STEP_FRACTION * _RANGE_WIDTH * log_step_gain(np.abs(a))
    values = np.clip(values + delta, _RANGE_LO, _RANGE_HI)
    return replace(current, **dict(zip(PARAM_NAMES, values.tolist())))


def build_state(
    params: CircuitParams,
    target: TargetSpec,
    op_1: OperatingPointResult,
    op_2: OperatingPointResult,
) -> np.ndarray:
    """Assemble the 16-component observation vector.

    Layout: 6 tunables normalized to [0, 1], both output powers and both
    target powers divided by POWER_SCALE, both efficiencies, both
    normalized power deviations, then affinely normalized v_in and r_load.
    """
    norm = (params_to_array(params) - _RANGE_LO) / _RANGE_WIDTH
    d_1 = 1.0 - power_reward(op_1.p_r, target.p_t1)
    d_2 = 1.0 - power_reward(op_2.p_r, target.p_t2)
    return np.array(
        [
            *norm,
            op_1.p_r / POWER_SCALE,
            op_2.p_r / POWER_SCALE,
            op_1.e,
            op_2.e,
            target.p_t1 / POWER_SCALE,
            target.p_t2 / POWER_SCALE,
            d_1,
            d_2,
            (target.v_in - VIN_RANGE[0]) / (VIN_RANGE[1] - VIN_RANGE[0]),
            (target.r_load - RLOAD_RANGE[0]) / (RLOAD_RANGE[1] - RLOAD_RANGE[0]),
        ]
    )


def sample_target(rng: np.random.Generator) -> TargetSpec:
    return TargetSpec(
        p_t1=rng.uniform(*TARGET_P1_RANGE),
        p_t2=rng.uniform(*TARGET_P2_RANGE),
        v_in=rng.uniform(*VIN_RANGE),
        r_load=rng.uniform(*RLOAD_RANGE),
    )


class LlcEnv:
    """Reset/step environment over the converter's tunable parameters.

    A single instance carries mutable episode state and must not be
    shared between threads mid-episode; run one instance per rollout
    worker instead.
    """

    def __init__(
        self,
        episode: EpisodeConfig | None = None,
        loss: LossModel | None = None,
    ) -> None:
        self.episode = episode or EpisodeConfig()
        self.episode.validate()
        self.loss = loss if loss is not None else LossModel()
        self.loss.validate()
        self._rng = np.random.default_rng(self.episode.seed)
        self.params: CircuitParams | None = None
        self.target: TargetSpec | None = None
        self.op_1: OperatingPointResult | None = None
        self.op_2: OperatingPointResult | None = None
        self.step_count = 0
        self.done = True
        self.trace: list[tuple] = []

    def reset(
        self,
        target: TargetSpec | None = None,
        seed: int | np.random.SeedSequence | None = None,
    ) -> np.ndarray:
        """Start a new episode; draws the target too when none is given."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        if target is None:
            target = sample_target(self._rng)
        else:
            target.validate()
        self.target = target
        draws = self._rng.uniform(_RANGE_LO, _RANGE_HI)
        self.params = CircuitParams(
            **dict(zip(PARAM_NAMES, draws.tolist())),
            v_in=target.v_in,
            r_load=target.r_load,
        )
        self._simulate()
        self.step_count = 0
        self.done = False
        self.trace = [self._trace_row(reward=0.0)]
        return self._state()

    def step(self, action: Sequence[float]) -> tuple[np.ndarray, float, bool]:
        """Apply one shaped action; pays the episode reward on the last step."""
        if self.done:
            raise RuntimeError("episode is finished; call reset() first")
        self.params = shape_action(action, self.params)
        self._simulate()
        self.step_count += 1
        self.done = self.step_count >= self.episode.steps
        reward = self.episode_reward() if self.done else 0.0
        self.trace.append(self._trace_row(reward=reward))
        return self._state(), reward, self.done

    def episode_reward(self) -> float:
        """Total reward of the current configuration under this target."""
        r_p1 = scale_power_reward(
            power_reward(self.op_1.p_r, self.target.p_t1), self.episode.reward_threshold
        )
        r_p2 = scale_power_reward(
            power_reward(self.op_2.p_r, self.target.p_t2), self.episode.reward_threshold
        )
        return total_reward(self.op_1.e, self.op_2.e, r_p1, r_p2)

    def _simulate(self) -> None:
        self.op_1 = simulate_operating_point(self.params, self.params.f_1, self.loss)
        self.op_2 = simulate_operating_point(self.params, self.params.f_2, self.loss)

    def _state(self) -> np.ndarray:
        return build_state(self.params, self.target, self.op_1, self.op_2)

    def _trace_row(self, reward: float) -> tuple:
        p = self.params
        return (
            self.step_count, p.l_r, p.l_m, p.c_r, p.k, p.f_1, p.f_2,
            self.op_1.p_r, self.op_2.p_r, self.op_1.e, self.op_2.e, reward,
        )


def write_trace_csv(path, rows: Sequence[tuple], header_comment: str = "") -> None:
    """Write episode trace rows with the canonical column set."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
