"""Three-term step reward: progress, rollover penalty, timeout penalty.

Angles enter the rollover term as magnitudes in degrees. Two rollover modes
are provided: ``literal`` charges the absolute deviation of each attitude
magnitude from ``alpha_deg``, which penalizes even a perfectly flat pose;
``hinge`` charges only the exceedance above ``alpha_deg`` and is the
training default. The stall indicator is a strict less-than; the timeout
indicator is a greater-or-equal.
"""

import math
from dataclasses import dataclass

from .vehicle import StepResult, Terminal

LITERAL = "literal"
HINGE = "hinge"


@dataclass(frozen=True)
class RewardConfig:
    w1: float = 50.0
    w2: float = 10.0
    w3: float = 20.0
    w4: float = 10.0
    alpha_deg: float = 30.0
    c: float = 100.0
    time_limit: float = 15.0
    stall_threshold: float = 0.01
    rollover_mode: str = HINGE

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise ValueError("weights must be non-negative")
        if self.time_limit <= 0 or self.stall_threshold <= 0:
            raise ValueError("time_limit and stall_threshold must be positive")
        if self.rollover_mode not in (LITERAL, HINGE):
            raise ValueError("rollover_mode must be 'literal' or 'hinge'")


@dataclass(frozen=True)
class RewardBreakdown:
    progress: float
    rollover: float
    timeout: float
    total: float


def progress_reward(delta_d: float, cfg: RewardConfig) -> float:
    """w1 * delta_d minus the stall penalty when delta_d < the threshold."""
    stalled = delta_d < cfg.stall_threshold
    return cfg.w1 * delta_d - (cfg.w2 if stalled else 0.0)


def rollover_penalty(roll_deg: float, pitch_deg: float,
                     cfg: RewardConfig) -> float:
    """Attitude penalty; inputs in degrees, compared against alpha_deg."""
    r, p = abs(roll_deg), abs(pitch_deg)
    if cfg.rollover_mode == LITERAL:
        return -cfg.w3 * (abs(r - cfg.alpha_deg) + abs(p - cfg.alpha_deg))
    return -cfg.w3 * (max(0.0, r - cfg.alpha_deg) + max(0.0, p - cfg.alpha_deg))


def timeout_penalty(t: float, d_remaining: float, cfg: RewardConfig) -> float:
    """-(w4 * d_remaining + c) once t reaches the time limit."""
    if d_remaining < 0:
        raise ValueError("d_remaining must be non-negative")
    if t >= cfg.time_limit:
        return -(cfg.w4 * d_remaining + cfg.c)
    return 0.0


def total_reward(step: StepResult, cfg: RewardConfig) -> RewardBreakdown:
    """Per-step breakdown; the timeout term fires only on the timed_out step."""
    progress = progress_reward(step.progress_delta, cfg)
    rollover = rollover_penalty(math.degrees(step.state.roll),
                                math.degrees(step.state.pitch), cfg)
    if step.terminal is Terminal.TIMED_OUT:
        timeout = timeout_penalty(step.state.t, step.distance_to_goal, cfg)
    else:
        timeout = 0.0
    return RewardBreakdown(progress=progress, rollover=rollover,
                           timeout=timeout,
                           total=progress + rollover + timeout)
