"""Trial harness: run controllers over seeded episodes and report metrics.

A controller is a pure function (state, goal, terrain) -> Action; factories
for the three built-in controllers live in make_controller. Stages evaluate
a fixed number of trials whose start/goal pairs derive from per-trial seeds,
so every controller sees bit-identical tasks. Passing a harder map as
sampling_map keeps the tasks identical across stages as well: start poses
that sit below the rollover limit there also do on every gentler blend of
the same endpoint maps.

Metrics per stage: success count, mean traversal time over successful
trials only (absent when there are none), and mean |roll| / |pitch| in
degrees pooled over every step of every trial, failures included.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import seeds
from .heightmap import HeightMap, crop_centered
from .planners import NaivePlannerConfig, naive_plan, optimistic_plan
from .ppo import PolicyParams, act, observe
from .reward import RewardConfig, total_reward
from .swae import SwaeConfig, SwaeParams
from .vehicle import (
    Action,
    Episode,
    EpisodeConfig,
    Terminal,
    VehicleParams,
    VehicleState,
    sample_start_goal,
)

CONTROLLERS = ("rl_policy", "optimistic", "naive")

Controller = Callable[[VehicleState, Tuple[float, float], HeightMap], Action]

TRAJECTORY_HEADER = ("t", "x", "y", "heading", "speed", "roll", "pitch",
                     "reward", "terminal")


@dataclass(frozen=True)
class TrialSpec:
    """One stage's evaluation plan for one controller."""
    stage: int
    controller: str
    trials: int = 25
    seed: int = 0
    goal_radius: float = 0.2
    dt: float = 0.1
    time_limit: float = 15.0

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError("unknown controller %r (expected one of %s)"
                             % (self.controller, ", ".join(CONTROLLERS)))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class StageMetrics:
    stage: int
    controller: str
    trials: int
    successes: int
    mean_traversal_time: Optional[float]  # seconds, successful trials only
    mean_abs_roll: float  # degrees, every step of every trial
    mean_abs_pitch: float

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")
        if (self.successes > 0) != (self.mean_traversal_time is not None):
            raise ValueError("traversal time is defined exactly when some "
                             "trial succeeded")


@dataclass
class TrialResult:
    outcome: Terminal
    traversal_time: Optional[float]
    mean_abs_roll: float  # degrees over this trial's steps
    mean_abs_pitch: float
    start: Tuple[float, float, float]
    goal: Tuple[float, float]
    trajectory: List[tuple] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.outcome is Terminal.GOAL_REACHED


def make_controller(name: str,
                    policy: Optional[PolicyParams] = None,
                    swae_params: Optional[SwaeParams] = None,
                    swae_cfg: Optional[SwaeConfig] = None,
                    naive_cfg: Optional[NaivePlannerConfig] = None,
                    cruise_speed: float = 1.5,
                    vehicle: VehicleParams = VehicleParams()) -> Controller:
    """Bind one of the named controllers to its parameters."""
    if name == "optimistic":
        def controller(state, goal, terrain):
            return optimistic_plan(state, goal, cruise_speed, vehicle)
        return controller
    if name == "naive":
        cfg = naive_cfg or NaivePlannerConfig(cruise_speed=cruise_speed)

        def controller(state, goal, terrain):
            crop = crop_centered(terrain, (state.x, state.y, state.heading),
                                 cfg.crop_size)
            return naive_plan(state, goal, crop, cfg, vehicle)
        return controller
    if name == "rl_policy":
        if policy is None or swae_params is None or swae_cfg is None:
            raise ValueError("rl_policy controller needs policy and "
                             "encoder parameters")

        def controller(state, goal, terrain):
            obs = observe(state, goal, swae_params, swae_cfg, terrain)
            action, _ = act(policy, obs, deterministic=True, vehicle=vehicle)
            return action
        return controller
    raise ValueError("unknown controller %r (expected one of %s)"
                     % (name, ", ".join(CONTROLLERS)))


def run_trial(controller: Controller, config: EpisodeConfig,
              vehicle: VehicleParams = VehicleParams(),
              reward_cfg: RewardConfig = RewardConfig()) -> TrialResult:
    """Step one episode to its terminal state and collect per-step logs."""
    episode = Episode(config, vehicle)
    rows: List[tuple] = []
    abs_roll: List[float] = []
    abs_pitch: List[float] = []
    while True:
        action = controller(episode.state, config.goal, config.map)
        result = episode.step(action)
        reward = total_reward(result, reward_cfg).total
        s = result.state
        rows.append((s.t, s.x, s.y, s.heading, s.speed, s.roll, s.pitch,
                     reward, result.terminal.value))
        abs_roll.append(abs(math.degrees(s.roll)))
        abs_pitch.append(abs(math.degrees(s.pitch)))
        if result.terminal is not Terminal.RUNNING:
            break
    success = result.terminal is Terminal.GOAL_REACHED
    return TrialResult(
        outcome=result.terminal,
        traversal_time=s.t if success else None,
        mean_abs_roll=float(np.mean(abs_roll)),
        mean_abs_pitch=float(np.mean(abs_pitch)),
        start=config.start,
        goal=config.goal,
        trajectory=rows)


def trial_tasks(terrain: HeightMap, trials: int, seed: int,
                vehicle: VehicleParams = VehicleParams()
                ) -> List[Tuple[Tuple[float, float, float],
                                Tuple[float, float]]]:
    """Deterministic (start pose, goal) per trial index."""
    tasks = []
    for index in range(trials):
        rng = np.random.default_rng(seeds.derive_seed(seed, "trial", index))
        tasks.append(sample_start_goal(terrain, vehicle, rng))
    return tasks


def run_stage(spec: TrialSpec, terrain: HeightMap, controller: Controller,
              vehicle: VehicleParams = VehicleParams(),
              reward_cfg: RewardConfig = RewardConfig(),
              sampling_map: Optional[HeightMap] = None
              ) -> Tuple[StageMetrics, List[TrialResult]]:
    """All trials of one stage; aggregation is an index-ordered fold."""
    tasks = trial_tasks(sampling_map if sampling_map is not None else terrain,
                        spec.trials, spec.seed, vehicle)
    results: List[TrialResult] = []
    for index, (start, goal) in enumerate(tasks):
        config = EpisodeConfig(map=terrain, start=start, goal=goal,
                               goal_radius=spec.goal_radius, dt=spec.dt,
                               time_limit=spec.time_limit)
        try:
            results.append(run_trial(controller, config, vehicle, reward_cfg))
        except Exception as exc:
            raise RuntimeError(
                "controller %r violated its contract on trial %d of stage "
                "%d" % (spec.controller, index, spec.stage)) from exc
    successes = sum(r.success for r in results)
    times = [r.traversal_time for r in results if r.success]
    all_roll = np.concatenate([
        [row[5] for row in r.trajectory] for r in results])
    all_pitch = np.concatenate([
        [row[6] for row in r.trajectory] for r in results])
    metrics = StageMetrics(
        stage=spec.stage,
        controller=spec.controller,
        trials=spec.trials,
        successes=successes,
        mean_traversal_time=float(np.mean(times)) if times else None,
        mean_abs_roll=float(np.mean(np.degrees(np.abs(all_roll)))),
        mean_abs_pitch=float(np.mean(np.degrees(np.abs(all_pitch)))))
    return metrics, results


# ------------------------------------------------------------------ reports


def format_cell(m: StageMetrics, bold: Sequence[bool] = (False,) * 4) -> str:
    """Table cell like "25/25, 5.75s, 1.19°/1.26°" with optional bolding."""
    def wrap(text, flag):
        return "**%s**" % text if flag else text

    outcome = wrap("%d/%d" % (m.successes, m.trials), bold[0])
    if m.mean_traversal_time is None:
        time_part = "n/a"
    else:
        time_part = wrap("%.2fs" % m.mean_traversal_time, bold[1])
    roll = wrap("%.2f°" % m.mean_abs_roll, bold[2])
    pitch = wrap("%.2f°" % m.mean_abs_pitch, bold[3])
    return "%s, %s, %s/%s" % (outcome, time_part, roll, pitch)


def _column_best(column: List[StageMetrics]) -> List[List[bool]]:
    """Bold flags per metrics row: most successes, least time/roll/pitch."""
    best_success = max(m.successes for m in column)
    times = [m.mean_traversal_time for m in column
             if m.mean_traversal_time is not None]
    best_time = min(times) if times else None
    best_roll = min(m.mean_abs_roll for m in column)
    best_pitch = min(m.mean_abs_pitch for m in column)
    flags = []
    for m in column:
        flags.append([
            m.successes == best_success,
            m.mean_traversal_time is not None
            and m.mean_traversal_time == best_time,
            m.mean_abs_roll == best_roll,
            m.mean_abs_pitch == best_pitch,
        ])
    return flags


def _stage_grid(metrics: Dict[str, List[StageMetrics]]
                ) -> Tuple[List[str], List[int]]:
    if not metrics:
        raise ValueError("no controllers to report")
    controllers = list(metrics)
    stage_sets = {name: [m.stage for m in rows]
                  for name, rows in metrics.items()}
    reference = stage_sets[controllers[0]]
    if len(set(reference)) != len(reference):
        raise ValueError("duplicate stages for controller %r"
                         % controllers[0])
    for name, stages in stage_sets.items():
        if sorted(stages) != sorted(reference):
            raise ValueError("mismatched stage sets: %r has %r, %r has %r"
                             % (controllers[0], sorted(reference),
                                name, sorted(stages)))
    return controllers, sorted(reference)


def compare_report(metrics: Dict[str, List[StageMetrics]]) -> str:
    """Markdown table: one controller per row, one stage per column.

    Within each stage column the best success count, the fastest mean time,
    and the smallest attitude means are bolded.
    """
    controllers, stages = _stage_grid(metrics)
    by_key = {(name, m.stage): m for name, rows in metrics.items()
              for m in rows}
    header = "| Controller | " + " | ".join(
        "Stage %d" % s for s in stages) + " |"
    divider = "|---" * (len(stages) + 1) + "|"
    lines = [header, divider]
    bold: Dict[Tuple[str, int], List[bool]] = {}
    for stage in stages:
        column = [by_key[(name, stage)] for name in controllers]
        for name, flags in zip(controllers, _column_best(column)):
            bold[(name, stage)] = flags
    for name in controllers:
        cells = [format_cell(by_key[(name, s)], bold[(name, s)])
                 for s in stages]
        lines.append("| %s | %s |" % (name, " | ".join(cells)))
    return "\n".join(lines) + "\n"


CSV_HEADER = ("controller", "stage", "trials", "successes",
              "mean_traversal_time_s", "mean_abs_roll_deg",
              "mean_abs_pitch_deg")


def metrics_to_csv(metrics: Dict[str, List[StageMetrics]]) -> str:
    """Full-precision CSV twin of the comparison table."""
    controllers, stages = _stage_grid(metrics)
    by_key = {(name, m.stage): m for name, rows in metrics.items()
              for m in rows}
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for name in controllers:
        for stage in stages:
            m = by_key[(name, stage)]
            time_field = ("" if m.mean_traversal_time is None
                          else repr(m.mean_traversal_time))
            writer.writerow([name, m.stage, m.trials, m.successes,
                             time_field, repr(m.mean_abs_roll),
                             repr(m.mean_abs_pitch)])
    return out.getvalue()


def metrics_from_csv(text: str) -> Dict[str, List[StageMetrics]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError("unrecognized metrics CSV header: %r" % (header,))
    out: Dict[str, List[StageMetrics]] = {}
    for row in reader:
        if not row:
            continue
        name, stage, trials, successes, time_field, roll, pitch = row
        out.setdefault(name, []).append(StageMetrics(
            stage=int(stage), controller=name, trials=int(trials),
            successes=int(successes),
            mean_traversal_time=float(time_field) if time_field else None,
            mean_abs_roll=float(roll), mean_abs_pitch=float(pitch)))
    return out


def trajectory_to_csv(result: TrialResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for row in result.trajectory:
        writer.writerow([repr(v) if isinstance(v, float) else v
                         for v in row])
    return out.getvalue()
