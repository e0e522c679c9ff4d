"""Simplified wheeled-vehicle simulator on a heightmap.

The physics is a deliberately small surrogate with the failure modes that
matter for navigation learning: a kinematic bicycle for planar motion, a
four-point plane fit for roll and pitch, and a slope-threshold traction model
that strands the vehicle on climbs at or above ``traction_slope_limit``.
A PID layer converts desired speed and steering angle into bounded efforts.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .heightmap import HeightMap, elevation_at

GRAVITY = 9.81


def wrap_angle(a: float) -> float:
    """Wrap an angle in radians to the interval (-pi, pi]."""
    return math.pi - ((math.pi - a) % (2.0 * math.pi))


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float


@dataclass(frozen=True)
class VehicleParams:
    """Geometry, actuator limits, and controller gains.

    ``max_accel`` exceeds g*sin(traction_slope_limit) so the drivetrain can
    hold speed on any slope below the traction threshold, which is then the
    only mechanism that strands the vehicle; it is also small enough that
    the discrete speed loop stays stable (kp * max_accel * dt < 2).
    ``steer_rate`` is the servo slew limit applied to the steering effort.
    """

    wheelbase: float = 0.30
    track_width: float = 0.25
    max_speed: float = 1.5
    max_steer: float = 0.5
    rollover_limit: float = math.radians(45.0)
    traction_slope_limit: float = math.radians(35.0)
    speed_gains: PidGains = PidGains(2.0, 0.1, 0.0)
    steering_gains: PidGains = PidGains(4.0, 0.0, 0.1)
    max_accel: float = 8.0
    steer_rate: float = 4.0

    def __post_init__(self):
        if self.wheelbase <= 0 or self.track_width <= 0:
            raise ValueError("wheelbase and track_width must be positive")
        if self.max_speed <= 0:
            raise ValueError("max_speed must be positive")
        if not 0 < self.max_steer < math.pi / 2:
            raise ValueError("max_steer must lie in (0, pi/2)")
        if not 0 < self.rollover_limit < math.pi / 2:
            raise ValueError("rollover_limit must lie in (0, pi/2)")
        if self.max_accel <= 0 or self.steer_rate <= 0:
            raise ValueError("actuator limits must be positive")


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float
    roll: float
    pitch: float
    t: float


@dataclass(frozen=True)
class Action:
    desired_speed: float
    steering_angle: float


@dataclass(frozen=True)
class EpisodeConfig:
    map: HeightMap
    start: Tuple[float, float, float]
    goal: Tuple[float, float]
    goal_radius: float = 0.2
    dt: float = 0.1
    time_limit: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.time_limit <= 0 or self.goal_radius <= 0:
            raise ValueError("dt, time_limit, goal_radius must be positive")
        w, h = self.map.width_m, self.map.height_m
        sx, sy, _ = self.start
        gx, gy = self.goal
        if not (0 <= sx <= w and 0 <= sy <= h):
            raise ValueError("start outside map extents")
        if not (0 <= gx <= w and 0 <= gy <= h):
            raise ValueError("goal outside map extents")


class Terminal(enum.Enum):
    RUNNING = "running"
    GOAL_REACHED = "goal_reached"
    ROLLED_OVER = "rolled_over"
    TIMED_OUT = "timed_out"


@dataclass(frozen=True)
class StepResult:
    state: VehicleState
    terminal: Terminal
    distance_to_goal: float
    progress_delta: float


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: Optional[float] = None


def pid_track(target: float, current: float, state: PidState,
              gains: PidGains, dt: float) -> Tuple[float, PidState]:
    """One PID update; returns effort in [-1, 1] and the next accumulator.

    The integral is clamped so its contribution alone cannot exceed the
    effort saturation (anti-windup). The derivative term is zero on the
    first call, when no previous error exists.
    """
    error = target - current
    integral = state.integral + error * dt
    if gains.ki > 0:
        bound = 1.0 / gains.ki
        integral = min(max(integral, -bound), bound)
    if state.prev_error is None:
        derivative = 0.0
    else:
        derivative = (error - state.prev_error) / dt
    effort = gains.kp * error + gains.ki * integral + gains.kd * derivative
    effort = min(max(effort, -1.0), 1.0)
    return effort, PidState(integral=integral, prev_error=error)


def compute_attitude(m: HeightMap, x: float, y: float, heading: float,
                     params: VehicleParams) -> Tuple[float, float, float]:
    """Plane-fit roll and pitch from the four wheel-contact elevations.

    Contacts are the corners of the wheelbase-by-track rectangle centered on
    (x, y) and rotated by heading. Positive pitch means nose up; positive
    roll means the left side is higher.
    """
    ch, sh = math.cos(heading), math.sin(heading)
    half_l, half_w = params.wheelbase / 2.0, params.track_width / 2.0
    # Front-left, front-right, rear-left, rear-right.
    corners = (
        (x + half_l * ch - half_w * sh, y + half_l * sh + half_w * ch),
        (x + half_l * ch + half_w * sh, y + half_l * sh - half_w * ch),
        (x - half_l * ch - half_w * sh, y - half_l * sh + half_w * ch),
        (x - half_l * ch + half_w * sh, y - half_l * sh - half_w * ch),
    )
    fl, fr, rl, rr = (elevation_at(m, cx, cy) for cx, cy in corners)
    front, rear = (fl + fr) / 2.0, (rl + rr) / 2.0
    left, right = (fl + rl) / 2.0, (fr + rr) / 2.0
    pitch = math.atan((front - rear) / params.wheelbase)
    roll = math.atan((left - right) / params.track_width)
    center = (fl + fr + rl + rr) / 4.0
    return roll, pitch, center


class EpisodeTerminated(RuntimeError):
    """Raised when step() is called on an episode that already ended."""


class Episode:
    """Single-episode state machine over a heightmap.

    Holds the actuator state (steering angle, PID accumulators) alongside
    the exposed VehicleState. Deterministic: the same config and action
    sequence produce bit-identical trajectories.
    """

    def __init__(self, config: EpisodeConfig,
                 params: VehicleParams = VehicleParams()):
        self.config = config
        self.params = params
        self.reset()

    def reset(self) -> VehicleState:
        sx, sy, sheading = self.config.start
        heading = wrap_angle(sheading)
        roll, pitch, _ = compute_attitude(
            self.config.map, sx, sy, heading, self.params)
        self._state = VehicleState(x=sx, y=sy, heading=heading, speed=0.0,
                                   roll=roll, pitch=pitch, t=0.0)
        self._steer = 0.0
        self._speed_pid = PidState()
        self._steer_pid = PidState()
        self._steps = 0
        self._terminal = Terminal.RUNNING
        self._distance = self._distance_to_goal(sx, sy)
        return self._state

    @property
    def state(self) -> VehicleState:
        return self._state

    @property
    def terminal(self) -> Terminal:
        return self._terminal

    @property
    def steer_angle(self) -> float:
        return self._steer

    @property
    def distance_to_goal(self) -> float:
        return self._distance

    def _distance_to_goal(self, x: float, y: float) -> float:
        gx, gy = self.config.goal
        return math.hypot(gx - x, gy - y)

    def step(self, action: Action) -> StepResult:
        if self._terminal is not Terminal.RUNNING:
            raise EpisodeTerminated(
                "step() called after terminal %s" % self._terminal.value)
        p, cfg, s = self.params, self.config, self._state
        dt = cfg.dt

        target_speed = min(max(action.desired_speed, -p.max_speed), p.max_speed)
        target_steer = min(max(action.steering_angle, -p.max_steer), p.max_steer)

        throttle, self._speed_pid = pid_track(
            target_speed, s.speed, self._speed_pid, p.speed_gains, dt)
        steer_effort, self._steer_pid = pid_track(
            target_steer, self._steer, self._steer_pid, p.steering_gains, dt)

        self._steer = min(max(self._steer + steer_effort * p.steer_rate * dt,
                              -p.max_steer), p.max_steer)

        if s.pitch >= p.traction_slope_limit:
            # Stuck on a climb: drive command has no grip, speed bleeds off.
            decay = p.max_accel * dt
            speed = math.copysign(max(abs(s.speed) - decay, 0.0), s.speed)
        else:
            accel = throttle * p.max_accel - GRAVITY * math.sin(s.pitch)
            speed = min(max(s.speed + accel * dt, -p.max_speed), p.max_speed)

        heading = wrap_angle(
            s.heading + (speed / p.wheelbase) * math.tan(self._steer) * dt)
        x = s.x + speed * math.cos(heading) * dt
        y = s.y + speed * math.sin(heading) * dt

        roll, pitch, _ = compute_attitude(cfg.map, x, y, heading, p)
        self._steps += 1
        t = self._steps * dt

        prev_distance = self._distance
        distance = self._distance_to_goal(x, y)

        if abs(roll) > p.rollover_limit or abs(pitch) > p.rollover_limit:
            terminal = Terminal.ROLLED_OVER
        elif distance <= cfg.goal_radius:
            terminal = Terminal.GOAL_REACHED
        elif t >= cfg.time_limit:
            terminal = Terminal.TIMED_OUT
        else:
            terminal = Terminal.RUNNING

        self._state = VehicleState(x=x, y=y, heading=heading, speed=speed,
                                   roll=roll, pitch=pitch, t=t)
        self._terminal = terminal
        self._distance = distance
        return StepResult(state=self._state, terminal=terminal,
                          distance_to_goal=distance,
                          progress_delta=prev_distance - distance)


def sample_start_goal(m: HeightMap, params: VehicleParams,
                      rng: np.random.Generator, *,
                      min_separation: Optional[float] = None,
                      margin: Optional[float] = None,
                      heading_jitter: float = 0.5,
                      max_attempts: int = 1000,
                      ) -> Tuple[Tuple[float, float, float],
                                 Tuple[float, float]]:
    """Draw a start pose and goal position uniformly over the map interior.

    Pairs closer than ``min_separation`` (default: half the map's longer
    side) are rejected, as are starts that would be lost causes before the
    first step: initial |roll| at or beyond the rollover limit, or initial
    |pitch| at or beyond the traction slope limit (a vehicle spawned at
    zero speed on such a face can never build momentum, so the episode
    would be unwinnable for any controller). The start heading points at
    the goal plus a uniform offset in ``[-heading_jitter, +heading_jitter]``
    radians, so controllers begin with a realistic alignment error to
    correct.
    """
    if heading_jitter < 0.0:
        raise ValueError("heading_jitter must be >= 0")
    if margin is None:
        margin = math.hypot(params.wheelbase, params.track_width) / 2.0
    if min_separation is None:
        min_separation = max(m.width_m, m.height_m) / 2.0
    lo_x, hi_x = margin, m.width_m - margin
    lo_y, hi_y = margin, m.height_m - margin
    if lo_x >= hi_x or lo_y >= hi_y:
        raise ValueError("map too small for the sampling margin")
    for _ in range(max_attempts):
        sx = rng.uniform(lo_x, hi_x)
        sy = rng.uniform(lo_y, hi_y)
        gx = rng.uniform(lo_x, hi_x)
        gy = rng.uniform(lo_y, hi_y)
        offset = rng.uniform(-heading_jitter, heading_jitter)
        if math.hypot(gx - sx, gy - sy) < min_separation:
            continue
        heading = wrap_angle(math.atan2(gy - sy, gx - sx) + offset)
        roll, pitch, _ = compute_attitude(m, sx, sy, heading, params)
        if abs(roll) >= params.rollover_limit:
            continue
        if abs(pitch) >= min(params.rollover_limit,
                             params.traction_slope_limit):
            continue
        return (sx, sy, heading), (gx, gy)
    raise RuntimeError("no feasible start/goal pair found")
