"""Non-learning baseline controllers.

Two planners share the proportional goal-pursuit steering law:

* The optimistic planner ignores terrain entirely: steer toward the goal,
  drive at cruise speed, slow down only on final approach.
* The naive planner looks at a vehicle-aligned elevation crop, splits the
  front half into vertical bands, scores each band by how much its mean
  elevation differs from the patch under the vehicle, by its elevation
  variance, and by how far its bearing deviates from the goal bearing,
  then steers toward the best-scoring band.

Both are pure functions of (state, goal, crop) and hold no mutable state.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .vehicle import Action, VehicleParams, VehicleState, wrap_angle

# Proportional steering gain shared by both planners.
HEADING_GAIN = 1.5
# Final-approach speed taper: linearly down to this fraction of cruise speed
# inside this distance of the goal.
GOAL_SLOWDOWN_RADIUS = 0.5
GOAL_SLOWDOWN_FRACTION = 0.3


@dataclass(frozen=True)
class NaivePlannerConfig:
    crop_size: int = 64
    num_regions: int = 5
    mean_weight: float = 1.0
    variance_weight: float = 1.0
    goal_bias_weight: float = 0.5
    cruise_speed: float = 1.5

    def __post_init__(self):
        if self.num_regions < 2 or self.num_regions % 2 == 0:
            raise ValueError("num_regions must be odd and >= 3 so a "
                             "straight-ahead region exists")
        if self.crop_size < 2 * self.num_regions:
            raise ValueError("crop_size too small for the region count")
        if min(self.mean_weight, self.variance_weight,
               self.goal_bias_weight) < 0:
            raise ValueError("weights must be non-negative")
        if self.cruise_speed <= 0:
            raise ValueError("cruise_speed must be positive")


@dataclass(frozen=True)
class RegionStats:
    """Population statistics of one crop band plus its center bearing."""
    mean: float
    variance: float
    bearing: float  # relative bearing of the band's center, rad, +left


def goal_bearing(state: VehicleState, goal: Tuple[float, float]) -> float:
    """Bearing of the goal relative to the vehicle heading, in (-pi, pi]."""
    absolute = math.atan2(goal[1] - state.y, goal[0] - state.x)
    return wrap_angle(absolute - state.heading)


def approach_speed(distance: float, cruise_speed: float) -> float:
    """Cruise speed, tapering linearly to 30% inside 0.5 m of the goal."""
    if distance >= GOAL_SLOWDOWN_RADIUS:
        return cruise_speed
    blend = max(distance, 0.0) / GOAL_SLOWDOWN_RADIUS
    return cruise_speed * (GOAL_SLOWDOWN_FRACTION
                           + (1.0 - GOAL_SLOWDOWN_FRACTION) * blend)


def optimistic_plan(state: VehicleState, goal: Tuple[float, float],
                    cruise_speed: float = 1.5,
                    vehicle: VehicleParams = VehicleParams()) -> Action:
    """Steer proportionally toward the goal, assuming the terrain is flat."""
    error = goal_bearing(state, goal)
    steering = min(max(HEADING_GAIN * error, -vehicle.max_steer),
                   vehicle.max_steer)
    distance = math.hypot(goal[0] - state.x, goal[1] - state.y)
    return Action(desired_speed=approach_speed(distance, cruise_speed),
                  steering_angle=steering)


def region_bounds(cfg: NaivePlannerConfig) -> List[Tuple[int, int]]:
    """Column spans [lo, hi) of the front bands, left to right."""
    edges = [int(round(j * cfg.crop_size / cfg.num_regions))
             for j in range(cfg.num_regions + 1)]
    return [(edges[j], edges[j + 1]) for j in range(cfg.num_regions)]


def _band_stats(cells: np.ndarray) -> Tuple[float, float]:
    """Two-pass population mean and variance of a band."""
    mean = float(np.mean(cells))
    variance = float(np.mean((cells - mean) ** 2))
    return mean, variance


def split_front_regions(crop: np.ndarray, cfg: NaivePlannerConfig
                        ) -> Tuple[List[RegionStats], RegionStats]:
    """Statistics for the front-half bands and the vehicle-centered patch.

    The crop comes from crop_centered: row 0 is furthest ahead, column 0 is
    furthest left, and the vehicle sits at the crop center. The front half
    (the first crop_size/2 rows) is split into num_regions vertical bands of
    near-equal width. The reference patch has the same shape as the middle
    band but is centered on the vehicle instead of lying ahead of it.
    """
    crop = np.asarray(crop, dtype=np.float64)
    if crop.shape != (cfg.crop_size, cfg.crop_size):
        raise ValueError("expected a %dx%d crop, got %r"
                         % (cfg.crop_size, cfg.crop_size, crop.shape))
    half = cfg.crop_size // 2
    center = (cfg.crop_size - 1) / 2.0
    front = crop[:half]
    # Bearings: cell (r, c) lies at forward (center - r) and left (center - c)
    # cell units, so a band's center bearing is atan2(mean left, mean fwd);
    # the cell size cancels.
    fwd_center = center - (half - 1) / 2.0

    regions: List[RegionStats] = []
    for lo, hi in region_bounds(cfg):
        mean, variance = _band_stats(front[:, lo:hi])
        left_center = center - (lo + hi - 1) / 2.0
        regions.append(RegionStats(mean=mean, variance=variance,
                                   bearing=math.atan2(left_center,
                                                      fwd_center)))

    mid_lo, mid_hi = region_bounds(cfg)[cfg.num_regions // 2]
    width = mid_hi - mid_lo
    row0 = (cfg.crop_size - half) // 2
    col0 = (cfg.crop_size - width) // 2
    ref_mean, ref_var = _band_stats(crop[row0:row0 + half,
                                         col0:col0 + width])
    reference = RegionStats(mean=ref_mean, variance=ref_var, bearing=0.0)
    return regions, reference


def region_scores(regions: List[RegionStats], reference: RegionStats,
                  bearing_to_goal: float, cfg: NaivePlannerConfig
                  ) -> np.ndarray:
    """Additive cost per band: mean mismatch + variance + goal deviation."""
    return np.array([
        cfg.mean_weight * abs(r.mean - reference.mean)
        + cfg.variance_weight * r.variance
        + cfg.goal_bias_weight * abs(r.bearing - bearing_to_goal)
        for r in regions])


def choose_region(regions: List[RegionStats], reference: RegionStats,
                  bearing_to_goal: float, cfg: NaivePlannerConfig) -> int:
    """Index of the lowest-cost band; ties fall to the most goal-aligned
    band, then to the smaller index."""
    scores = region_scores(regions, reference, bearing_to_goal, cfg)
    return min(range(len(regions)),
               key=lambda i: (scores[i],
                              abs(regions[i].bearing - bearing_to_goal), i))


def naive_plan(state: VehicleState, goal: Tuple[float, float],
               crop: np.ndarray, cfg: NaivePlannerConfig,
               vehicle: VehicleParams = VehicleParams()) -> Action:
    """Steer toward the best front band of the elevation crop."""
    regions, reference = split_front_regions(crop, cfg)
    bearing_to_goal = goal_bearing(state, goal)
    chosen = choose_region(regions, reference, bearing_to_goal, cfg)
    steering = min(max(HEADING_GAIN * regions[chosen].bearing,
                       -vehicle.max_steer), vehicle.max_steer)
    distance = math.hypot(goal[0] - state.x, goal[1] - state.y)
    return Action(desired_speed=approach_speed(distance, cfg.cruise_speed),
                  steering_angle=steering)
