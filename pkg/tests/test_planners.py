"""Planner tests: proportional law, band statistics, brute-force argmin."""

import math

import numpy as np
import pytest

from overland.planners import (
    GOAL_SLOWDOWN_FRACTION,
    HEADING_GAIN,
    NaivePlannerConfig,
    approach_speed,
    choose_region,
    goal_bearing,
    naive_plan,
    optimistic_plan,
    region_bounds,
    region_scores,
    split_front_regions,
)
from overland.vehicle import VehicleParams, VehicleState


def make_state(x=0.0, y=0.0, heading=0.0):
    return VehicleState(x=x, y=y, heading=heading, speed=0.0,
                        roll=0.0, pitch=0.0, t=0.0)


def oracle_split(crop, cfg):
    """Independent recomputation of band stats with fsum accumulation."""
    half = cfg.crop_size // 2
    center = (cfg.crop_size - 1) / 2.0
    edges = [int(round(j * cfg.crop_size / cfg.num_regions))
             for j in range(cfg.num_regions + 1)]
    out = []
    for j in range(cfg.num_regions):
        cells = [crop[r][c] for r in range(half)
                 for c in range(edges[j], edges[j + 1])]
        mean = math.fsum(cells) / len(cells)
        var = math.fsum((v - mean) ** 2 for v in cells) / len(cells)
        left = center - (edges[j] + edges[j + 1] - 1) / 2.0
        fwd = center - (half - 1) / 2.0
        out.append((mean, var, math.atan2(left, fwd)))
    mid = cfg.num_regions // 2
    width = edges[mid + 1] - edges[mid]
    r0 = (cfg.crop_size - half) // 2
    c0 = (cfg.crop_size - width) // 2
    cells = [crop[r][c] for r in range(r0, r0 + half)
             for c in range(c0, c0 + width)]
    mean = math.fsum(cells) / len(cells)
    var = math.fsum((v - mean) ** 2 for v in cells) / len(cells)
    return out, (mean, var)


def oracle_choice(crop, bearing_to_goal, cfg):
    regions, (ref_mean, _) = oracle_split(crop, cfg)
    keyed = []
    for i, (mean, var, heading) in enumerate(regions):
        score = (cfg.mean_weight * abs(mean - ref_mean)
                 + cfg.variance_weight * var
                 + cfg.goal_bias_weight * abs(heading - bearing_to_goal))
        keyed.append((score, abs(heading - bearing_to_goal), i))
    return min(keyed)[2]


# ------------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ValueError):
        NaivePlannerConfig(num_regions=4)
    with pytest.raises(ValueError):
        NaivePlannerConfig(crop_size=8, num_regions=5)
    with pytest.raises(ValueError):
        NaivePlannerConfig(mean_weight=-0.1)
    with pytest.raises(ValueError):
        NaivePlannerConfig(cruise_speed=0.0)


# --------------------------------------------------------------- optimistic


def test_approach_speed_profile():
    assert approach_speed(2.0, 1.5) == 1.5
    assert approach_speed(0.5, 1.5) == 1.5
    assert approach_speed(0.0, 1.5) == pytest.approx(0.45)
    assert approach_speed(0.25, 1.5) == pytest.approx(1.5 * 0.65)
    assert approach_speed(-0.1, 1.5) == pytest.approx(
        1.5 * GOAL_SLOWDOWN_FRACTION)


def test_optimistic_straight_ahead():
    action = optimistic_plan(make_state(), (2.0, 0.0))
    assert action.steering_angle == 0.0
    assert action.desired_speed == 1.5


def test_optimistic_proportional_law():
    # Goal at bearing +0.2 rad, far enough for full cruise speed.
    g = (2.0 * math.cos(0.2), 2.0 * math.sin(0.2))
    action = optimistic_plan(make_state(), g)
    assert action.steering_angle == pytest.approx(HEADING_GAIN * 0.2,
                                                  rel=1e-12)


def test_optimistic_saturates_behind():
    action = optimistic_plan(make_state(), (-2.0, 1e-9))
    assert action.steering_angle == VehicleParams().max_steer
    action = optimistic_plan(make_state(), (-2.0, -1e-9))
    assert action.steering_angle == -VehicleParams().max_steer


def test_optimistic_slows_near_goal():
    action = optimistic_plan(make_state(), (0.2, 0.0))
    assert action.desired_speed == pytest.approx(1.5 * (0.3 + 0.7 * 0.4))


def test_goal_bearing_wraps():
    s = make_state(heading=3.0)
    b = goal_bearing(s, (math.cos(-3.0), math.sin(-3.0)))
    assert -math.pi < b <= math.pi
    assert b == pytest.approx(2 * math.pi - 6.0)


# ------------------------------------------------------------------ regions


def test_region_bounds_default():
    cfg = NaivePlannerConfig()
    assert region_bounds(cfg) == [(0, 13), (13, 26), (26, 38), (38, 51),
                                  (51, 64)]


def test_split_rejects_wrong_size():
    cfg = NaivePlannerConfig()
    with pytest.raises(ValueError):
        split_front_regions(np.zeros((32, 32)), cfg)


def test_split_constant_crop():
    cfg = NaivePlannerConfig()
    # 0.375 sums exactly in binary, so the variance is exactly zero; a
    # non-dyadic constant only reaches zero up to summation dust.
    regions, ref = split_front_regions(np.full((64, 64), 0.375), cfg)
    for r in regions:
        assert r.mean == 0.375
        assert r.variance == 0.0
    assert ref.mean == 0.375
    assert ref.variance == 0.0
    dusty, _ = split_front_regions(np.full((64, 64), 0.37), cfg)
    assert all(r.variance <= 1e-30 for r in dusty)
    assert regions[2].bearing == 0.0
    # Bands mirror left/right.
    assert regions[0].bearing == pytest.approx(-regions[4].bearing)
    assert regions[1].bearing == pytest.approx(-regions[3].bearing)
    assert regions[0].bearing > regions[1].bearing > 0.0


def test_split_boulder_in_leftmost_band():
    cfg = NaivePlannerConfig()
    crop = np.zeros((64, 64))
    crop[4:12, 2:9] = 0.5  # tall block wholly inside the leftmost front band
    regions, _ = split_front_regions(crop, cfg)
    assert regions[0].mean > max(r.mean for r in regions[1:])
    assert regions[0].variance > max(r.variance for r in regions[1:])


def test_split_matches_bruteforce():
    cfg = NaivePlannerConfig()
    rng = np.random.default_rng(12)
    for _ in range(20):
        crop = rng.uniform(0.0, 0.5, size=(64, 64))
        regions, ref = split_front_regions(crop, cfg)
        want, want_ref = oracle_split(crop.tolist(), cfg)
        for got, (mean, var, bearing) in zip(regions, want):
            assert got.mean == pytest.approx(mean, abs=1e-12)
            assert got.variance == pytest.approx(var, abs=1e-12)
            assert got.bearing == pytest.approx(bearing, abs=1e-15)
        assert ref.mean == pytest.approx(want_ref[0], abs=1e-12)
        assert ref.variance == pytest.approx(want_ref[1], abs=1e-12)


# --------------------------------------------------------------- naive plan


def test_naive_flat_goal_ahead_picks_center():
    cfg = NaivePlannerConfig()
    action = naive_plan(make_state(), (2.0, 0.0), np.zeros((64, 64)), cfg)
    assert action.steering_angle == 0.0
    assert action.desired_speed == cfg.cruise_speed


def test_naive_exact_tie_breaks_to_goal_then_index():
    # Zero goal bias makes every band score identical on a flat crop; the
    # tie must fall to the most goal-aligned band, then the smaller index.
    cfg = NaivePlannerConfig(goal_bias_weight=0.0)
    regions, ref = split_front_regions(np.zeros((64, 64)), cfg)
    assert choose_region(regions, ref, 0.0, cfg) == 2
    assert choose_region(regions, ref, regions[1].bearing, cfg) == 1
    # A bearing halfway between two bands ties on goal alignment too.
    halfway = (regions[1].bearing + regions[2].bearing) / 2.0
    assert choose_region(regions, ref, halfway, cfg) == 1


def test_naive_avoids_center_boulder():
    cfg = NaivePlannerConfig()
    crop = np.zeros((64, 64))
    crop[0:16, 26:38] = 1.0  # boulder ahead in the center band only
    action = naive_plan(make_state(), (2.0, 0.0), crop, cfg)
    assert action.steering_angle != 0.0
    # Symmetric flanks tie; the tie-break picks the smaller index (left),
    # and the proportional gain saturates steering at the limit.
    assert action.steering_angle == VehicleParams().max_steer


def test_naive_matches_bruteforce_argmin():
    cfg = NaivePlannerConfig()
    rng = np.random.default_rng(77)
    for trial in range(200):
        crop = rng.uniform(0.0, 0.5, size=(64, 64))
        bearing = float(rng.uniform(-math.pi, math.pi))
        regions, ref = split_front_regions(crop, cfg)
        got = choose_region(regions, ref, bearing, cfg)
        assert got == oracle_choice(crop.tolist(), bearing, cfg)


def test_naive_choice_invariant_to_constant_offset():
    cfg = NaivePlannerConfig()
    rng = np.random.default_rng(5)
    for _ in range(25):
        crop = rng.uniform(0.0, 0.5, size=(64, 64))
        bearing = float(rng.uniform(-1.2, 1.2))
        a, ra = split_front_regions(crop, cfg)
        b, rb = split_front_regions(crop + 3.7, cfg)
        assert choose_region(a, ra, bearing, cfg) == \
            choose_region(b, rb, bearing, cfg)


def test_flat_terrain_steering_signs_agree():
    cfg = NaivePlannerConfig()
    flat = np.zeros((64, 64))
    for bearing in np.linspace(-math.pi + 1e-6, math.pi, 41):
        goal = (2.0 * math.cos(bearing), 2.0 * math.sin(bearing))
        opt = optimistic_plan(make_state(), goal)
        nav = naive_plan(make_state(), goal, flat, cfg)
        assert opt.steering_angle * nav.steering_angle >= 0.0
        if abs(bearing) > 0.35:
            assert math.copysign(1, opt.steering_angle) == \
                math.copysign(1, nav.steering_angle)
            assert nav.steering_angle != 0.0


def test_planner_outputs_respect_bounds():
    cfg = NaivePlannerConfig()
    vehicle = VehicleParams()
    rng = np.random.default_rng(9)
    for _ in range(50):
        crop = rng.uniform(0.0, 0.5, size=(64, 64))
        state = make_state(heading=float(rng.uniform(-math.pi, math.pi)))
        goal = tuple(rng.uniform(-3.0, 3.0, size=2))
        for action in (optimistic_plan(state, goal),
                       naive_plan(state, goal, crop, cfg)):
            assert abs(action.steering_angle) <= vehicle.max_steer
            assert 0.0 < action.desired_speed <= cfg.cruise_speed
