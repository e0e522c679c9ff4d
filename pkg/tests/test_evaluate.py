"""Harness tests: trial outcomes, paired tasks, report formatting."""

import math

import numpy as np
import pytest

from overland.evaluate import (
    StageMetrics,
    TrialSpec,
    compare_report,
    format_cell,
    make_controller,
    metrics_from_csv,
    metrics_to_csv,
    run_stage,
    run_trial,
    trajectory_to_csv,
    trial_tasks,
)
from overland.heightmap import HeightMap
from overland.vehicle import Action, EpisodeConfig, Terminal, VehicleParams


def flat_map(rows=130, cols=310):
    return HeightMap(np.zeros((rows, cols)), cell_size=0.01,
                     min_elev=0.0, max_elev=0.5)


def ridge_map():
    """Flat course with a 38.7 degree ramp wall rising to a 0.4 m plateau."""
    data = np.zeros((130, 310))
    x = (np.arange(310) + 0.5) * 0.01
    profile = np.clip((x - 1.5) * 0.8, 0.0, 0.4)
    data[:] = profile[None, :]
    return HeightMap(data, cell_size=0.01, min_elev=0.0, max_elev=0.5)


def metrics_fixture():
    return {
        "rl_policy": [
            StageMetrics(1, "rl_policy", 25, 25, 5.75, 1.19, 1.26),
            StageMetrics(4, "rl_policy", 25, 15, 8.1, 5.58, 3.82),
        ],
        "optimistic": [
            StageMetrics(1, "optimistic", 25, 25, 5.60, 1.30, 1.40),
            StageMetrics(4, "optimistic", 25, 10, 7.9, 7.11, 4.11),
        ],
    }


# ------------------------------------------------------------------- specs


def test_spec_validation():
    with pytest.raises(ValueError):
        TrialSpec(stage=0, controller="astar")
    with pytest.raises(ValueError):
        TrialSpec(stage=0, controller="naive", trials=0)


def test_stage_metrics_invariants():
    with pytest.raises(ValueError):
        StageMetrics(0, "naive", 25, 26, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        StageMetrics(0, "naive", 25, 0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        StageMetrics(0, "naive", 25, 5, None, 0.0, 0.0)


# ------------------------------------------------------------------ trials


def test_flat_straight_run_succeeds_in_expected_time():
    m = flat_map()
    config = EpisodeConfig(map=m, start=(0.3, 0.65, 0.0), goal=(2.8, 0.65))
    result = run_trial(make_controller("optimistic"), config)
    assert result.outcome is Terminal.GOAL_REACHED
    assert result.success
    # 2.3 m to the goal ring at 1.5 m/s cruise, plus spin-up and the
    # final-approach taper: a little over the straight-line figure.
    assert 2.3 / 1.5 <= result.traversal_time <= 2.3 / 1.5 + 0.4
    assert result.mean_abs_roll == 0.0
    assert result.mean_abs_pitch == 0.0


def test_wall_blocks_goal_times_out_at_limit():
    m = ridge_map()
    config = EpisodeConfig(map=m, start=(0.5, 0.65, 0.0), goal=(2.9, 0.65))
    result = run_trial(make_controller("optimistic"), config)
    assert result.outcome is Terminal.TIMED_OUT
    assert result.traversal_time is None
    assert len(result.trajectory) == 150
    assert result.trajectory[-1][0] == pytest.approx(15.0, abs=1e-9)
    # The vehicle is stalled on the ramp, not rolled over.
    assert math.degrees(abs(result.trajectory[-1][6])) < 45.0


def test_trial_determinism():
    m = flat_map()
    config = EpisodeConfig(map=m, start=(0.3, 0.4, 0.2), goal=(2.5, 1.0))
    a = run_trial(make_controller("naive"), config)
    b = run_trial(make_controller("naive"), config)
    assert a.trajectory == b.trajectory
    assert a.outcome == b.outcome


def test_rl_controller_requires_parameters():
    with pytest.raises(ValueError):
        make_controller("rl_policy")
    with pytest.raises(ValueError):
        make_controller("dijkstra")


# ------------------------------------------------------------------ stages


def test_flat_stage_optimistic_all_succeed():
    m = flat_map()
    spec = TrialSpec(stage=0, controller="optimistic", trials=25, seed=3)
    metrics, results = run_stage(spec, m, make_controller("optimistic"))
    assert metrics.successes == 25
    assert metrics.trials == 25
    assert metrics.mean_traversal_time is not None
    assert metrics.mean_abs_roll == 0.0


def test_stage_aggregates_match_bruteforce():
    m = flat_map()
    spec = TrialSpec(stage=0, controller="naive", trials=6, seed=9)
    metrics, results = run_stage(spec, m, make_controller("naive"))
    rolls, pitches, times = [], [], []
    for r in results:
        for row in r.trajectory:
            rolls.append(abs(math.degrees(row[5])))
            pitches.append(abs(math.degrees(row[6])))
        if r.success:
            times.append(r.trajectory[-1][0])
    assert metrics.mean_abs_roll == pytest.approx(np.mean(rolls), abs=1e-12)
    assert metrics.mean_abs_pitch == pytest.approx(np.mean(pitches),
                                                   abs=1e-12)
    assert metrics.successes == sum(r.success for r in results)
    if times:
        assert metrics.mean_traversal_time == pytest.approx(np.mean(times),
                                                            abs=1e-12)


def test_paired_tasks_across_controllers():
    m = flat_map()
    results = {}
    for name in ("optimistic", "naive"):
        spec = TrialSpec(stage=0, controller=name, trials=8, seed=21)
        _, trials = run_stage(spec, m, make_controller(name))
        results[name] = [(r.start, r.goal) for r in trials]
    assert results["optimistic"] == results["naive"]


def test_tasks_identical_across_stages_with_shared_sampling_map():
    hard = ridge_map()
    soft = flat_map()
    tasks_on_soft_stage = trial_tasks(hard, 10, seed=4)
    tasks_on_hard_stage = trial_tasks(hard, 10, seed=4)
    assert tasks_on_soft_stage == tasks_on_hard_stage
    spec = TrialSpec(stage=0, controller="optimistic", trials=5, seed=4)
    _, trials = run_stage(spec, soft, make_controller("optimistic"),
                          sampling_map=hard)
    assert [(r.start, r.goal) for r in trials] == tasks_on_soft_stage[:5]


def test_stage_determinism():
    m = flat_map()
    spec = TrialSpec(stage=0, controller="naive", trials=4, seed=13)
    m1, r1 = run_stage(spec, m, make_controller("naive"))
    m2, r2 = run_stage(spec, m, make_controller("naive"))
    assert m1 == m2
    assert all(a.trajectory == b.trajectory for a, b in zip(r1, r2))


def test_zero_success_stage_has_no_time():
    m = flat_map()
    spec = TrialSpec(stage=0, controller="optimistic", trials=3, seed=1,
                     time_limit=1.0)

    def sit_still(state, goal, terrain):
        return Action(desired_speed=0.0, steering_angle=0.0)

    metrics, results = run_stage(spec, m, sit_still)
    assert metrics.successes == 0
    assert metrics.mean_traversal_time is None
    assert all(r.outcome is Terminal.TIMED_OUT for r in results)
    assert "n/a" in format_cell(metrics)
    back = metrics_from_csv(metrics_to_csv({"optimistic": [metrics]}))
    assert back["optimistic"][0] == metrics


def test_contract_violation_names_trial():
    m = flat_map()
    spec = TrialSpec(stage=2, controller="optimistic", trials=2, seed=0)

    def broken(state, goal, terrain):
        raise ValueError("bad controller")

    with pytest.raises(RuntimeError, match="trial 0 of stage 2"):
        run_stage(spec, m, broken)


# ----------------------------------------------------------------- reports


def test_format_cell_example():
    m = StageMetrics(1, "rl_policy", 25, 25, 5.75, 1.19, 1.26)
    assert format_cell(m) == "25/25, 5.75s, 1.19°/1.26°"


def test_single_cell_report():
    m = StageMetrics(1, "naive", 25, 12, 9.5, 2.0, 3.0)
    text = compare_report({"naive": [m]})
    lines = text.strip().split("\n")
    assert lines[0] == "| Controller | Stage 1 |"
    # Sole row is best in every column component.
    assert "**12/25**, **9.50s**, **2.00°**/**3.00°**" in lines[2]


def test_report_bolds_per_column_best():
    text = compare_report(metrics_fixture())
    rows = {line.split("|")[1].strip(): line
            for line in text.strip().split("\n")[2:]}
    # Stage 1: both reach 25/25 (tie bolds both); optimistic is faster;
    # rl has smaller roll and pitch.
    assert "**25/25**" in rows["rl_policy"].split("|")[2]
    assert "**25/25**" in rows["optimistic"].split("|")[2]
    assert "**5.60s**" in rows["optimistic"].split("|")[2]
    assert "5.75s" in rows["rl_policy"].split("|")[2]
    assert "**5.75s**" not in rows["rl_policy"].split("|")[2]
    assert "**1.19°**" in rows["rl_policy"].split("|")[2]
    # Stage 4: rl wins successes and both attitude metrics.
    assert "**15/25**" in rows["rl_policy"].split("|")[3]
    assert "**7.90s**" in rows["optimistic"].split("|")[3]
    assert "**5.58°**/**3.82°**" in rows["rl_policy"].split("|")[3]


def test_report_rejects_mismatched_stages():
    metrics = metrics_fixture()
    metrics["optimistic"] = metrics["optimistic"][:1]
    with pytest.raises(ValueError, match="mismatched stage sets"):
        compare_report(metrics)


def test_csv_roundtrip_exact():
    metrics = metrics_fixture()
    text = metrics_to_csv(metrics)
    back = metrics_from_csv(text)
    assert back == metrics
    # Full float precision survives even for non-round values.
    odd = {"naive": [StageMetrics(0, "naive", 25, 3, 1.2345678901234567,
                                  0.1 + 0.2, 1e-17)]}
    again = metrics_from_csv(metrics_to_csv(odd))
    assert again == odd


def test_csv_rejects_foreign_header():
    with pytest.raises(ValueError):
        metrics_from_csv("a,b,c\n1,2,3\n")


def test_trajectory_csv_shape():
    m = flat_map()
    config = EpisodeConfig(map=m, start=(0.3, 0.65, 0.0), goal=(2.0, 0.65))
    result = run_trial(make_controller("optimistic"), config)
    text = trajectory_to_csv(result)
    lines = text.strip().split("\n")
    assert lines[0] == "t,x,y,heading,speed,roll,pitch,reward,terminal"
    assert len(lines) == len(result.trajectory) + 1
    assert lines[-1].endswith("goal_reached")
    assert all(line.endswith("running") for line in lines[1:-1])
