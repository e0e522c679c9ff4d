"""Command-line pipeline: terrain, encoder pretraining, training, reports.

Subcommands:
  gen-terrain    write the staged elevation maps as BMP files plus sidecars
  pretrain-swae  train the elevation encoder on crops of those maps
  train          run curriculum policy training against the stage maps
  eval           run seeded trials for one controller and write metrics
  compare        merge per-controller metrics into one comparison report

Every command is deterministic given (config, seed): repeated runs rewrite
byte-identical checkpoints, logs, reports, and figures. Reports are written
as markdown plus a CSV twin, with rendered PNG figures alongside.
"""

import argparse
import csv
import io
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import figures, seeds
from .config import ConfigError, ExperimentConfig
from .evaluate import (
    StageMetrics,
    compare_report,
    make_controller,
    metrics_from_csv,
    metrics_to_csv,
    run_stage,
)
from .heightmap import (
    CurriculumSpec,
    HeightMap,
    flat_map,
    generate_end_map,
    interpolate_stage,
    load_bmp,
    read_sidecar,
    write_map,
)
from .ppo import NavEnv, UpdateRecord, load_policy, save_policy, train
from .swae import build_crop_dataset, load_swae, save_swae, train_swae


class CliError(Exception):
    """User-facing failure with a named cause; exits nonzero."""


def _load_config(args) -> ExperimentConfig:
    try:
        if getattr(args, "config", None):
            cfg = ExperimentConfig.load(args.config, os.environ)
        else:
            cfg = ExperimentConfig.from_text("", os.environ)
    except FileNotFoundError:
        raise CliError("config file not found: %s" % args.config)
    except ConfigError as exc:
        raise CliError("invalid config: %s" % exc)
    if getattr(args, "seed", None) is not None:
        cfg.set_seed(args.seed)
    return cfg


def _dirs(cfg: ExperimentConfig, args) -> Tuple[Path, Path, Path]:
    out = Path(args.out)
    terrain = out / "terrain"
    checkpoints = out / cfg.checkpoint_dir
    reports = out / cfg.report_dir
    return terrain, checkpoints, reports


def _stage_path(terrain_dir: Path, stage: int) -> Path:
    return terrain_dir / ("stage_%d.bmp" % stage)


def _load_stage_map(terrain_dir: Path, stage: int) -> HeightMap:
    path = _stage_path(terrain_dir, stage)
    if not path.exists():
        raise CliError("terrain stage %d not found at %s; run gen-terrain "
                       "first" % (stage, path))
    meta = read_sidecar(path.with_suffix(".txt"))
    return load_bmp(path.read_bytes(), min_elev=meta["min_elev"],
                    max_elev=meta["max_elev"], cell_size=meta["cell_size"])


def _load_stage_maps(terrain_dir: Path, num_stages: int) -> List[HeightMap]:
    return [_load_stage_map(terrain_dir, k) for k in range(num_stages + 1)]


def _parse_stages(text: Optional[str], num_stages: int) -> List[int]:
    if text is None or text == "all":
        return list(range(num_stages + 1))
    try:
        stages = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise CliError("--stages expects comma-separated integers or "
                       "'all', got %r" % text)
    if not stages:
        raise CliError("--stages selected nothing")
    for k in stages:
        if not 0 <= k <= num_stages:
            raise CliError("stage %d outside configured range 0..%d"
                           % (k, num_stages))
    return stages


# ----------------------------------------------------------------- commands


def cmd_gen_terrain(args) -> int:
    cfg = _load_config(args)
    terrain_dir, _, _ = _dirs(cfg, args)
    terrain_dir.mkdir(parents=True, exist_ok=True)
    params = cfg.terrain_params()
    spec = CurriculumSpec(start_map=flat_map(params),
                          end_map=generate_end_map(params),
                          num_stages=cfg.num_stages)
    maps = []
    for k in range(cfg.num_stages + 1):
        stage_map = interpolate_stage(spec, k)
        write_map(_stage_path(terrain_dir, k), stage_map, seed=params.seed)
        maps.append(stage_map)
    figures.save_stage_grid(terrain_dir / "stages.png", maps)
    print("wrote %d stage maps to %s" % (len(maps), terrain_dir))
    return 0


def cmd_pretrain_swae(args) -> int:
    cfg = _load_config(args)
    terrain_dir, checkpoint_dir, report_dir = _dirs(cfg, args)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    report_dir.mkdir(parents=True, exist_ok=True)
    maps = _load_stage_maps(terrain_dir, cfg.num_stages)
    swae_cfg = cfg.swae_config()
    dataset = build_crop_dataset(maps, cfg.swae_samples_per_map,
                                 seed=seeds.derive_seed(cfg.seed,
                                                        "swae-data"),
                                 crop_size=swae_cfg.crop_size)
    params, history = train_swae(dataset, swae_cfg)
    params.frozen = True
    save_swae(checkpoint_dir / "swae.bin", params, swae_cfg)

    rows = io.StringIO()
    writer = csv.writer(rows, lineterminator="\n")
    writer.writerow(["epoch", "total", "recon", "sw"])
    for epoch, h in enumerate(history, start=1):
        writer.writerow([epoch, repr(h.total), repr(h.recon), repr(h.sw)])
    (report_dir / "swae_losses.csv").write_text(rows.getvalue(),
                                                encoding="ascii")
    figures.save_swae_losses(report_dir / "swae_losses.png", history)
    print("encoder trained on %d crops for %d epochs; final loss %.6f"
          % (dataset.shape[0], len(history), history[-1].total))
    print("checkpoint: %s" % (checkpoint_dir / "swae.bin"))
    return 0


def _training_log_csv(records: List[UpdateRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["update_index", "stage", "reward_mean", "success_rate",
                     "episodes", "policy_loss", "value_loss",
                     "clip_fraction", "approx_kl", "eval_success_rate"])
    for r in records:
        writer.writerow([r.update_index, r.stage, repr(r.reward_mean),
                         repr(r.success_rate), r.episodes,
                         repr(r.policy_loss), repr(r.value_loss),
                         repr(r.clip_fraction), repr(r.approx_kl),
                         repr(r.eval_success_rate)])
    return out.getvalue()


def cmd_train(args) -> int:
    cfg = _load_config(args)
    terrain_dir, checkpoint_dir, report_dir = _dirs(cfg, args)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    report_dir.mkdir(parents=True, exist_ok=True)
    policy_path = checkpoint_dir / "policy.bin"
    if args.resume and not policy_path.exists():
        raise CliError("cannot resume: no checkpoint at %s" % policy_path)
    maps = _load_stage_maps(terrain_dir, cfg.num_stages)
    swae_path = checkpoint_dir / "swae.bin"
    if not swae_path.exists():
        raise CliError("encoder checkpoint not found at %s; run "
                       "pretrain-swae first" % swae_path)
    swae_params, swae_cfg = load_swae(swae_path)
    vehicle = cfg.vehicle_params()
    reward_cfg = cfg.reward_config()
    ppo_cfg = cfg.ppo_config()
    stages = _parse_stages(getattr(args, "stages", None), cfg.num_stages)
    schedule = cfg.curriculum_schedule(tuple(sorted(stages)))

    def env_factory(stage: int) -> NavEnv:
        return NavEnv(maps[stage], swae_params, swae_cfg,
                      vehicle_params=vehicle, reward_cfg=reward_cfg,
                      goal_radius=cfg.goal_radius, dt=cfg.episode_dt,
                      time_limit=cfg.episode_time_limit,
                      seed=seeds.derive_seed(cfg.seed, "ppo-env"),
                      stage=stage)

    state = None
    if args.resume:
        state = load_policy(policy_path, ppo_cfg)
        print("resuming from update %d (stage cursor %d)"
              % (state.update_index, state.stage_cursor))

    def stage_hook(current_state, stage):
        save_policy(checkpoint_dir / ("policy_stage_%d.bin" % stage),
                    current_state)

    def log_hook(record):
        print("update %4d stage %d reward %9.2f eval %.2f"
              % (record.update_index, record.stage, record.reward_mean,
                 record.eval_success_rate))

    state, records = train(schedule, env_factory, ppo_cfg, state=state,
                           log_hook=log_hook if args.verbose else None,
                           stage_hook=stage_hook)
    save_policy(policy_path, state)
    (report_dir / "training_log.csv").write_text(
        _training_log_csv(records), encoding="ascii")
    if records:
        figures.save_training_curves(report_dir / "training_curves.png",
                                     records)
    print("trained %d updates; checkpoint: %s" % (len(records), policy_path))
    return 0


def _metrics_paths(report_dir: Path, controller: str) -> Dict[str, Path]:
    return {
        "csv": report_dir / ("metrics_%s.csv" % controller),
        "md": report_dir / ("metrics_%s.md" % controller),
        "png": report_dir / ("metrics_%s.png" % controller),
    }


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    terrain_dir, checkpoint_dir, report_dir = _dirs(cfg, args)
    report_dir.mkdir(parents=True, exist_ok=True)
    maps = _load_stage_maps(terrain_dir, cfg.num_stages)
    vehicle = cfg.vehicle_params()
    reward_cfg = cfg.reward_config()
    name = args.controller
    if name == "rl_policy":
        swae_path = checkpoint_dir / "swae.bin"
        policy_path = checkpoint_dir / "policy.bin"
        for path, hint in ((swae_path, "pretrain-swae"),
                           (policy_path, "train")):
            if not path.exists():
                raise CliError("checkpoint not found at %s; run %s first"
                               % (path, hint))
        swae_params, swae_cfg = load_swae(swae_path)
        state = load_policy(policy_path, cfg.ppo_config())
        controller = make_controller(name, policy=state.params,
                                     swae_params=swae_params,
                                     swae_cfg=swae_cfg, vehicle=vehicle)
    else:
        controller = make_controller(name,
                                     naive_cfg=cfg.naive_planner_config(),
                                     cruise_speed=cfg.cruise_speed,
                                     vehicle=vehicle)

    stages = _parse_stages(getattr(args, "stages", None), cfg.num_stages)
    sampling_map = maps[cfg.num_stages]
    rows: List[StageMetrics] = []
    for stage in stages:
        spec = cfg.trial_spec(stage, name)
        metrics, _ = run_stage(spec, maps[stage], controller,
                               vehicle=vehicle, reward_cfg=reward_cfg,
                               sampling_map=sampling_map)
        rows.append(metrics)
        print("stage %d: %d/%d successes" % (stage, metrics.successes,
                                             metrics.trials))
    table = {name: rows}
    paths = _metrics_paths(report_dir, name)
    paths["csv"].write_text(metrics_to_csv(table), encoding="ascii")
    paths["md"].write_text(compare_report(table), encoding="utf-8")
    figures.save_comparison(paths["png"], table)
    print("metrics: %s" % paths["csv"])
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    _, _, report_dir = _dirs(cfg, args)
    names = [part.strip() for part in args.controller.split(",")
             if part.strip()]
    if not names:
        raise CliError("--controller selected nothing")
    merged: Dict[str, List[StageMetrics]] = {}
    for name in names:
        path = _metrics_paths(report_dir, name)["csv"]
        if not path.exists():
            raise CliError("metrics for %r not found at %s; run eval "
                           "--controller %s first" % (name, path, name))
        parsed = metrics_from_csv(path.read_text(encoding="ascii"))
        if name not in parsed:
            raise CliError("metrics file %s does not contain controller %r"
                           % (path, name))
        merged[name] = parsed[name]
    markdown = compare_report(merged)
    (report_dir / "comparison.md").write_text(markdown, encoding="utf-8")
    (report_dir / "comparison.csv").write_text(metrics_to_csv(merged),
                                               encoding="ascii")
    figures.save_comparison(report_dir / "comparison.png", merged)
    print(markdown, end="")
    print("report: %s" % (report_dir / "comparison.md"))
    return 0


# -------------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overland",
        description="Staged-terrain navigation: curriculum maps, encoder "
                    "and policy training, seeded evaluation reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file "
                                        "(defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override experiment.seed")
        p.add_argument("--out", default="runs",
                       help="output root directory (default: runs)")

    p = sub.add_parser("gen-terrain", help="write curriculum stage maps")
    common(p)
    p.set_defaults(func=cmd_gen_terrain)

    p = sub.add_parser("pretrain-swae", help="train the elevation encoder")
    common(p)
    p.set_defaults(func=cmd_pretrain_swae)

    p = sub.add_parser("train", help="curriculum policy training")
    common(p)
    p.add_argument("--stages", help="comma-separated stage indices or 'all'")
    p.add_argument("--resume", action="store_true",
                   help="continue from the existing policy checkpoint")
    p.add_argument("--verbose", action="store_true",
                   help="print one line per update")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run seeded trials for one controller")
    common(p)
    p.add_argument("--controller", required=True,
                   choices=("rl_policy", "optimistic", "naive"))
    p.add_argument("--stages", help="comma-separated stage indices or 'all'")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="merge controller metrics into a "
                                       "comparison report")
    common(p)
    p.add_argument("--controller", default="rl_policy,optimistic,naive",
                   help="comma-separated controller names")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
