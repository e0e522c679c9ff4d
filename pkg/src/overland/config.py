"""Plain-text experiment configuration.

Format: ``[section]`` headers over ``key = value`` lines; ``#`` or ``;``
starts a full-line comment. The raw string table is the source of truth, so
parse -> serialize -> parse is exact; typed builders construct the library
dataclasses on demand and apply their validation.

Seed discipline: one global ``experiment.seed`` fans out to per-component
streams through derive_seed(seed, component_label), so terrain, encoder
pretraining, policy training, and evaluation are independently reproducible.

Any key can be overridden by an environment variable named
``OVERLAND_<SECTION>_<KEY>`` (upper case), e.g. ``OVERLAND_PPO_GAMMA=0.98``.
"""

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

from . import seeds
from .evaluate import TrialSpec
from .heightmap import TerrainGenParams
from .planners import NaivePlannerConfig
from .ppo import CurriculumSchedule, PpoConfig, StageSpec
from .reward import RewardConfig
from .swae import SwaeConfig
from .vehicle import PidGains, VehicleParams

Raw = Dict[str, Dict[str, str]]

ENV_PREFIX = "OVERLAND_"


class ConfigError(ValueError):
    """Malformed config text or unknown section/key."""


def default_raw() -> Raw:
    return {
        "experiment": {
            "seed": "0",
            "stages": "4",
        },
        "terrain": {
            "course_length": "3.1",
            "course_width": "1.3",
            "max_elevation": "0.5",
            "boulder_mean_size": "0.3",
            "boulder_count": "200",
            "cell_size": "0.01",
        },
        "vehicle": {
            "wheelbase": "0.3",
            "track_width": "0.25",
            "max_speed": "1.5",
            "max_steer": "0.5",
            "rollover_limit_deg": "45.0",
            "traction_slope_limit_deg": "35.0",
            "speed_kp": "2.0",
            "speed_ki": "0.1",
            "speed_kd": "0.0",
            "steer_kp": "4.0",
            "steer_ki": "0.0",
            "steer_kd": "0.1",
            "max_accel": "8.0",
            "steer_rate": "4.0",
        },
        "reward": {
            "w1": "50.0",
            "w2": "10.0",
            "w3": "20.0",
            "w4": "10.0",
            "alpha_deg": "30.0",
            "c": "100.0",
            "time_limit": "15.0",
            "stall_threshold": "0.01",
            "rollover_mode": "hinge",
        },
        "swae": {
            "crop_size": "64",
            "downsample_to": "32",
            "latent_dim": "32",
            "num_projections": "50",
            "sw_weight": "10.0",
            "elev_range": "0.5",
            "epochs": "25",
            "batch_size": "64",
            "learning_rate": "0.001",
            "samples_per_map": "100",
        },
        "ppo": {
            "gamma": "0.99",
            "gae_lambda": "0.95",
            "clip_epsilon": "0.2",
            "epochs_per_update": "10",
            "minibatch_size": "64",
            "rollout_steps": "2048",
            "learning_rate": "0.0003",
            "entropy_coef": "0.0",
            "value_coef": "0.5",
            "initial_log_std": "0.0",
            "actor_layers": "64,64",
            "critic_layers": "64,64",
            "updates_per_stage": "200",
            "promote_threshold": "0.9",
            "eval_episodes": "25",
        },
        "eval": {
            "trials": "25",
            "goal_radius": "0.2",
            "dt": "0.1",
            "time_limit": "15.0",
            "cruise_speed": "1.5",
        },
        "paths": {
            "checkpoint_dir": "checkpoints",
            "report_dir": "reports",
        },
    }


def parse_config(text: str) -> Raw:
    raw: Raw = {}
    section: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if not section:
                raise ConfigError("line %d: empty section name" % lineno)
            if section in raw:
                raise ConfigError("line %d: duplicate section [%s]"
                                  % (lineno, section))
            raw[section] = {}
            continue
        if "=" not in stripped:
            raise ConfigError("line %d: expected key = value, got %r"
                              % (lineno, stripped))
        if section is None:
            raise ConfigError("line %d: key before any [section]" % lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw[section]:
            raise ConfigError("line %d: duplicate key %s.%s"
                              % (lineno, section, key))
        raw[section][key] = value.strip()
    return raw


def serialize_config(raw: Raw) -> str:
    blocks = []
    for section, entries in raw.items():
        lines = ["[%s]" % section]
        lines.extend("%s = %s" % (k, v) for k, v in entries.items())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _check_known(raw: Raw) -> None:
    schema = default_raw()
    for section, entries in raw.items():
        if section not in schema:
            raise ConfigError("unknown config section [%s]" % section)
        for key in entries:
            if key not in schema[section]:
                raise ConfigError("unknown config key %s.%s"
                                  % (section, key))


def apply_env_overrides(raw: Raw, environ: Mapping[str, str]) -> Raw:
    """Overlay OVERLAND_<SECTION>_<KEY> variables onto the table."""
    schema = default_raw()
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section not in schema or key not in schema[section]:
            raise ConfigError("environment override %s matches no config "
                              "key" % name)
        raw.setdefault(section, {})[key] = value
    return raw


@dataclass
class ExperimentConfig:
    """Typed access over the raw table; the table is what round-trips."""

    raw: Raw

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        return cls(default_raw())

    @classmethod
    def from_text(cls, text: str,
                  environ: Optional[Mapping[str, str]] = None
                  ) -> "ExperimentConfig":
        raw = default_raw()
        overlay = parse_config(text)
        _check_known(overlay)
        for section, entries in overlay.items():
            raw[section].update(entries)
        if environ is not None:
            apply_env_overrides(raw, environ)
        return cls(raw)

    @classmethod
    def load(cls, path, environ: Optional[Mapping[str, str]] = None
             ) -> "ExperimentConfig":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read(), environ)

    def serialize(self) -> str:
        return serialize_config(self.raw)

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.serialize())

    # ------------------------------------------------------------- accessors

    def _get(self, section: str, key: str) -> str:
        try:
            return self.raw[section][key]
        except KeyError:
            raise ConfigError("missing config key %s.%s"
                              % (section, key)) from None

    def _int(self, section: str, key: str) -> int:
        value = self._get(section, key)
        try:
            return int(value)
        except ValueError:
            raise ConfigError("config key %s.%s must be an integer, got %r"
                              % (section, key, value)) from None

    def _float(self, section: str, key: str) -> float:
        value = self._get(section, key)
        try:
            return float(value)
        except ValueError:
            raise ConfigError("config key %s.%s must be a number, got %r"
                              % (section, key, value)) from None

    def _ints(self, section: str, key: str) -> Tuple[int, ...]:
        value = self._get(section, key)
        try:
            return tuple(int(part) for part in value.split(",")
                         if part.strip())
        except ValueError:
            raise ConfigError("config key %s.%s must be comma-separated "
                              "integers, got %r"
                              % (section, key, value)) from None

    @property
    def seed(self) -> int:
        return self._int("experiment", "seed")

    def set_seed(self, seed: int) -> None:
        self.raw["experiment"]["seed"] = str(int(seed))

    @property
    def num_stages(self) -> int:
        n = self._int("experiment", "stages")
        if n < 1:
            raise ConfigError("experiment.stages must be >= 1")
        return n

    @property
    def checkpoint_dir(self) -> str:
        return self._get("paths", "checkpoint_dir")

    @property
    def report_dir(self) -> str:
        return self._get("paths", "report_dir")

    def terrain_params(self) -> TerrainGenParams:
        return TerrainGenParams(
            course_length=self._float("terrain", "course_length"),
            course_width=self._float("terrain", "course_width"),
            max_elevation=self._float("terrain", "max_elevation"),
            boulder_mean_size=self._float("terrain", "boulder_mean_size"),
            boulder_count=self._int("terrain", "boulder_count"),
            seed=seeds.derive_seed(self.seed, "terrain"),
            cell_size=self._float("terrain", "cell_size"))

    def vehicle_params(self) -> VehicleParams:
        return VehicleParams(
            wheelbase=self._float("vehicle", "wheelbase"),
            track_width=self._float("vehicle", "track_width"),
            max_speed=self._float("vehicle", "max_speed"),
            max_steer=self._float("vehicle", "max_steer"),
            rollover_limit=math.radians(
                self._float("vehicle", "rollover_limit_deg")),
            traction_slope_limit=math.radians(
                self._float("vehicle", "traction_slope_limit_deg")),
            speed_gains=PidGains(self._float("vehicle", "speed_kp"),
                                 self._float("vehicle", "speed_ki"),
                                 self._float("vehicle", "speed_kd")),
            steering_gains=PidGains(self._float("vehicle", "steer_kp"),
                                    self._float("vehicle", "steer_ki"),
                                    self._float("vehicle", "steer_kd")),
            max_accel=self._float("vehicle", "max_accel"),
            steer_rate=self._float("vehicle", "steer_rate"))

    def reward_config(self) -> RewardConfig:
        return RewardConfig(
            w1=self._float("reward", "w1"),
            w2=self._float("reward", "w2"),
            w3=self._float("reward", "w3"),
            w4=self._float("reward", "w4"),
            alpha_deg=self._float("reward", "alpha_deg"),
            c=self._float("reward", "c"),
            time_limit=self._float("reward", "time_limit"),
            stall_threshold=self._float("reward", "stall_threshold"),
            rollover_mode=self._get("reward", "rollover_mode"))

    def swae_config(self) -> SwaeConfig:
        return SwaeConfig(
            crop_size=self._int("swae", "crop_size"),
            downsample_to=self._int("swae", "downsample_to"),
            latent_dim=self._int("swae", "latent_dim"),
            num_projections=self._int("swae", "num_projections"),
            sw_weight=self._float("swae", "sw_weight"),
            elev_range=self._float("swae", "elev_range"),
            epochs=self._int("swae", "epochs"),
            batch_size=self._int("swae", "batch_size"),
            learning_rate=self._float("swae", "learning_rate"),
            seed=seeds.derive_seed(self.seed, "swae"))

    @property
    def swae_samples_per_map(self) -> int:
        return self._int("swae", "samples_per_map")

    def ppo_config(self) -> PpoConfig:
        return PpoConfig(
            gamma=self._float("ppo", "gamma"),
            gae_lambda=self._float("ppo", "gae_lambda"),
            clip_epsilon=self._float("ppo", "clip_epsilon"),
            epochs_per_update=self._int("ppo", "epochs_per_update"),
            minibatch_size=self._int("ppo", "minibatch_size"),
            rollout_steps=self._int("ppo", "rollout_steps"),
            learning_rate=self._float("ppo", "learning_rate"),
            entropy_coef=self._float("ppo", "entropy_coef"),
            value_coef=self._float("ppo", "value_coef"),
            initial_log_std=self._float("ppo", "initial_log_std"),
            actor_layers=self._ints("ppo", "actor_layers"),
            critic_layers=self._ints("ppo", "critic_layers"),
            seed=seeds.derive_seed(self.seed, "ppo"))

    def curriculum_schedule(self,
                            stages: Optional[Tuple[int, ...]] = None
                            ) -> CurriculumSchedule:
        indices = stages if stages is not None \
            else tuple(range(self.num_stages + 1))
        budget = self._int("ppo", "updates_per_stage")
        threshold = self._float("ppo", "promote_threshold")
        episodes = self._int("ppo", "eval_episodes")
        return CurriculumSchedule(stages=tuple(
            StageSpec(stage=k, updates=budget, promote_threshold=threshold,
                      eval_episodes=episodes) for k in indices))

    def trial_spec(self, stage: int, controller: str) -> TrialSpec:
        return TrialSpec(
            stage=stage,
            controller=controller,
            trials=self._int("eval", "trials"),
            seed=seeds.derive_seed(self.seed, "eval"),
            goal_radius=self._float("eval", "goal_radius"),
            dt=self._float("eval", "dt"),
            time_limit=self._float("eval", "time_limit"))

    @property
    def cruise_speed(self) -> float:
        return self._float("eval", "cruise_speed")

    def naive_planner_config(self) -> NaivePlannerConfig:
        return NaivePlannerConfig(
            crop_size=self._int("swae", "crop_size"),
            cruise_speed=self.cruise_speed)

    @property
    def episode_dt(self) -> float:
        return self._float("eval", "dt")

    @property
    def episode_time_limit(self) -> float:
        return self._float("eval", "time_limit")

    @property
    def goal_radius(self) -> float:
        return self._float("eval", "goal_radius")
