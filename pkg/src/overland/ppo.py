"""PPO with a tanh-squashed Gaussian policy over a staged terrain curriculum.

Actor, log-std, and critic live in one flat parameter vector driven by a
single Adam state. Rollouts store pre-squash actions; the squash correction
is included in log-probs on both sides of the ratio, where it cancels.
Every random draw is derived from the config seed plus named labels, so
training is bit-reproducible and resumable from (params, optimizer, update
counter) alone: each rollout begins with a fresh episode whose seed depends
only on (stage, update index, episode index).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import seeds
from .heightmap import HeightMap, crop_centered
from .nn import (
    AdamState,
    MlpSpec,
    ParamVector,
    adam_step,
    backward,
    concat_params,
    forward,
    gaussian_entropy,
    gaussian_logprob,
    gaussian_logprob_grad,
    init_mlp,
    make_param,
)
from .reward import RewardConfig, total_reward
from .swae import SwaeConfig, SwaeParams, encode
from .vehicle import (
    Action,
    Episode,
    EpisodeConfig,
    Terminal,
    VehicleParams,
    VehicleState,
    sample_start_goal,
    wrap_angle,
)


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    epochs_per_update: int = 10
    minibatch_size: int = 64
    rollout_steps: int = 2048
    learning_rate: float = 3e-4
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    initial_log_std: float = 0.0
    actor_layers: Tuple[int, ...] = (64, 64)
    critic_layers: Tuple[int, ...] = (64, 64)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "actor_layers", tuple(self.actor_layers))
        object.__setattr__(self, "critic_layers", tuple(self.critic_layers))
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be positive")


@dataclass
class Observation:
    heading_error: float
    speed: float
    latent: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate(([self.heading_error, self.speed], self.latent))

    @property
    def dim(self) -> int:
        return 2 + self.latent.size


def observe(state: VehicleState, goal: Tuple[float, float],
            swae_params: SwaeParams, swae_cfg: SwaeConfig,
            terrain: HeightMap) -> Observation:
    """Heading error to the goal, current speed, and the crop latent."""
    bearing = math.atan2(goal[1] - state.y, goal[0] - state.x)
    heading_error = wrap_angle(bearing - state.heading)
    crop = crop_centered(terrain, (state.x, state.y, state.heading),
                         swae_cfg.crop_size)
    latent = encode(swae_params, crop, swae_cfg)
    return Observation(heading_error=heading_error, speed=state.speed,
                       latent=latent)


# ------------------------------------------------------------------- policy


@dataclass
class PolicyParams:
    flat: ParamVector
    obs_dim: int
    action_dim: int
    actor_spec: MlpSpec
    critic_spec: MlpSpec

    def _extract(self, prefix: str) -> ParamVector:
        layout = [(n, s) for n, s in self.flat.layout if n.startswith(prefix)]
        values = np.concatenate([self.flat.view(n).ravel()
                                 for n, _ in layout])
        return ParamVector(values, layout)

    @property
    def actor(self) -> ParamVector:
        return self._extract("actor_")

    @property
    def critic(self) -> ParamVector:
        return self._extract("critic_")

    @property
    def log_std(self) -> np.ndarray:
        return self.flat.view("log_std")

    def copy(self) -> "PolicyParams":
        return PolicyParams(flat=self.flat.copy(), obs_dim=self.obs_dim,
                            action_dim=self.action_dim,
                            actor_spec=self.actor_spec,
                            critic_spec=self.critic_spec)


def init_policy(obs_dim: int, action_dim: int, cfg: PpoConfig) -> PolicyParams:
    actor_spec = MlpSpec((obs_dim,) + cfg.actor_layers + (action_dim,),
                         activation="tanh")
    critic_spec = MlpSpec((obs_dim,) + cfg.critic_layers + (1,),
                          activation="tanh")
    rng = np.random.default_rng(seeds.derive_seed(cfg.seed, "policy-init"))
    actor = init_mlp(actor_spec, rng, prefix="actor_")
    log_std = make_param("log_std",
                         np.full(action_dim, cfg.initial_log_std))
    critic = init_mlp(critic_spec, rng, prefix="critic_")
    flat = concat_params([actor, log_std, critic])
    return PolicyParams(flat=flat, obs_dim=obs_dim, action_dim=action_dim,
                        actor_spec=actor_spec, critic_spec=critic_spec)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _squash_correction(z: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """log|d(scale*tanh(z))/dz| summed over the last axis, stably."""
    # log(1 - tanh(z)^2) = 2*(log 2 - z - softplus(-2z))
    log_jac = 2.0 * (math.log(2.0) - z - _softplus(-2.0 * z)) + np.log(scales)
    return np.sum(log_jac, axis=-1)


def squash(z: np.ndarray, scales: np.ndarray,
           offsets: np.ndarray = 0.0) -> np.ndarray:
    """Affine tanh squash; the offset shifts the range without touching
    the jacobian, so the log-prob correction depends on scales alone."""
    return offsets + scales * np.tanh(z)


def sample_action(params: PolicyParams, obs_vec: np.ndarray,
                  scales: np.ndarray, rng: Optional[np.random.Generator],
                  deterministic: bool = False,
                  offsets: np.ndarray = 0.0
                  ) -> Tuple[np.ndarray, np.ndarray, float]:
    """Returns (bounded action, pre-squash sample, log-prob with correction)."""
    mean, _ = forward(params.actor_spec, params.flat, obs_vec,
                      prefix="actor_")
    log_std = params.flat.view("log_std")
    if deterministic:
        z = mean.copy()
    else:
        z = mean + np.exp(log_std) * rng.standard_normal(params.action_dim)
    log_prob = float(gaussian_logprob(mean, log_std, z)
                     - _squash_correction(z, scales))
    return squash(z, scales, offsets), z, log_prob


def action_bounds(vehicle: VehicleParams) -> Tuple[np.ndarray, np.ndarray]:
    """(scales, offsets) mapping squashed outputs to vehicle commands.

    Desired speed spans [0, max_speed]: the platform has no reason to back
    up (losing traction strands it regardless of drive direction), and a
    forward-only command removes the dithering policies otherwise fall
    into near the goal. Steering spans [-max_steer, max_steer].
    """
    scales = np.array([vehicle.max_speed / 2.0, vehicle.max_steer])
    offsets = np.array([vehicle.max_speed / 2.0, 0.0])
    return scales, offsets


def act(params: PolicyParams, obs: Observation, deterministic: bool,
        rng: Optional[np.random.Generator] = None,
        vehicle: VehicleParams = VehicleParams()) -> Tuple[Action, float]:
    """Policy action for the vehicle: (desired speed, steering angle)."""
    scales, offsets = action_bounds(vehicle)
    bounded, _, log_prob = sample_action(params, obs.vector(), scales, rng,
                                         deterministic=deterministic,
                                         offsets=offsets)
    return Action(desired_speed=float(bounded[0]),
                  steering_angle=float(bounded[1])), log_prob


def value_of(params: PolicyParams, obs_batch: np.ndarray) -> np.ndarray:
    v, _ = forward(params.critic_spec, params.flat, obs_batch,
                   prefix="critic_")
    return v[..., 0]


# ---------------------------------------------------------------------- GAE


def compute_gae(rewards: np.ndarray, values: np.ndarray,
                terminals: np.ndarray, gamma: float, lam: float,
                bootstrap_value: float = 0.0
                ) -> Tuple[np.ndarray, np.ndarray]:
    """Standard GAE recursion resetting at terminals; returns = adv + values."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    if not rewards.shape == values.shape == terminals.shape:
        raise ValueError("rewards, values, terminals must share shape")
    n = rewards.size
    advantages = np.zeros(n)
    last_adv = 0.0
    next_value = bootstrap_value
    for t in range(n - 1, -1, -1):
        live = 0.0 if terminals[t] else 1.0
        delta = rewards[t] + gamma * next_value * live - values[t]
        last_adv = delta + gamma * lam * live * last_adv
        advantages[t] = last_adv
        next_value = values[t]
    return advantages, advantages + values


# ------------------------------------------------------------------ rollout


@dataclass
class RolloutBatch:
    observations: np.ndarray
    actions: np.ndarray  # pre-squash samples
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    terminals: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __post_init__(self):
        n = self.observations.shape[0]
        for name in ("actions", "log_probs", "rewards", "values",
                     "terminals", "advantages", "returns"):
            if getattr(self, name).shape[0] != n:
                raise ValueError("rollout arrays must share length")
        if not np.all(np.isfinite(self.advantages)):
            raise ValueError("non-finite advantages")


@dataclass
class RolloutStats:
    episode_rewards: List[float] = field(default_factory=list)
    episode_successes: List[bool] = field(default_factory=list)

    @property
    def reward_mean(self) -> float:
        if not self.episode_rewards:
            return float("nan")
        return float(np.mean(self.episode_rewards))

    @property
    def success_rate(self) -> float:
        if not self.episode_successes:
            return float("nan")
        return float(np.mean(self.episode_successes))


def collect_rollout(env, params: PolicyParams, cfg: PpoConfig,
                    update_index: int) -> Tuple[RolloutBatch, RolloutStats]:
    """Fixed-length on-policy rollout; starts with a fresh episode."""
    scales = np.asarray(env.action_scales, dtype=np.float64)
    offsets = np.asarray(env.action_offsets, dtype=np.float64)
    rng = np.random.default_rng(
        seeds.derive_seed(cfg.seed, "rollout", env.stage, update_index))
    obs_buf = np.zeros((cfg.rollout_steps, params.obs_dim))
    act_buf = np.zeros((cfg.rollout_steps, params.action_dim))
    logp_buf = np.zeros(cfg.rollout_steps)
    rew_buf = np.zeros(cfg.rollout_steps)
    done_buf = np.zeros(cfg.rollout_steps, dtype=bool)

    stats = RolloutStats()
    episode_idx = 0
    obs = env.reset(update_index, episode_idx)
    episode_reward = 0.0
    for t in range(cfg.rollout_steps):
        bounded, z, log_prob = sample_action(params, obs, scales, rng,
                                             offsets=offsets)
        next_obs, reward, done, info = env.step(bounded)
        obs_buf[t] = obs
        act_buf[t] = z
        # Store the pre-squash Gaussian log-prob: the squash correction is
        # constant given z, so it cancels in the update's ratios anyway.
        logp_buf[t] = log_prob + float(_squash_correction(z, scales))
        rew_buf[t] = reward
        done_buf[t] = done
        episode_reward += reward
        if done:
            stats.episode_rewards.append(episode_reward)
            stats.episode_successes.append(bool(info.get("success", False)))
            episode_reward = 0.0
            episode_idx += 1
            obs = env.reset(update_index, episode_idx)
        else:
            obs = next_obs

    values = value_of(params, obs_buf)
    bootstrap = 0.0 if done_buf[-1] else float(value_of(params, obs[None])[0])
    advantages, returns = compute_gae(rew_buf, values, done_buf,
                                      cfg.gamma, cfg.gae_lambda, bootstrap)
    batch = RolloutBatch(observations=obs_buf, actions=act_buf,
                         log_probs=logp_buf, rewards=rew_buf, values=values,
                         terminals=done_buf, advantages=advantages,
                         returns=returns)
    return batch, stats


# ------------------------------------------------------------------- update


def _minibatch_gradients(params: PolicyParams, cfg: PpoConfig,
                         obs: np.ndarray, actions: np.ndarray,
                         old_logp: np.ndarray, advantages: np.ndarray,
                         returns: np.ndarray
                         ) -> Tuple[ParamVector, Dict[str, float]]:
    """Gradient of the clipped-surrogate + value loss over one minibatch."""
    n = obs.shape[0]
    grads = params.flat.zeros_like()
    log_std = params.flat.view("log_std")

    mean, tape_a = forward(params.actor_spec, params.flat, obs,
                           prefix="actor_")
    new_logp = gaussian_logprob(mean, log_std, actions)
    log_ratio = new_logp - old_logp
    ratio = np.exp(log_ratio)
    if not np.all(np.isfinite(ratio)):
        raise RuntimeError("non-finite probability ratio in PPO update")

    surr1 = ratio * advantages
    clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
    surr2 = clipped * advantages
    policy_loss = float(-np.mean(np.minimum(surr1, surr2)))

    # d(-min)/d(logp): the unclipped branch is active where surr1 <= surr2;
    # the clipped branch has zero derivative wrt ratio.
    active = surr1 <= surr2
    dloss_dlogp = np.where(active, -advantages * ratio, 0.0) / n

    d_mean, d_log_std = gaussian_logprob_grad(mean, log_std, actions)
    backward(params.actor_spec, params.flat, tape_a,
             d_mean * dloss_dlogp[:, None], prefix="actor_", into=grads)
    grads.view("log_std")[...] += np.sum(
        d_log_std * dloss_dlogp[:, None], axis=0)
    if cfg.entropy_coef != 0.0:
        # Entropy of the pre-squash Gaussian: d/d log_std = 1 per dim.
        grads.view("log_std")[...] -= cfg.entropy_coef

    v, tape_c = forward(params.critic_spec, params.flat, obs,
                        prefix="critic_")
    v = v[:, 0]
    value_loss = float(np.mean((v - returns) ** 2))
    dv = (2.0 * (v - returns) / n) * cfg.value_coef
    backward(params.critic_spec, params.flat, tape_c, dv[:, None],
             prefix="critic_", into=grads)

    entropy = gaussian_entropy(log_std)
    total = policy_loss + cfg.value_coef * value_loss \
        - cfg.entropy_coef * entropy
    if not math.isfinite(total):
        raise RuntimeError("non-finite PPO loss: policy=%r value=%r"
                           % (policy_loss, value_loss))
    metrics = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_epsilon)),
        "approx_kl": float(np.mean(old_logp - new_logp)),
        "entropy": entropy,
    }
    return grads, metrics


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    std = advantages.std()
    if std == 0.0:
        return advantages - advantages.mean()
    return (advantages - advantages.mean()) / std


# Exploration noise is kept inside a sane band so ratios stay finite.
LOG_STD_BOUNDS = (-3.0, 1.0)


def ppo_update(batch: RolloutBatch, params: PolicyParams, cfg: PpoConfig,
               adam: Optional[AdamState] = None, update_index: int = 0
               ) -> Tuple[PolicyParams, Dict[str, float], AdamState]:
    """Epochs of minibatch Adam steps on the clipped surrogate."""
    if adam is None:
        adam = AdamState.for_params(params.flat,
                                    learning_rate=cfg.learning_rate)
    advantages = normalize_advantages(batch.advantages)
    n = batch.observations.shape[0]
    params = params.copy()
    metric_sums: Dict[str, float] = {}
    count = 0
    for epoch in range(cfg.epochs_per_update):
        order = np.random.default_rng(
            seeds.derive_seed(cfg.seed, "ppo-shuffle", update_index,
                              epoch)).permutation(n)
        for lo in range(0, n, cfg.minibatch_size):
            idx = order[lo:lo + cfg.minibatch_size]
            grads, metrics = _minibatch_gradients(
                params, cfg, batch.observations[idx], batch.actions[idx],
                batch.log_probs[idx], advantages[idx], batch.returns[idx])
            new_flat, adam = adam_step(params.flat, grads, adam)
            params.flat = new_flat
            np.clip(params.flat.view("log_std"), LOG_STD_BOUNDS[0],
                    LOG_STD_BOUNDS[1], out=params.flat.view("log_std"))
            for key, val in metrics.items():
                metric_sums[key] = metric_sums.get(key, 0.0) + val
            count += 1
    averaged = {key: val / count for key, val in metric_sums.items()}
    return params, averaged, adam


# --------------------------------------------------------------- curriculum


@dataclass(frozen=True)
class StageSpec:
    stage: int
    updates: int
    promote_threshold: float = 0.9
    eval_episodes: int = 10

    def __post_init__(self):
        if self.updates < 1 or self.eval_episodes < 1:
            raise ValueError("updates and eval_episodes must be >= 1")
        if not 0 < self.promote_threshold <= 1:
            raise ValueError("promote_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class CurriculumSchedule:
    stages: Tuple[StageSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("schedule needs at least one stage")
        indices = [s.stage for s in self.stages]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("stage indices must be strictly increasing")
        if indices[0] < 0:
            raise ValueError("stage indices must be non-negative")


@dataclass
class UpdateRecord:
    update_index: int
    stage: int
    reward_mean: float
    success_rate: float
    episodes: int
    policy_loss: float
    value_loss: float
    clip_fraction: float
    approx_kl: float
    eval_success_rate: float


@dataclass
class TrainState:
    params: PolicyParams
    adam: AdamState
    update_index: int = 0
    stage_cursor: int = 0
    updates_in_stage: int = 0


def evaluate_policy(env, params: PolicyParams, episodes: int,
                    label: str) -> float:
    """Deterministic-policy success rate over seeded evaluation episodes."""
    scales = np.asarray(env.action_scales, dtype=np.float64)
    offsets = np.asarray(env.action_offsets, dtype=np.float64)
    successes = 0
    for ep in range(episodes):
        obs = env.reset(label, ep)
        for _ in range(env.max_steps):
            bounded, _, _ = sample_action(params, obs, scales, None,
                                          deterministic=True,
                                          offsets=offsets)
            obs, _, done, info = env.step(bounded)
            if done:
                successes += bool(info.get("success", False))
                break
    return successes / episodes


def train(schedule: CurriculumSchedule, env_factory: Callable[[int], object],
          cfg: PpoConfig, state: Optional[TrainState] = None,
          log_hook: Optional[Callable[[UpdateRecord], None]] = None,
          stage_hook: Optional[Callable[[TrainState, int], None]] = None
          ) -> Tuple[TrainState, List[UpdateRecord]]:
    """Curriculum loop: rollouts, updates, promotion gate per stage.

    Resumable: a state carrying (params, adam, update_index, stage_cursor,
    updates_in_stage) continues exactly where it stopped, and the resumed
    run is bit-identical to an uninterrupted one because all randomness
    derives from (seed, stage, update_index).
    """
    log: List[UpdateRecord] = []
    env0 = env_factory(schedule.stages[0].stage)
    if state is None:
        params = init_policy(env0.obs_dim, len(env0.action_scales), cfg)
        state = TrainState(
            params=params,
            adam=AdamState.for_params(params.flat,
                                      learning_rate=cfg.learning_rate))
    while state.stage_cursor < len(schedule.stages):
        spec = schedule.stages[state.stage_cursor]
        env = env_factory(spec.stage)
        promoted = False
        while state.updates_in_stage < spec.updates and not promoted:
            batch, stats = collect_rollout(env, state.params, cfg,
                                           state.update_index)
            new_params, metrics, adam = ppo_update(
                batch, state.params, cfg, state.adam, state.update_index)
            state.params = new_params
            state.adam = adam
            eval_rate = evaluate_policy(
                env, state.params, spec.eval_episodes,
                "promo-%d" % state.update_index)
            record = UpdateRecord(
                update_index=state.update_index, stage=spec.stage,
                reward_mean=stats.reward_mean,
                success_rate=stats.success_rate,
                episodes=len(stats.episode_rewards),
                policy_loss=metrics["policy_loss"],
                value_loss=metrics["value_loss"],
                clip_fraction=metrics["clip_fraction"],
                approx_kl=metrics["approx_kl"],
                eval_success_rate=eval_rate)
            log.append(record)
            if log_hook is not None:
                log_hook(record)
            state.update_index += 1
            state.updates_in_stage += 1
            promoted = eval_rate >= spec.promote_threshold
        state.stage_cursor += 1
        state.updates_in_stage = 0
        if stage_hook is not None:
            stage_hook(state, spec.stage)
    return state, log


# --------------------------------------------------------------- checkpoint


def dump_policy(state: TrainState) -> bytes:
    """Flat checkpoint: policy entries, Adam moments, resume counters."""
    from .nn import dump_params
    extras = [
        make_param("opt_m", state.adam.first_moment),
        make_param("opt_v", state.adam.second_moment),
        make_param("counters", np.array([
            state.adam.step_count, state.update_index,
            state.stage_cursor, state.updates_in_stage], dtype=np.float64)),
    ]
    return dump_params(concat_params([state.params.flat] + extras))


def parse_policy(data: bytes, cfg: PpoConfig) -> TrainState:
    from .nn import parse_params
    merged = parse_params(data)
    policy_layout = [(n, s) for n, s in merged.layout
                     if n.startswith(("actor_", "critic_")) or n == "log_std"]
    values = np.concatenate([merged.view(n).ravel() for n, _ in policy_layout])
    flat = ParamVector(values, policy_layout)
    obs_dim = flat.view("actor_W0").shape[1]
    action_dim = flat.view("log_std").shape[0]
    actor_spec = MlpSpec((obs_dim,) + cfg.actor_layers + (action_dim,),
                         activation="tanh")
    critic_spec = MlpSpec((obs_dim,) + cfg.critic_layers + (1,),
                          activation="tanh")
    params = PolicyParams(flat=flat, obs_dim=obs_dim, action_dim=action_dim,
                          actor_spec=actor_spec, critic_spec=critic_spec)
    counters = merged.view("counters")
    adam = AdamState(first_moment=merged.view("opt_m").copy(),
                     second_moment=merged.view("opt_v").copy(),
                     step_count=int(counters[0]),
                     learning_rate=cfg.learning_rate)
    return TrainState(params=params, adam=adam,
                      update_index=int(counters[1]),
                      stage_cursor=int(counters[2]),
                      updates_in_stage=int(counters[3]))


def save_policy(path, state: TrainState) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_policy(state))


def load_policy(path, cfg: PpoConfig) -> TrainState:
    with open(path, "rb") as fh:
        return parse_policy(fh.read(), cfg)


# -------------------------------------------------------------- environment


class NavEnv:
    """Navigation episodes on one terrain stage for rollout collection.

    Observations are flat vectors (heading error, speed, latent). Actions
    arrive already squashed to physical bounds. Episode seeds derive from
    (seed, stage, labels passed to reset), so trajectories are reproducible
    without carrying environment state across checkpoints.
    """

    def __init__(self, terrain: HeightMap, swae_params: SwaeParams,
                 swae_cfg: SwaeConfig,
                 vehicle_params: VehicleParams = VehicleParams(),
                 reward_cfg: RewardConfig = RewardConfig(),
                 goal_radius: float = 0.2, dt: float = 0.1,
                 time_limit: float = 15.0, seed: int = 0, stage: int = 0):
        self.terrain = terrain
        self.swae_params = swae_params
        self.swae_cfg = swae_cfg
        self.vehicle_params = vehicle_params
        self.reward_cfg = reward_cfg
        self.goal_radius = goal_radius
        self.dt = dt
        self.time_limit = time_limit
        self.seed = seed
        self.stage = stage
        self.episode: Optional[Episode] = None
        self.action_scales, self.action_offsets = action_bounds(
            vehicle_params)
        self.obs_dim = 2 + swae_cfg.latent_dim
        self.max_steps = int(round(time_limit / dt))

    def _observe(self) -> np.ndarray:
        return observe(self.episode.state, self.episode.config.goal,
                       self.swae_params, self.swae_cfg,
                       self.terrain).vector()

    def reset(self, *labels) -> np.ndarray:
        rng = np.random.default_rng(
            seeds.derive_seed(self.seed, "episode", self.stage, *labels))
        start, goal = sample_start_goal(self.terrain, self.vehicle_params,
                                        rng)
        config = EpisodeConfig(map=self.terrain, start=start, goal=goal,
                               goal_radius=self.goal_radius, dt=self.dt,
                               time_limit=self.time_limit)
        self.episode = Episode(config, self.vehicle_params)
        return self._observe()

    def step(self, action_vec: np.ndarray
             ) -> Tuple[np.ndarray, float, bool, Dict]:
        action = Action(desired_speed=float(action_vec[0]),
                        steering_angle=float(action_vec[1]))
        result = self.episode.step(action)
        reward = total_reward(result, self.reward_cfg).total
        done = result.terminal is not Terminal.RUNNING
        info = {
            "terminal": result.terminal,
            "success": result.terminal is Terminal.GOAL_REACHED,
            "result": result,
        }
        return self._observe(), reward, done, info
