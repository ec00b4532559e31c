"""Policy-gradient agents: VPG (REINFORCE with a value baseline) and PPO.

Both share a squashed-Gaussian actor: a tanh MLP outputs a pre-squash mean
per action dimension, a state-independent learned log-std sets exploration,
and samples are mapped onto [0, upper] per dimension with a sigmoid (the
log-probability carries the change-of-variables correction). Keeping the
squash instead of clipping keeps gradients informative at the bounds, where
capacity-saturated shipping often lives.

Rollouts are collected from a small pool of sequential environments, one
fragment each per batch; advantages come from GAE. Updates are plain SGD
or Adam over hand-written gradients from :mod:`echelon.nn`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .env import InventoryEnv, action_bounds, clip_action
from .nn import MLP, Adam, SGD, clip_by_global_norm
from .policies import Policy, evaluate_policy

__all__ = [
    "TrainConfig",
    "default_train_config",
    "SquashedGaussianActor",
    "NeuralPolicy",
    "RolloutBuffer",
    "compute_gae",
    "vpg_policy_grads",
    "ppo_policy_grads",
    "value_grads",
    "vpg_update",
    "ppo_update",
    "train",
    "TrainResult",
    "save_checkpoint",
    "load_checkpoint",
    "training_trial_factory",
]


@dataclass
class TrainConfig:
    hidden: tuple = (64, 64)
    learning_rate: float = 5e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    rollout_fragment_length: int = 25
    train_batch_size: int = 500
    clip_eps: float = 0.2
    ppo_epochs: int = 15
    minibatch_size: int = 128
    grad_clip: float = 20.0          # global norm; <= 0 disables
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    init_log_std: float = 0.0        # pre-squash exploration std starts at exp(this)
    reward_scale: float = 0.01       # training-only; evaluations report raw profit
    optimizer: str = "sgd"           # "sgd" or "adam"
    total_episodes: int = 3000
    eval_every: int = 500            # episodes between deterministic evaluations
    eval_episodes: int = 50
    eval_seed_base: int = 100_000

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be > 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def default_train_config(algo: str) -> TrainConfig:
    """Desk-scale defaults that train reliably on the built-in scenarios."""
    if algo == "ppo":
        return TrainConfig(optimizer="adam", learning_rate=3e-4, train_batch_size=500,
                           ppo_epochs=15, minibatch_size=128)
    if algo == "vpg":
        return TrainConfig(optimizer="adam", learning_rate=1e-3, train_batch_size=500)
    raise ValueError(f"unknown algorithm {algo!r}")


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def observation_scales(config: ScenarioConfig) -> np.ndarray:
    """Fixed per-dimension scales: capacity for stocks, demand range for history."""
    stock_scale = np.maximum(config.storage_capacity, 1).astype(float).reshape(-1)
    demand_scale = np.maximum(config.demand_max + config.demand_var, 1.0)
    per_pair = np.broadcast_to(
        demand_scale[:, None], (config.num_products, config.num_warehouses)
    ).reshape(-1)
    history_scale = np.tile(per_pair, config.history_len)
    return np.concatenate([stock_scale, history_scale])


class SquashedGaussianActor:
    """Gaussian-in-z policy squashed onto [0, upper] per action dimension."""

    LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0

    def __init__(self, obs_dim: int, upper: np.ndarray, hidden=(64, 64),
                 rng: np.random.Generator | None = None, obs_scale: np.ndarray | None = None):
        rng = rng or np.random.default_rng(0)
        self.upper = np.asarray(upper, dtype=float)
        self.mask = (self.upper > 0).astype(float)
        self.obs_scale = np.ones(obs_dim) if obs_scale is None else np.asarray(obs_scale, float)
        self.net = MLP([obs_dim, *hidden, len(self.upper)], rng, out_scale=0.01)
        self.log_std = np.zeros(len(self.upper))  # pre-squash std starts at 1

    @property
    def params(self) -> list:
        return self.net.params + [self.log_std]

    def set_params(self, params: list) -> None:
        self.net.params = [p.copy() for p in params[:-1]]
        self.log_std = params[-1].copy()

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs, dtype=float) / self.obs_scale

    def means(self, obs_batch: np.ndarray):
        """Pre-squash means for a batch of raw observations, plus backprop cache."""
        return self.net.forward_cache(self.normalize(obs_batch))

    def std(self) -> np.ndarray:
        return np.exp(np.clip(self.log_std, self.LOG_STD_MIN, self.LOG_STD_MAX))

    def squash(self, z: np.ndarray) -> np.ndarray:
        return self.upper * _sigmoid(z)

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        """Draw one action; returns (pre-squash z, squashed action, log-prob)."""
        means, _ = self.means(obs)
        mean = means[0]
        z = mean + self.std() * rng.standard_normal(mean.shape)
        return z, self.squash(z), float(self.log_prob(mean[None, :], z[None, :])[0])

    def log_prob(self, means: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Log density of the squashed action recovered from pre-squash z.

        Dimensions with upper bound 0 are deterministic and contribute
        nothing. The squash correction -log(upper * s(z) * (1 - s(z))) is
        constant in the parameters, so it never appears in the gradients.
        """
        std = self.std()
        zc = (z - means) / std
        gauss = -0.5 * zc * zc - np.log(std) - 0.5 * np.log(2.0 * np.pi)
        with np.errstate(divide="ignore"):
            squash = np.where(self.mask > 0, -np.log(np.where(self.upper > 0, self.upper, 1.0))
                              + _softplus(z) + _softplus(-z), 0.0)
        return ((gauss + squash) * self.mask).sum(axis=1)

    def log_prob_param_grads(self, means: np.ndarray, z: np.ndarray):
        """d log_prob / d mean (per sample) and / d log_std (per sample)."""
        std = self.std()
        zc = (z - means) / std
        d_mean = (zc / std) * self.mask
        d_log_std = (zc * zc - 1.0) * self.mask
        return d_mean, d_log_std

    def deterministic_action(self, obs: np.ndarray) -> np.ndarray:
        means, _ = self.means(obs)
        return self.squash(means[0])

    def copy(self) -> "SquashedGaussianActor":
        clone = object.__new__(SquashedGaussianActor)
        clone.upper = self.upper.copy()
        clone.mask = self.mask.copy()
        clone.obs_scale = self.obs_scale.copy()
        clone.net = self.net.copy()
        clone.log_std = self.log_std.copy()
        return clone


class NeuralPolicy(Policy):
    """Greedy (deterministic) wrapper so trained actors plug into evaluate_policy."""

    def __init__(self, actor: SquashedGaussianActor):
        self.actor = actor

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self.actor.deterministic_action(observation)


class RolloutBuffer:
    """Step-aligned rollout storage plus fragment bookkeeping for GAE.

    Fragments are contiguous runs from one environment; each carries the
    value estimate of the state after its last step (zero when that step
    ended the episode) so advantages can bootstrap at truncations.
    `value_input` is the critic's view of the step (the critic may carry
    extra features, such as episode progress, that the policy never sees).
    """

    def __init__(self):
        self.obs: list[np.ndarray] = []
        self.z: list[np.ndarray] = []
        self.logp: list[float] = []
        self.rewards: list[float] = []
        self.values: list[float] = []
        self.dones: list[bool] = []
        self.value_inputs: list[np.ndarray] = []
        self._fragments: list[tuple[int, int, float]] = []
        self._open = 0

    def add(self, obs, z, logp, reward, value, done, value_input=None) -> None:
        self.obs.append(np.asarray(obs, dtype=float))
        self.z.append(np.asarray(z, dtype=float))
        self.logp.append(float(logp))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.dones.append(bool(done))
        self.value_inputs.append(
            self.obs[-1] if value_input is None else np.asarray(value_input, dtype=float)
        )

    def finish_fragment(self, bootstrap_value: float) -> None:
        end = len(self.rewards)
        if end > self._open:
            self._fragments.append((self._open, end, float(bootstrap_value)))
            self._open = end

    def __len__(self) -> int:
        return len(self.rewards)

    def arrays(self) -> dict:
        if self._open != len(self.rewards):
            raise RuntimeError("unfinished fragment; call finish_fragment()")
        return {
            "obs": np.stack(self.obs),
            "z": np.stack(self.z),
            "logp": np.array(self.logp),
            "rewards": np.array(self.rewards),
            "values": np.array(self.values),
            "dones": np.array(self.dones, dtype=bool),
            "value_inputs": np.stack(self.value_inputs),
            "fragments": list(self._fragments),
        }


def compute_gae(buffer: RolloutBuffer, gamma: float, lam: float):
    """GAE advantages and value targets.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), accumulated
    as A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1} within each
    fragment; returns are advantages + values.
    """
    data = buffer.arrays()
    rewards, values, dones = data["rewards"], data["values"], data["dones"]
    advantages = np.zeros_like(rewards)
    for start, end, bootstrap in data["fragments"]:
        running = 0.0
        next_value = bootstrap
        for t in range(end - 1, start - 1, -1):
            cont = 0.0 if dones[t] else 1.0
            delta = rewards[t] + gamma * next_value * cont - values[t]
            running = delta + gamma * lam * cont * running
            advantages[t] = running
            next_value = values[t]
    return advantages, advantages + values


def _normalize(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def vpg_policy_grads(actor: SquashedGaussianActor, obs, z, advantages):
    """Gradient of -mean(log pi(a|s) * advantage) w.r.t. actor params."""
    means, cache = actor.means(obs)
    d_mean, d_log_std = actor.log_prob_param_grads(means, z)
    n = len(advantages)
    weights = advantages[:, None] / n
    net_grads, _ = actor.net.backward(cache, -weights * d_mean)
    return net_grads + [-(weights * d_log_std).sum(axis=0)]


def ppo_policy_grads(actor: SquashedGaussianActor, obs, z, advantages, logp_old, clip_eps):
    """Gradient of the clipped surrogate loss; also returns ratio statistics."""
    means, cache = actor.means(obs)
    logp_new = actor.log_prob(means, z)
    ratio = np.exp(logp_new - logp_old)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    use_unclipped = unclipped <= clipped  # min(); gradient follows the active branch
    n = len(advantages)
    weights = np.where(use_unclipped, ratio * advantages, 0.0)[:, None] / n
    d_mean, d_log_std = actor.log_prob_param_grads(means, z)
    net_grads, _ = actor.net.backward(cache, -weights * d_mean)
    grads = net_grads + [-(weights * d_log_std).sum(axis=0)]
    stats = {
        "mean_ratio": float(ratio.mean()),
        "clip_fraction": float(np.mean(~use_unclipped)),
        "surrogate": float(np.minimum(unclipped, clipped).mean()),
    }
    return grads, stats


def value_grads(value_net: MLP, obs, returns, coef: float = 0.5):
    """Gradient of coef * mean((V(s) - R)^2) plus the loss value."""
    v, cache = value_net.forward_cache(obs)
    err = v[:, 0] - returns
    grads, _ = value_net.backward(cache, (2.0 * coef / len(returns)) * err[:, None])
    return grads, float(coef * np.mean(err * err))


def _entropy_bonus(grads: list, actor: SquashedGaussianActor, coef: float) -> None:
    if coef > 0:
        grads[-1] -= coef * actor.mask  # d(-coef * sum(log_std)) / d log_std


def vpg_update(actor, value_net, buffer, cfg: TrainConfig, actor_opt, value_opt):
    """One REINFORCE-with-baseline step on the whole batch."""
    data = buffer.arrays()
    advantages, returns = compute_gae(buffer, cfg.gamma, cfg.gae_lambda)
    adv_n = _normalize(advantages)
    policy_grads = vpg_policy_grads(actor, data["obs"], data["z"], adv_n)
    _entropy_bonus(policy_grads, actor, cfg.entropy_coef)
    policy_grads, pnorm = clip_by_global_norm(policy_grads, cfg.grad_clip)
    vgrads, vloss = value_grads(value_net, data["value_inputs"], returns, cfg.value_coef)
    vgrads, vnorm = clip_by_global_norm(vgrads, cfg.grad_clip)
    if not (np.isfinite(pnorm) and np.isfinite(vnorm)):
        raise RuntimeError(f"non-finite gradients (policy {pnorm}, value {vnorm})")
    actor_opt.step(actor.params, policy_grads)
    value_opt.step(value_net.params, vgrads)
    return {"value_loss": vloss, "policy_grad_norm": pnorm, "value_grad_norm": vnorm}


def ppo_update(actor, value_net, buffer, cfg: TrainConfig, actor_opt, value_opt, rng):
    """Clipped-surrogate epochs over shuffled minibatches."""
    data = buffer.arrays()
    advantages, returns = compute_gae(buffer, cfg.gamma, cfg.gae_lambda)
    adv_n = _normalize(advantages)
    obs, z, logp_old, vin = data["obs"], data["z"], data["logp"], data["value_inputs"]
    n = len(adv_n)
    stats = {"mean_ratio": 0.0, "clip_fraction": 0.0, "value_loss": 0.0}
    batches = 0
    for _epoch in range(cfg.ppo_epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.minibatch_size):
            mb = order[lo : lo + cfg.minibatch_size]
            grads, mb_stats = ppo_policy_grads(
                actor, obs[mb], z[mb], adv_n[mb], logp_old[mb], cfg.clip_eps
            )
            _entropy_bonus(grads, actor, cfg.entropy_coef)
            grads, pnorm = clip_by_global_norm(grads, cfg.grad_clip)
            vgrads, vloss = value_grads(value_net, vin[mb], returns[mb], cfg.value_coef)
            vgrads, _ = clip_by_global_norm(vgrads, cfg.grad_clip)
            if not np.isfinite(pnorm) or not np.isfinite(vloss):
                raise RuntimeError(f"non-finite update (grad norm {pnorm}, value loss {vloss})")
            actor_opt.step(actor.params, grads)
            value_opt.step(value_net.params, vgrads)
            stats["mean_ratio"] += mb_stats["mean_ratio"]
            stats["clip_fraction"] += mb_stats["clip_fraction"]
            stats["value_loss"] += vloss
            batches += 1
    return {k: v / max(batches, 1) for k, v in stats.items()}


@dataclass
class TrainResult:
    policy: NeuralPolicy
    actor: SquashedGaussianActor
    value_net: MLP
    curve: list            # (episodes trained, eval mean, eval std)
    episodes: int
    train_config: TrainConfig
    scenario: ScenarioConfig
    algo: str
    seed: int


def _make_optimizer(cfg: TrainConfig):
    return Adam(cfg.learning_rate) if cfg.optimizer == "adam" else SGD(cfg.learning_rate)


def train(algo: str, cfg: TrainConfig, scenario: ScenarioConfig, seed: int = 0,
          curve_callback=None) -> TrainResult:
    """Train a policy on a scenario until the episode budget is spent.

    Alternates batch collection with updates, evaluating the greedy policy
    (eval_episodes deterministic episodes) every eval_every training
    episodes; the resulting curve always contains the initial evaluation
    and one final evaluation. Fully reproducible for a fixed seed.
    """
    if algo not in ("vpg", "ppo"):
        raise ValueError(f"unknown algorithm {algo!r}")
    trainer = _Trainer(algo, cfg, scenario, seed)
    curve = [trainer.evaluate()]
    if curve_callback:
        curve_callback(*curve[-1])
    next_eval = cfg.eval_every
    while trainer.episodes < cfg.total_episodes:
        trainer.collect_and_update()
        if trainer.episodes >= next_eval or trainer.episodes >= cfg.total_episodes:
            curve.append(trainer.evaluate())
            if curve_callback:
                curve_callback(*curve[-1])
            next_eval = trainer.episodes + cfg.eval_every
    return TrainResult(
        policy=NeuralPolicy(trainer.actor),
        actor=trainer.actor,
        value_net=trainer.value_net,
        curve=curve,
        episodes=trainer.episodes,
        train_config=cfg,
        scenario=scenario,
        algo=algo,
        seed=seed,
    )


class _Trainer:
    def __init__(self, algo: str, cfg: TrainConfig, scenario: ScenarioConfig, seed: int):
        self.algo = algo
        self.cfg = cfg
        self.scenario = scenario
        self.bounds = action_bounds(scenario)
        upper = self.bounds[:, 1].astype(float)
        init_rng = np.random.default_rng((seed, 0))
        self.actor = SquashedGaussianActor(
            scenario.observation_dim, upper, hidden=tuple(cfg.hidden), rng=init_rng,
            obs_scale=observation_scales(scenario),
        )
        self.actor.log_std += cfg.init_log_std
        # the critic additionally sees episode progress t/T: the horizon is
        # finite and the policy observation carries no clock
        self.value_net = MLP([scenario.observation_dim + 1, *cfg.hidden, 1], init_rng)
        self._value_obs_scale = self.actor.obs_scale
        self._horizon = float(scenario.episode_length)
        self.sample_rng = np.random.default_rng((seed, 1))
        self.shuffle_rng = np.random.default_rng((seed, 2))
        n_envs = max(1, cfg.train_batch_size // max(cfg.rollout_fragment_length, 1))
        self.envs = [InventoryEnv(scenario, seed=(seed * 9973 + 7919 * k)) for k in range(n_envs)]
        self.obs = [env.reset(seed=(seed * 9973 + 7919 * k)) for k, env in enumerate(self.envs)]
        self.actor_opt = _make_optimizer(cfg)
        self.value_opt = _make_optimizer(cfg)
        self.episodes = 0

    def _value_input(self, obs: np.ndarray, t: int) -> np.ndarray:
        return np.concatenate([obs / self._value_obs_scale, [t / self._horizon]])

    def _value(self, obs: np.ndarray, t: int) -> float:
        return float(self.value_net.forward(self._value_input(obs, t))[0, 0])

    def collect_and_update(self) -> dict:
        cfg = self.cfg
        buffer = RolloutBuffer()
        for k, env in enumerate(self.envs):
            obs = self.obs[k]
            done = False
            for _ in range(cfg.rollout_fragment_length):
                t = env.t
                z, action, logp = self.actor.sample(obs, self.sample_rng)
                outcome = env.step(clip_action(action, self.bounds))
                done = outcome.done
                value_input = self._value_input(obs, t)
                buffer.add(obs, z, logp, outcome.reward * cfg.reward_scale,
                           float(self.value_net.forward(value_input)[0, 0]), done,
                           value_input=value_input)
                if done:
                    self.episodes += 1
                    obs = env.reset()
                else:
                    obs = outcome.observation
            self.obs[k] = obs
            buffer.finish_fragment(0.0 if done else self._value(obs, env.t))
        if self.algo == "ppo":
            return ppo_update(self.actor, self.value_net, buffer, cfg,
                              self.actor_opt, self.value_opt, self.shuffle_rng)
        return vpg_update(self.actor, self.value_net, buffer, cfg,
                          self.actor_opt, self.value_opt)

    def evaluate(self) -> tuple:
        result = evaluate_policy(
            self.scenario, NeuralPolicy(self.actor), self.cfg.eval_episodes,
            seed_base=self.cfg.eval_seed_base,
        )
        return (self.episodes, result.mean, result.std)


def save_checkpoint(path: str | Path, result: TrainResult) -> None:
    """Persist actor and value parameters plus everything needed to rebuild them."""
    arrays = {f"actor_{k}": p for k, p in enumerate(result.actor.params)}
    arrays.update({f"value_{k}": p for k, p in enumerate(result.value_net.params)})
    arrays["upper"] = result.actor.upper
    arrays["obs_scale"] = result.actor.obs_scale
    meta = {
        "algo": result.algo,
        "seed": result.seed,
        "episodes": result.episodes,
        "train_config": {**result.train_config.__dict__, "hidden": list(result.train_config.hidden)},
        "scenario": result.scenario.to_dict(),
    }
    np.savez(path, meta=json.dumps(meta), **arrays)


def load_checkpoint(path: str | Path):
    """Rebuild (policy, metadata) from a checkpoint written by save_checkpoint."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        upper = data["upper"]
        obs_scale = data["obs_scale"]
        actor_params = [data[f"actor_{k}"] for k in range(sum(1 for n in data.files if n.startswith("actor_")))]
    hidden = tuple(meta["train_config"]["hidden"])
    actor = SquashedGaussianActor(len(obs_scale), upper, hidden=hidden,
                                  rng=np.random.default_rng(0), obs_scale=obs_scale)
    actor.set_params(actor_params)
    return NeuralPolicy(actor), meta


_PARAM_FIELDS = {
    "hidden_layers": "hidden",
    "learning_rate": "learning_rate",
    "rollout_fragment_length": "rollout_fragment_length",
    "train_batch_size": "train_batch_size",
    "grad_clip": "grad_clip",
    "sgd_minibatch_size": "minibatch_size",
    "sgd_iterations": "ppo_epochs",
}


def apply_hyperparameters(cfg: TrainConfig, params: dict) -> TrainConfig:
    """Overlay sweep-style hyperparameter names onto a TrainConfig."""
    updates = {}
    for name, value in params.items():
        if name not in _PARAM_FIELDS:
            raise ValueError(f"unknown hyperparameter {name!r}")
        field_name = _PARAM_FIELDS[name]
        updates[field_name] = tuple(value) if field_name == "hidden" else value
    return replace(cfg, **updates)


def training_trial_factory(algo: str, scenario: ScenarioConfig, base_cfg: TrainConfig, seed: int = 0):
    """Adapter for the tuners: params -> resumable trial callable.

    Each trial trains incrementally up to the cumulative episode budget it
    is called with and returns the greedy policy's evaluation mean.
    """

    def factory(params: dict):
        cfg = apply_hyperparameters(base_cfg, params)
        trainer = _Trainer(algo, cfg, scenario, seed)

        def run(budget: float) -> float:
            while trainer.episodes < budget:
                trainer.collect_and_update()
            return trainer.evaluate()[1]

        return run

    return factory
