"""Non-learning policies and the shared episode evaluation routine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ScenarioConfig
from .env import InventoryEnv, action_bounds, clip_action

__all__ = [
    "Policy",
    "ZeroPolicy",
    "RandomPolicy",
    "SQParams",
    "SQPolicy",
    "sq_act",
    "EvalResult",
    "evaluate_policy",
]

_RANDOM_POLICY_SALT = 0x5EED


class Policy:
    """A policy maps an observation to a raw (float) action vector.

    The raw vector is discretized by ``clip_action`` before it reaches the
    environment. ``reset`` is called once per episode; the optional seed is
    the episode seed, so stochastic policies stay reproducible under the
    evaluation protocol.
    """

    def act(self, observation: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reset(self, seed: int | None = None) -> None:
        pass


class ZeroPolicy(Policy):
    def __init__(self, config: ScenarioConfig):
        self._zeros = np.zeros(config.action_dim)

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._zeros.copy()


class RandomPolicy(Policy):
    """Uniform integer action in each component's bounds."""

    def __init__(self, config: ScenarioConfig, seed: int = 0):
        self.bounds = action_bounds(config)
        self.reset(seed)

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            # salted so the stream never collides with the env's demand stream
            self._rng = np.random.default_rng((seed, _RANDOM_POLICY_SALT))

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._rng.integers(self.bounds[:, 0], self.bounds[:, 1] + 1).astype(float)


@dataclass
class SQParams:
    """Static reorder-point parameters, one (s, Q) pair per (product, node).

    Node 0 is the factory: production is triggered by factory stock against
    its own reorder point, the same rule the warehouses use.
    """

    s: np.ndarray  # (products, nodes) reorder points
    Q: np.ndarray  # (products, nodes) order quantities

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.int64)
        self.Q = np.asarray(self.Q, dtype=np.int64)
        if self.s.shape != self.Q.shape or self.s.ndim != 2:
            raise ConfigError("SQParams: s and Q must be equal-shape (products, nodes) arrays")

    def validate(self, config: ScenarioConfig) -> None:
        shape = (config.num_products, config.num_nodes)
        if self.s.shape != shape:
            raise ConfigError(f"SQParams: expected shape {shape}, got {self.s.shape}")
        upper = action_bounds(config)[:, 1].reshape(shape)
        if np.any(self.s < 0) or np.any(self.s > config.storage_capacity):
            raise ConfigError("SQParams: s must satisfy 0 <= s <= storage_capacity")
        if np.any(self.Q < 0) or np.any(self.Q > upper):
            raise ConfigError("SQParams: Q must satisfy 0 <= Q <= action upper bound")

    def to_dict(self) -> dict:
        return {"s": self.s.tolist(), "Q": self.Q.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SQParams":
        try:
            return cls(s=np.asarray(data["s"]), Q=np.asarray(data["Q"]))
        except KeyError as exc:
            raise ConfigError(f"SQParams: missing field {exc}") from exc


def sq_act(params: SQParams, stock: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Reorder rule: order Q wherever stock has fallen strictly below s."""
    raw = np.where(stock < params.s, params.Q, 0).reshape(-1).astype(float)
    return clip_action(raw, bounds)


class SQPolicy(Policy):
    def __init__(self, config: ScenarioConfig, params: SQParams):
        params.validate(config)
        self.params = params
        self._shape = (config.num_products, config.num_nodes)

    def act(self, observation: np.ndarray) -> np.ndarray:
        n = self._shape[0] * self._shape[1]
        stock = observation[:n].reshape(self._shape)
        return np.where(stock < self.params.s, self.params.Q, 0).reshape(-1).astype(float)


@dataclass
class EvalResult:
    mean: float
    std: float  # population standard deviation
    per_episode: np.ndarray

    def as_tuple(self) -> tuple[float, float]:
        return self.mean, self.std


def evaluate_policy(
    config: ScenarioConfig,
    policy: Policy,
    n_episodes: int,
    seed_base: int = 0,
) -> EvalResult:
    """Cumulative undiscounted profit over episodes seeded seed_base..seed_base+n-1.

    All methods compared under one protocol must share the seed base so the
    comparison is paired on identical demand realizations.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    env = InventoryEnv(config, seed=seed_base)
    bounds = env.bounds
    totals = np.zeros(n_episodes)
    for k in range(n_episodes):
        obs = env.reset(seed=seed_base + k)
        policy.reset(seed=seed_base + k)
        total = 0.0
        done = False
        while not done:
            action = clip_action(policy.act(obs), bounds)
            outcome = env.step(action)
            total += outcome.reward
            obs = outcome.observation
            done = outcome.done
        totals[k] = total
    return EvalResult(mean=float(totals.mean()), std=float(totals.std()), per_episode=totals)
