"""Two-echelon inventory environment.

One factory (node 0) produces discrete quantities of each product type and
ships them to distribution warehouses (nodes 1..J) that face seasonal,
stochastic customer demand. Unmet demand persists as negative stock
(backordering) and is charged a per-step penalty until filled; stock above
capacity is discarded by the transition rule.

Layout conventions used throughout the package:

* actions are flat nonnegative integer vectors of length
  ``num_products * (num_warehouses + 1)``, product-major, node 0 first
  (production, then one shipment entry per warehouse);
* observations are flat float vectors: all stock levels in the same order,
  followed by the last ``history_len`` demand vectors, oldest first, each
  product-major over warehouses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig

__all__ = [
    "seasonal_level",
    "sample_demand",
    "demand_matrix",
    "action_bounds",
    "clip_action",
    "transition",
    "StepOutcome",
    "InventoryEnv",
]

BREAKDOWN_KEYS = ("revenue", "production_cost", "transport_cost", "storage_cost", "penalty_cost")


def seasonal_level(config: ScenarioConfig, product: int, node: int, t: int) -> float:
    """Deterministic demand component for `product` at warehouse `node` (1-based) at step t.

    Phase indices are 1-based so that every (product, warehouse) pair gets a
    distinct phase shift of the same co-sinusoidal curve.
    """
    phase = 2 * (product + 1) * node + t
    amplitude = config.demand_max[product] / 2.0
    return amplitude * (1.0 + math.cos(4.0 * math.pi * phase / config.episode_length))


def sample_demand(
    config: ScenarioConfig, product: int, node: int, t: int, rng: np.random.Generator
) -> int:
    """One stochastic demand draw: floor(seasonal level + U(0, demand_var))."""
    noise = rng.random() * config.demand_var[product]
    return int(math.floor(seasonal_level(config, product, node, t) + noise))


def demand_matrix(config: ScenarioConfig, t: int, rng: np.random.Generator) -> np.ndarray:
    """Demand for every (product, warehouse) at step t, shape (products, warehouses).

    This is the canonical draw used by both the environment and the
    clairvoyant demand realization: it always consumes exactly
    ``num_products * num_warehouses`` uniforms from `rng`, so the two stay
    stream-aligned for equal seeds.
    """
    level = np.array(
        [
            [seasonal_level(config, i, j, t) for j in range(1, config.num_nodes)]
            for i in range(config.num_products)
        ]
    )
    noise = rng.random((config.num_products, config.num_warehouses)) * config.demand_var[:, None]
    return np.floor(level + noise).astype(np.int64)


def action_bounds(config: ScenarioConfig) -> np.ndarray:
    """Inclusive integer (lower, upper) bounds per action component, shape (action_dim, 2).

    Lower bounds are zero. Each warehouse shipment is capped by that
    warehouse's capacity; factory production is capped by the sum of all
    capacities so the factory can always cover every warehouse.
    """
    upper = config.storage_capacity.copy()
    upper[:, 0] = config.storage_capacity.sum(axis=1)
    bounds = np.zeros((config.action_dim, 2), dtype=np.int64)
    bounds[:, 1] = upper.reshape(-1)
    return bounds


def clip_action(raw: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Discretize a raw action: floor each component, then clamp into its bounds."""
    raw = np.asarray(raw, dtype=float).reshape(-1)
    if raw.shape[0] != bounds.shape[0]:
        raise ValueError(f"action length {raw.shape[0]} does not match bounds length {bounds.shape[0]}")
    floored = np.floor(raw).astype(np.int64)
    return np.clip(floored, bounds[:, 0], bounds[:, 1])


def transition(
    config: ScenarioConfig, stock: np.ndarray, action: np.ndarray, demand: np.ndarray
):
    """Apply one step of inventory dynamics and price it.

    `stock` and `action` have shape (..., products, nodes) and `demand`
    (..., products, warehouses); leading batch dimensions broadcast. Returns
    ``(new_stock, reward, breakdown)`` where the breakdown dict carries the
    five cost/revenue terms (all nonnegative, penalty included as a cost).

    Factory stock is the old stock plus production minus everything shipped;
    warehouse stock is the old stock plus the shipment minus demand. Both
    are clipped from above at capacity (overflow is discarded), never from
    below: negative stock is backlog. Revenue counts all demand whether or
    not it is served; storage is charged on positive stock and the backlog
    penalty on negative stock, both post-transition.
    """
    stock = np.asarray(stock)
    action = np.asarray(action)
    cap = config.storage_capacity

    new_stock = np.empty(np.broadcast_shapes(stock.shape, action.shape), dtype=np.int64)
    new_stock[..., :, 0] = np.minimum(
        stock[..., :, 0] + action[..., :, 0] - action[..., :, 1:].sum(axis=-1), cap[:, 0]
    )
    new_stock[..., :, 1:] = np.minimum(stock[..., :, 1:] + action[..., :, 1:] - demand, cap[:, 1:])

    revenue = (config.sale_price[:, None] * demand).sum(axis=(-2, -1))
    production = (config.production_cost * action[..., :, 0]).sum(axis=-1)
    transport = (config.transport_cost * action[..., :, 1:]).sum(axis=(-2, -1))
    storage = (config.storage_cost * np.maximum(new_stock, 0)).sum(axis=(-2, -1))
    penalty = (
        config.penalty_coeff[:, None]
        * config.sale_price[:, None]
        * np.minimum(new_stock, 0)
    ).sum(axis=(-2, -1))

    reward = revenue - production - transport - storage + penalty
    breakdown = {
        "revenue": revenue,
        "production_cost": production,
        "transport_cost": transport,
        "storage_cost": storage,
        "penalty_cost": -penalty + 0.0,  # avoid -0.0
    }
    return new_stock, reward, breakdown


@dataclass
class StepOutcome:
    reward: float
    breakdown: dict
    observation: np.ndarray
    demand_realized: np.ndarray  # (products, warehouses) integer units
    done: bool


class InventoryEnv:
    """The inventory control MDP.

    Each instance owns its pseudo-random stream, derived only from the seed:
    two environments built from equal ``(config, seed)`` produce identical
    trajectories under identical action sequences. ``reset(seed=...)``
    restarts the stream, which is how evaluation protocols pin episodes to
    seeds.
    """

    def __init__(self, config: ScenarioConfig, seed: int = 0):
        if not isinstance(config, ScenarioConfig):
            raise TypeError(f"expected a ScenarioConfig, got {type(config).__name__}")
        self.config = config
        self.bounds = action_bounds(config)
        self._upper = self.bounds[:, 1].reshape(config.num_products, config.num_nodes)
        self.reset(seed=seed)

    @property
    def observation_dim(self) -> int:
        return self.config.observation_dim

    @property
    def action_dim(self) -> int:
        return self.config.action_dim

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.config
        self.stock = cfg.initial_stock.copy()
        self.history = np.zeros((cfg.history_len, cfg.num_products, cfg.num_warehouses), dtype=np.int64)
        self.t = 0
        return self._observation()

    def step(self, action: np.ndarray) -> StepOutcome:
        """Advance one step. `action` is a flat integer vector within bounds.

        Raises if the action is out of bounds (callers are expected to pass
        through ``clip_action``) or if the episode has already finished.
        """
        cfg = self.config
        if self.t >= cfg.episode_length:
            raise RuntimeError("episode already finished; call reset() first")
        action = np.asarray(action)
        if action.shape != (cfg.action_dim,):
            raise ValueError(f"action must have shape ({cfg.action_dim},), got {action.shape}")
        if np.any(action != np.floor(action)):
            raise ValueError("action components must be integers (use clip_action)")
        action = action.astype(np.int64)
        if np.any(action < self.bounds[:, 0]) or np.any(action > self.bounds[:, 1]):
            raise ValueError("action out of bounds (use clip_action)")

        demand = demand_matrix(cfg, self.t, self._rng)
        action2d = action.reshape(cfg.num_products, cfg.num_nodes)
        self.stock, reward, breakdown = transition(cfg, self.stock, action2d, demand)

        # slide the demand window: drop the oldest entry, append this step's
        self.history[:-1] = self.history[1:]
        self.history[-1] = demand
        self.t += 1

        return StepOutcome(
            reward=float(reward),
            breakdown={k: float(v) for k, v in breakdown.items()},
            observation=self._observation(),
            demand_realized=demand,
            done=self.t == cfg.episode_length,
        )

    def _observation(self) -> np.ndarray:
        return np.concatenate(
            [self.stock.reshape(-1), self.history.reshape(-1)]
        ).astype(float)
