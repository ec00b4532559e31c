"""Clairvoyant planning against a fully known demand realization.

With zero lead times and nonnegative storage costs, holding stock at the
factory can never reduce cost, so an optimal plan produces exactly what it
ships each step and the problem decomposes per (product, warehouse). Each
pair becomes a min-cost flow on a time-expanded network with one node per
step plus an `end` node:

* ship arc   source -> t        capacity c, cost production + transport
* store arc  t -> t+1           capacity c, cost storage (stock held at end of step t)
* backlog    t+1 -> t           unbounded, cost penalty_coeff * price
                                (demand at t served at a later step, or never:
                                unserved units enter at `end` and pay the
                                backlog arcs back to their step)
* demand     node t absorbs d_t

Initial warehouse stock is a forced injection at t=0; whatever is never
consumed drains through the storage chain to `end`, paying storage the
whole way, exactly as idle stock does in the simulator. Revenue does not
depend on actions, so minimizing this cost maximizes profit.

``dp_exact`` is the brute-force cross-check: exhaustive enumeration of all
integer action vectors over the true transition dynamics, feasible only
for tiny instances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .env import InventoryEnv, action_bounds, demand_matrix, transition, BREAKDOWN_KEYS
from .flow import MinCostFlow
from .policies import EvalResult

__all__ = [
    "realize_demand",
    "PlanResult",
    "plan_clairvoyant",
    "dp_exact",
    "oracle_evaluate",
    "plan_to_csv",
]

_UNBOUNDED = 10**9


def realize_demand(config: ScenarioConfig, seed: int) -> np.ndarray:
    """The full demand tensor, shape (products, warehouses, episode_length).

    Drawn from the same generator discipline as the environment: an
    environment seeded identically realizes exactly this sequence.
    """
    rng = np.random.default_rng(seed)
    out = np.empty(
        (config.num_products, config.num_warehouses, config.episode_length), dtype=np.int64
    )
    for t in range(config.episode_length):
        out[:, :, t] = demand_matrix(config, t, rng)
    return out


@dataclass
class PlanResult:
    actions: np.ndarray        # (episode_length, products, nodes) integer units
    total_profit: float
    cost_breakdown: dict       # the five reward terms accumulated over the episode

    def flat_actions(self) -> np.ndarray:
        return self.actions.reshape(self.actions.shape[0], -1)


def plan_clairvoyant(demand: np.ndarray, config: ScenarioConfig) -> PlanResult:
    """Cost-minimizing production and shipment plan for a known demand tensor."""
    T = config.episode_length
    expected = (config.num_products, config.num_warehouses, T)
    demand = np.asarray(demand)
    if demand.shape != expected:
        raise ValueError(f"demand shape {demand.shape} does not match config {expected}")
    if np.any(config.initial_stock[:, 0] != 0):
        raise ValueError(
            "clairvoyant planner requires zero initial factory stock; "
            "nonzero factory stock couples the per-warehouse subproblems"
        )

    actions = np.zeros((T, config.num_products, config.num_nodes), dtype=np.int64)
    flow_cost = 0.0
    for i in range(config.num_products):
        for j in range(1, config.num_nodes):
            shipments, cost = _plan_pair(demand[i, j - 1], config, i, j)
            actions[:, i, j] = shipments
            flow_cost += cost
        actions[:, i, 0] = actions[:, i, 1:].sum(axis=1)

    total_profit, breakdown = _replay(config, actions, demand)
    # the flow model and the simulator must price the same plan identically
    expected_profit = float((config.sale_price[:, None, None] * demand).sum()) - flow_cost
    if abs(expected_profit - total_profit) > 1e-6 * (1.0 + abs(total_profit)):
        raise RuntimeError(
            f"planner accounting mismatch: flow {expected_profit!r} vs replay {total_profit!r}"
        )
    return PlanResult(actions=actions, total_profit=total_profit, cost_breakdown=breakdown)


def _plan_pair(d: np.ndarray, config: ScenarioConfig, i: int, j: int) -> tuple[np.ndarray, float]:
    """Min-cost flow for one (product, warehouse) pair; returns (shipments, cost)."""
    T = config.episode_length
    cap = int(config.storage_capacity[i, j])
    ship_cost = float(config.production_cost[i] + config.transport_cost[i, j - 1])
    store_cost = float(config.storage_cost[i, j])
    backlog_cost = float(config.penalty_coeff[i] * config.sale_price[i])

    d = d.astype(np.int64).copy()
    q0 = int(config.initial_stock[i, j])
    if q0 < 0:
        # pre-existing backlog behaves like extra (revenue-free) step-0 demand
        d[0] += -q0
        q0 = 0
    total_demand = int(d.sum())
    if total_demand == 0 and q0 == 0:
        return np.zeros(T, dtype=np.int64), 0.0

    end, src, sink, super_src = T, T + 1, T + 2, T + 3
    net = MinCostFlow(T + 4)
    ship_arcs = [net.add_edge(src, t, cap, ship_cost) for t in range(T)]
    for t in range(T):
        net.add_edge(t, t + 1, cap, store_cost)          # t+1 == end at the horizon
        net.add_edge(t + 1, t, _UNBOUNDED, backlog_cost)
    net.add_edge(src, end, _UNBOUNDED, 0.0)              # units that are never produced
    for t in range(T):
        if d[t] > 0:
            net.add_edge(t, sink, int(d[t]), 0.0)
    net.add_edge(super_src, src, total_demand, 0.0)
    if q0 > 0:
        net.add_edge(super_src, 0, q0, 0.0)              # forced initial stock
        net.add_edge(end, sink, q0, 0.0)                 # surplus disposal at horizon

    target = total_demand + q0
    pushed, cost = net.run(super_src, sink, target)
    if pushed != target:
        raise RuntimeError(f"planner network infeasible: pushed {pushed} of {target}")
    return np.array([net.flow_on(a) for a in ship_arcs], dtype=np.int64), cost


def _replay(config: ScenarioConfig, actions: np.ndarray, demand: np.ndarray):
    stock = config.initial_stock.copy()
    total = 0.0
    breakdown = {k: 0.0 for k in BREAKDOWN_KEYS}
    for t in range(config.episode_length):
        stock, reward, terms = transition(config, stock, actions[t], demand[:, :, t])
        total += float(reward)
        for k in BREAKDOWN_KEYS:
            breakdown[k] += float(terms[k])
    return total, breakdown


def dp_exact(demand: np.ndarray, config: ScenarioConfig, max_expansions: int = 10**7) -> float:
    """Optimal profit by exhaustive forward enumeration over exact dynamics.

    Guarded: raises if the number of (state, action) expansions would exceed
    `max_expansions`. Intended for validating the flow planner on tiny
    instances, not for production planning.
    """
    T = config.episode_length
    expected = (config.num_products, config.num_warehouses, T)
    if np.asarray(demand).shape != expected:
        raise ValueError(f"demand shape {np.asarray(demand).shape} does not match config {expected}")

    upper = action_bounds(config)[:, 1]
    n_actions = int(np.prod(upper + 1))
    if n_actions > max_expansions:
        raise ValueError(f"instance too large: {n_actions} actions exceed the expansion budget")
    grids = np.meshgrid(*[np.arange(u + 1) for u in upper], indexing="ij")
    all_actions = np.stack([g.reshape(-1) for g in grids], axis=1).reshape(
        n_actions, config.num_products, config.num_nodes
    )

    states = {config.initial_stock.tobytes(): (config.initial_stock.copy(), 0.0)}
    expansions = 0
    for t in range(T):
        expansions += len(states) * n_actions
        if expansions > max_expansions:
            raise ValueError(
                f"instance too large: {expansions} state-action expansions exceed {max_expansions}"
            )
        d_t = demand[:, :, t]
        nxt: dict[bytes, tuple[np.ndarray, float]] = {}
        for stock, value in states.values():
            new_stocks, rewards, _ = transition(config, stock, all_actions, d_t)
            values = value + rewards
            for a in range(n_actions):
                key = new_stocks[a].tobytes()
                prev = nxt.get(key)
                if prev is None or values[a] > prev[1]:
                    nxt[key] = (new_stocks[a], float(values[a]))
        states = nxt
    return max(v for _, v in states.values())


def oracle_evaluate(config: ScenarioConfig, n_episodes: int, seed_base: int = 0) -> EvalResult:
    """Clairvoyant profit under the standard seeded episode protocol.

    Per episode: realize the demand for the seed, plan against it, replay
    the plan in an identically seeded environment, and record the
    cumulative profit. The replayed profit equals the plan's by contract.
    """
    env = InventoryEnv(config, seed=seed_base)
    totals = np.zeros(n_episodes)
    for k in range(n_episodes):
        seed = seed_base + k
        plan = plan_clairvoyant(realize_demand(config, seed), config)
        env.reset(seed=seed)
        total = 0.0
        for t in range(config.episode_length):
            total += env.step(plan.flat_actions()[t]).reward
        if abs(total - plan.total_profit) > 1e-9 * (1.0 + abs(total)):
            raise RuntimeError(f"plan replay mismatch on seed {seed}: {total} vs {plan.total_profit}")
        totals[k] = total
    return EvalResult(mean=float(totals.mean()), std=float(totals.std()), per_episode=totals)


def plan_to_csv(plan: PlanResult, config: ScenarioConfig, path: str | Path) -> None:
    """Step-indexed action dump for audit or replay."""
    header = ["t"] + [
        f"action_{i}_{j}" for i in range(config.num_products) for j in range(config.num_nodes)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, row in enumerate(plan.flat_actions()):
            writer.writerow([t] + row.tolist())
