"""Built-in experiment registry and hyperparameter sweep grids.

Thirteen named experiments across three topologies: five with one product
and one warehouse (1p1w), five with one product and three warehouses
(1p3w), and three with two products and two warehouses (2p2w). Every
episode runs 25 steps with a 5-step demand history window.
"""

from __future__ import annotations

from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_scenario_file
from .tuning import Dim, SearchSpace

__all__ = ["BUILTIN_SCENARIOS", "SCENARIO_SETS", "load_scenario", "hyperparameter_grid"]


def _c1p1w(demand_max, demand_var, price, production, capacity, storage, transport, penalty):
    return dict(
        num_products=1, num_warehouses=1, episode_length=25, history_len=5,
        demand_max=[demand_max], demand_var=[demand_var], sale_price=[price],
        production_cost=[production], storage_capacity=[capacity],
        storage_cost=[storage], transport_cost=[[transport]], penalty_coeff=[penalty],
    )


def _c1p3w(demand_max, demand_var, price, production, capacity, storage, transport, penalty):
    return dict(
        num_products=1, num_warehouses=3, episode_length=25, history_len=5,
        demand_max=[demand_max], demand_var=[demand_var], sale_price=[price],
        production_cost=[production], storage_capacity=[capacity],
        storage_cost=[storage], transport_cost=[transport], penalty_coeff=[penalty],
    )


def _c2p2w(demand_max, demand_var, prices, production, capacity, storage, transport, penalty):
    return dict(
        num_products=2, num_warehouses=2, episode_length=25, history_len=5,
        demand_max=demand_max, demand_var=demand_var, sale_price=prices,
        production_cost=production, storage_capacity=capacity,
        storage_cost=storage, transport_cost=transport, penalty_coeff=[penalty, penalty],
    )


# field order: demand_max, demand_var, price, production cost,
#              capacities (factory first), storage costs, transport, penalty
_BUILTIN_SPECS: dict[str, dict] = {
    "1p1w-exp1": _c1p1w(10, 2, 15, 5, [5, 10], [2, 1], 0.25, 1.5),
    "1p1w-exp2": _c1p1w(5, 2, 20, 5, [5, 10], [2, 1], 0.05, 0.1),
    "1p1w-exp3": _c1p1w(5, 2, 15, 10, [5, 10], [2, 1], 1.0, 2.0),
    "1p1w-exp4": _c1p1w(10, 1, 20, 5, [10, 15], [4, 2], 0.25, 1.5),
    "1p1w-exp5": _c1p1w(5, 3, 15, 5, [5, 10], [1, 2], 0.25, 0.1),
    "1p3w-exp1": _c1p3w(7, 2, 15, 5, [3, 6, 9, 12], [4, 3, 2, 1], [0.3, 0.6, 0.9], 1.5),
    "1p3w-exp2": _c1p3w(5, 2, 20, 5, [3, 6, 9, 12], [4, 3, 2, 1], [0.03, 0.06, 0.09], 0.1),
    "1p3w-exp3": _c1p3w(5, 2, 15, 10, [3, 6, 9, 12], [4, 3, 2, 1], [3.0, 2.0, 1.0], 2.0),
    "1p3w-exp4": _c1p3w(7, 1, 20, 5, [4, 8, 12, 16], [8, 6, 4, 2], [0.3, 0.6, 0.9], 1.5),
    "1p3w-exp5": _c1p3w(5, 3, 15, 5, [4, 8, 12, 16], [4, 3, 2, 1], [0.3, 0.6, 0.9], 0.1),
    "2p2w-exp1": _c2p2w(
        [3, 6], [2, 1], [20, 10], [2, 1],
        [[3, 6, 9], [4, 8, 12]],
        [[6.0, 4.0, 2.0], [3.0, 2.0, 1.0]],
        [[0.1, 0.2], [0.3, 0.6]],
        0.5,
    ),
    "2p2w-exp2": _c2p2w(
        [3, 6], [2, 1], [10, 15], [2, 1],
        [[3, 6, 9], [4, 8, 12]],
        [[0.5, 1.0, 1.5], [0.3, 0.6, 0.9]],
        [[0.01, 0.02], [0.025, 0.050]],
        1.5,
    ),
    "2p2w-exp3": _c2p2w(
        [4, 2], [2, 2], [20, 10], [2, 1],
        [[9, 6, 3], [4, 8, 12]],
        [[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]],
        [[0.1, 0.2], [0.3, 0.6]],
        0.5,
    ),
}

BUILTIN_SCENARIOS = tuple(sorted(_BUILTIN_SPECS))

SCENARIO_SETS = {
    "1p1w": tuple(n for n in BUILTIN_SCENARIOS if n.startswith("1p1w")),
    "1p3w": tuple(n for n in BUILTIN_SCENARIOS if n.startswith("1p3w")),
    "2p2w": tuple(n for n in BUILTIN_SCENARIOS if n.startswith("2p2w")),
    "all": BUILTIN_SCENARIOS,
}


def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Resolve a built-in experiment name, or fall back to a JSON file path."""
    if name_or_path in _BUILTIN_SPECS:
        return ScenarioConfig(**_BUILTIN_SPECS[name_or_path])
    if Path(name_or_path).exists():
        return load_scenario_file(name_or_path)
    raise ConfigError(
        f"unknown scenario {name_or_path!r}; built-ins are: {', '.join(BUILTIN_SCENARIOS)}"
    )


def hyperparameter_grid(algo: str) -> SearchSpace:
    """The sweep grid for one training algorithm."""
    common = [Dim("hidden_layers", choices=((64, 64), (128, 128)))]
    if algo == "a3c":
        dims = common + [
            Dim("learning_rate", choices=(1e-4, 1e-3)),
            Dim("rollout_fragment_length", choices=(10, 100)),
            Dim("train_batch_size", choices=(200, 2000)),
            Dim("grad_clip", choices=(20, 40)),
        ]
    elif algo == "ppo":
        dims = common + [
            Dim("learning_rate", choices=(5e-4, 5e-3)),
            Dim("rollout_fragment_length", choices=(20, 200)),
            Dim("train_batch_size", choices=(400, 4000)),
            Dim("grad_clip", choices=(0, 20)),
            Dim("sgd_minibatch_size", choices=(128, 256)),
            Dim("sgd_iterations", choices=(15, 30)),
        ]
    elif algo == "vpg":
        dims = common + [
            Dim("learning_rate", choices=(4e-4, 4e-3)),
            Dim("rollout_fragment_length", choices=(10, 100)),
            Dim("train_batch_size", choices=(200, 2000)),
        ]
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    return SearchSpace(dims)
