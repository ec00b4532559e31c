"""Scenario configuration for the two-echelon supply chain simulator.

A scenario describes one factory (node 0) that produces a set of product
types and ships them to distribution warehouses (nodes 1..J), each with
per-product capacities, costs, and seasonal demand parameters. The same
configuration object drives the environment, the planners, and the tuners.

Scenario files are plain JSON whose keys mirror the ``ScenarioConfig``
field names; see ``load_scenario_file``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

__all__ = ["ConfigError", "ScenarioConfig", "load_scenario_file", "save_scenario_file"]


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


def _per_product(name: str, value: Any, num_products: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(num_products, float(arr))
    if arr.shape != (num_products,):
        raise ConfigError(
            f"{name}: expected a scalar or {num_products} per-product values, "
            f"got shape {np.shape(value)}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: entries must be finite")
    return arr


def _per_node(name: str, value: Any, num_products: int, num_nodes: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full((num_products, num_nodes), float(arr))
    elif arr.ndim == 1 and arr.shape == (num_nodes,):
        # one row given, shared by every product
        arr = np.tile(arr, (num_products, 1))
    if arr.shape != (num_products, num_nodes):
        raise ConfigError(
            f"{name}: expected shape ({num_products}, {num_nodes}), got {np.shape(value)}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: entries must be finite")
    return arr


def _nonnegative(name: str, arr: np.ndarray) -> np.ndarray:
    if np.any(arr < 0):
        raise ConfigError(f"{name}: entries must be >= 0")
    return arr


def _integral(name: str, arr: np.ndarray) -> np.ndarray:
    if np.any(arr != np.floor(arr)):
        raise ConfigError(f"{name}: entries must be whole numbers")
    return arr.astype(np.int64)


@dataclass
class ScenarioConfig:
    """Parameters of one experiment.

    Node index 0 is the factory warehouse; nodes 1..num_warehouses are the
    distribution warehouses. Per-product scalars are broadcast to all
    products, and per-node vectors to all products, at construction time.
    """

    num_products: int
    num_warehouses: int
    episode_length: int = 25
    history_len: int = 5
    sale_price: Any = 0.0        # (products,)
    production_cost: Any = 0.0   # (products,)
    transport_cost: Any = 0.0    # (products, warehouses)
    storage_capacity: Any = 0    # (products, warehouses + 1), integer units
    storage_cost: Any = 0.0      # (products, warehouses + 1), per unit per step
    penalty_coeff: Any = 0.0     # (products,), multiplies sale price on backlog
    demand_max: Any = 0.0        # (products,), seasonal amplitude
    demand_var: Any = 0.0        # (products,), upper bound of uniform noise
    initial_stock: Any = field(default=0)  # (products, warehouses + 1), integer units

    def __post_init__(self) -> None:
        for name in ("num_products", "num_warehouses", "episode_length", "history_len"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name}: must be an integer >= 1, got {value!r}")
            setattr(self, name, int(value))

        n, nodes, wh = self.num_products, self.num_nodes, self.num_warehouses
        self.sale_price = _nonnegative("sale_price", _per_product("sale_price", self.sale_price, n))
        self.production_cost = _nonnegative(
            "production_cost", _per_product("production_cost", self.production_cost, n)
        )
        self.penalty_coeff = _nonnegative(
            "penalty_coeff", _per_product("penalty_coeff", self.penalty_coeff, n)
        )
        self.demand_max = _nonnegative("demand_max", _per_product("demand_max", self.demand_max, n))
        self.demand_var = _nonnegative("demand_var", _per_product("demand_var", self.demand_var, n))
        self.transport_cost = _nonnegative(
            "transport_cost", _per_node("transport_cost", self.transport_cost, n, wh)
        )
        self.storage_cost = _nonnegative(
            "storage_cost", _per_node("storage_cost", self.storage_cost, n, nodes)
        )
        self.storage_capacity = _integral(
            "storage_capacity",
            _nonnegative("storage_capacity", _per_node("storage_capacity", self.storage_capacity, n, nodes)),
        )
        self.initial_stock = _integral(
            "initial_stock", _per_node("initial_stock", self.initial_stock, n, nodes)
        )
        if np.any(self.initial_stock > self.storage_capacity):
            raise ConfigError("initial_stock: must not exceed storage_capacity")

    @property
    def num_nodes(self) -> int:
        return self.num_warehouses + 1

    @property
    def action_dim(self) -> int:
        return self.num_products * self.num_nodes

    @property
    def observation_dim(self) -> int:
        return self.action_dim + self.num_products * self.num_warehouses * self.history_len

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"scenario data must be a JSON object, got {type(data).__name__}")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")
        for required in ("num_products", "num_warehouses"):
            if required not in data:
                raise ConfigError(f"{required}: missing required field")
        return cls(**data)


def load_scenario_file(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return ScenarioConfig.from_dict(data)


def save_scenario_file(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")
