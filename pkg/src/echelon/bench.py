"""Benchmark orchestration and result export.

One benchmark run evaluates a set of methods on a set of experiments under
the standard protocol: n_episodes full episodes, seeded seed_base onward,
with identical episode seeds across methods so comparisons are paired.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .oracle import oracle_evaluate
from .policies import RandomPolicy, SQParams, SQPolicy, ZeroPolicy, evaluate_policy
from .scenarios import load_scenario

__all__ = [
    "METHODS",
    "BenchmarkError",
    "ResultRecord",
    "run_benchmark",
    "export_results",
    "import_results",
]

METHODS = ("oracle", "random", "zero", "bo-sq", "ppo", "vpg", "a3c-slot")
_COLUMNS = ("scenario", "experiment", "method", "mean", "std", "n", "seed", "time")


class BenchmarkError(RuntimeError):
    pass


@dataclass
class ResultRecord:
    scenario: str
    experiment: str
    method: str
    mean: float
    std: float
    n_episodes: int
    seed_base: int
    wall_time: float = 0.0

    def row(self) -> list:
        return [
            self.scenario, self.experiment, self.method,
            repr(float(self.mean)), repr(float(self.std)),
            self.n_episodes, self.seed_base, repr(float(self.wall_time)),
        ]


def _split_name(name: str) -> tuple[str, str]:
    if "-" in name:
        scenario, _, experiment = name.partition("-")
        return scenario, experiment
    return name, ""


def _resolve_policy(method: str, name: str, config: ScenarioConfig, seed_base: int, artifacts: dict):
    if method == "zero":
        return ZeroPolicy(config)
    if method == "random":
        return RandomPolicy(config, seed=seed_base)
    key = f"{method}:{name}"
    artifact = artifacts.get(key)
    if artifact is None:
        what = "tuned (s,Q) parameters" if method == "bo-sq" else "a policy checkpoint"
        raise BenchmarkError(f"method {method!r} on {name!r} needs {what}: pass artifact {key!r}")
    if method == "bo-sq":
        if isinstance(artifact, SQParams):
            return SQPolicy(config, artifact)
        params = SQParams.from_dict(json.loads(Path(artifact).read_text()))
        return SQPolicy(config, params)
    # ppo / vpg / a3c-slot: a saved checkpoint (or an already-built policy)
    from .agents import load_checkpoint
    from .policies import Policy

    if isinstance(artifact, Policy):
        return artifact
    policy, _meta = load_checkpoint(artifact)
    return policy


def run_benchmark(
    scenario_names,
    methods,
    n_episodes: int = 200,
    seed_base: int = 0,
    artifacts: dict | None = None,
    record_time: bool = False,
) -> list[ResultRecord]:
    """Evaluate every (experiment, method) pair; returns one record per pair.

    `artifacts` maps "method:scenario" keys to the file (or object) a method
    requires: tuned parameters for bo-sq, checkpoints for ppo/vpg/a3c-slot.
    Oracle, random, and zero need none. Wall times are recorded only when
    `record_time` is set, which keeps repeated exports byte-identical.
    """
    artifacts = artifacts or {}
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise BenchmarkError(f"unknown method(s) {unknown}; choose from {METHODS}")
    records = []
    for name in scenario_names:
        config = load_scenario(name)
        scenario, experiment = _split_name(name)
        for method in methods:
            start = time.perf_counter()
            if method == "oracle":
                result = oracle_evaluate(config, n_episodes, seed_base=seed_base)
            else:
                policy = _resolve_policy(method, name, config, seed_base, artifacts)
                result = evaluate_policy(config, policy, n_episodes, seed_base=seed_base)
            elapsed = time.perf_counter() - start if record_time else 0.0
            records.append(
                ResultRecord(
                    scenario=scenario, experiment=experiment, method=method,
                    mean=result.mean, std=result.std,
                    n_episodes=n_episodes, seed_base=seed_base, wall_time=elapsed,
                )
            )
    return records


def export_results(records: list[ResultRecord], path: str | Path, fmt: str = "csv") -> None:
    """Write records with a stable column order; round-trips losslessly."""
    if not records:
        raise ValueError("no records to export")
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_COLUMNS)
            for record in records:
                writer.writerow(record.row())
    elif fmt == "json":
        payload = [dict(zip(_COLUMNS, _typed_row(record))) for record in records]
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r} (csv or json)")


def _typed_row(record: ResultRecord) -> list:
    return [
        record.scenario, record.experiment, record.method,
        float(record.mean), float(record.std),
        record.n_episodes, record.seed_base, float(record.wall_time),
    ]


def import_results(path: str | Path) -> list[ResultRecord]:
    path = Path(path)
    rows: list[dict]
    if path.suffix == ".json":
        rows = json.loads(path.read_text())
    else:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    records = []
    for row in rows:
        records.append(
            ResultRecord(
                scenario=row["scenario"], experiment=row["experiment"], method=row["method"],
                mean=float(row["mean"]), std=float(row["std"]),
                n_episodes=int(row["n"]), seed_base=int(row["seed"]),
                wall_time=float(row["time"]),
            )
        )
    return records
