"""Derivative-free tuners: Bayesian optimization over integer boxes, grid
search, and asynchronous successive halving (ASHA).

All tuners maximize the objective, are deterministic under a fixed seed,
and can append one JSON line per (trial, stage) to a log file.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .gp import GaussianProcess, expected_improvement
from .policies import SQParams, SQPolicy, evaluate_policy

__all__ = [
    "Dim",
    "SearchSpace",
    "TrialRecord",
    "bo_optimize",
    "grid_search",
    "AshaScheduler",
    "asha_run",
    "sq_search_space",
    "params_to_sq",
    "tune_sq",
]


@dataclass(frozen=True)
class Dim:
    """One search dimension: an inclusive integer range or a categorical set."""

    name: str
    low: int | None = None
    high: int | None = None
    choices: tuple | None = None

    def __post_init__(self):
        if self.choices is not None:
            if len(self.choices) == 0:
                raise ValueError(f"dimension {self.name}: empty choice set")
        elif self.low is None or self.high is None or self.low > self.high:
            raise ValueError(f"dimension {self.name}: need low <= high or a choice set")

    @property
    def is_categorical(self) -> bool:
        return self.choices is not None

    def sample(self, rng: np.random.Generator):
        if self.is_categorical:
            return self.choices[int(rng.integers(len(self.choices)))]
        return int(rng.integers(self.low, self.high + 1))

    def round_continuous(self, u: float):
        """Map u in [0, 1] onto the dimension's lattice."""
        if self.is_categorical:
            idx = min(int(u * len(self.choices)), len(self.choices) - 1)
            return self.choices[idx]
        return int(np.clip(round(self.low + u * (self.high - self.low)), self.low, self.high))

    def normalize(self, value) -> float:
        if self.is_categorical:
            k = len(self.choices)
            return 0.5 if k == 1 else self.choices.index(value) / (k - 1)
        return 0.5 if self.high == self.low else (value - self.low) / (self.high - self.low)

    def values(self):
        if self.is_categorical:
            return list(self.choices)
        return list(range(self.low, self.high + 1))


class SearchSpace:
    def __init__(self, dims: list[Dim]):
        if not dims:
            raise ValueError("search space needs at least one dimension")
        self.dims = list(dims)

    def __len__(self) -> int:
        return len(self.dims)

    def sample(self, rng: np.random.Generator) -> dict:
        return {d.name: d.sample(rng) for d in self.dims}

    def sample_lattice(self, rng: np.random.Generator) -> dict:
        """Continuous uniform draw rounded onto the integer lattice."""
        u = rng.random(len(self.dims))
        return {d.name: d.round_continuous(u[k]) for k, d in enumerate(self.dims)}

    def normalize(self, point: dict) -> np.ndarray:
        return np.array([d.normalize(point[d.name]) for d in self.dims])

    def contains(self, point: dict) -> bool:
        for d in self.dims:
            v = point.get(d.name)
            if d.is_categorical:
                if v not in d.choices:
                    return False
            elif not (isinstance(v, (int, np.integer)) and d.low <= v <= d.high):
                return False
        return True

    def grid(self):
        """All points, last dimension fastest; only sensible for small spaces."""
        names = [d.name for d in self.dims]
        for combo in itertools.product(*[d.values() for d in self.dims]):
            yield dict(zip(names, combo))

    def size(self) -> int:
        return int(np.prod([len(d.values()) for d in self.dims]))


@dataclass
class TrialRecord:
    params: dict
    scores: list = field(default_factory=list)  # (budget, objective value), budgets increasing
    status: str = "running"                     # running | stopped | complete

    def add_score(self, budget: float, value: float) -> None:
        if self.scores and budget <= self.scores[-1][0]:
            raise ValueError("budgets must be strictly increasing within a trial")
        self.scores.append((budget, float(value)))

    @property
    def last_score(self) -> float:
        return self.scores[-1][1]


class _TrialLog:
    def __init__(self, path):
        self.path = Path(path) if path else None

    def write(self, trial: int, params: dict, budget, score: float, started: float) -> None:
        if self.path is None:
            return
        entry = {
            "trial": trial,
            "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
            "budget": budget,
            "score": score,
            "wall_time": time.perf_counter() - started,
        }
        with open(self.path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")


def bo_optimize(
    objective,
    space: SearchSpace,
    budget: int,
    seed: int = 0,
    init_frac: float = 0.2,
    n_candidates: int = 1024,
    eval_budget: float = 1,
    log_file=None,
) -> TrialRecord:
    """Maximize `objective` over `space` with a GP surrogate and EI acquisition.

    Runs a random initial design (init_frac of the budget), then repeatedly
    fits the surrogate on min-max-normalized coordinates and evaluates the
    EI argmax over a random candidate lattice. Already-evaluated points are
    skipped; returns the best observed trial.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    log = _TrialLog(log_file)
    started = time.perf_counter()

    trials: list[TrialRecord] = []
    seen: set[tuple] = set()

    def key(point: dict) -> tuple:
        return tuple(point[d.name] for d in space.dims)

    def evaluate(point: dict) -> None:
        record = TrialRecord(params=point)
        record.add_score(eval_budget, objective(point))
        record.status = "complete"
        trials.append(record)
        seen.add(key(point))
        log.write(len(trials) - 1, point, eval_budget, record.last_score, started)

    def fresh_random() -> dict | None:
        for _ in range(200):
            point = space.sample(rng)
            if key(point) not in seen:
                return point
        return None

    n_init = max(1, min(budget, round(init_frac * budget)))
    while len(trials) < n_init:
        point = fresh_random()
        if point is None:
            break
        evaluate(point)

    while len(trials) < budget:
        X = np.stack([space.normalize(t.params) for t in trials])
        y = np.array([t.last_score for t in trials])
        surrogate = GaussianProcess().fit(X, y)

        candidates = [space.sample_lattice(rng) for _ in range(n_candidates)]
        candidates = [c for c in candidates if key(c) not in seen]
        point = None
        if candidates:
            Xc = np.stack([space.normalize(c) for c in candidates])
            ei = expected_improvement(surrogate, Xc, float(y.max()))
            point = candidates[int(np.argmax(ei))]
        else:
            point = fresh_random()
        if point is None:
            break  # lattice exhausted
        evaluate(point)

    return max(trials, key=lambda t: t.last_score)


def grid_search(space: SearchSpace, objective, n_jobs: int = 1, log_file=None) -> list[TrialRecord]:
    """Evaluate every grid point once at full budget; rank by score.

    Ties keep enumeration order, so the ranking is stable across runs.
    """
    points = list(space.grid())
    log = _TrialLog(log_file)
    started = time.perf_counter()
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(objective, points))
    else:
        values = [objective(p) for p in points]
    trials = []
    for idx, (point, value) in enumerate(zip(points, values)):
        record = TrialRecord(params=point)
        record.add_score(1, value)
        record.status = "complete"
        trials.append(record)
        log.write(idx, point, 1, record.last_score, started)
    order = sorted(range(len(trials)), key=lambda k: (-trials[k].last_score, k))
    return [trials[k] for k in order]


class AshaScheduler:
    """Promotion bookkeeping for asynchronous successive halving.

    A trial reports a score when it reaches a rung. It may be promoted past
    rung r only while both hold, using nothing but scores recorded so far:

    * its score ranks within the top ceil(n/eta) of the n scores at rung r;
    * fewer than ceil(n/eta) trials have already been promoted past rung r.

    Decisions are valid under any report order, never exceed the quota, and
    stopped (never-promoted) trials are never resumed.
    """

    def __init__(self, rungs, eta: int):
        rungs = list(rungs)
        if eta < 2:
            raise ValueError("eta must be >= 2")
        if not rungs or any(later <= earlier for earlier, later in zip(rungs, rungs[1:])):
            raise ValueError("rung budgets must be nonempty and strictly increasing")
        self.rungs = rungs
        self.eta = eta
        # per rung: list of (trial_id, score) in report order, and promoted ids
        self._reports: list[list[tuple[int, float]]] = [[] for _ in rungs]
        self._promoted: list[set[int]] = [set() for _ in rungs]

    def report(self, trial_id: int, rung: int, score: float) -> None:
        self._reports[rung].append((trial_id, float(score)))

    def arrivals(self, rung: int) -> int:
        return len(self._reports[rung])

    def promotions(self, rung: int) -> int:
        return len(self._promoted[rung])

    def quota(self, rung: int) -> int:
        return math.ceil(self.arrivals(rung) / self.eta)

    def promotable(self, rung: int) -> int | None:
        """Best promotable trial id at `rung`, or None."""
        if rung >= len(self.rungs) - 1:
            return None  # nothing lies past the final rung
        reports = self._reports[rung]
        promoted = self._promoted[rung]
        quota = self.quota(rung)
        if len(promoted) >= quota:
            return None
        # rank by score descending, ties by report order
        ranked = sorted(range(len(reports)), key=lambda k: (-reports[k][1], k))
        for rank, k in enumerate(ranked, start=1):
            trial_id = reports[k][0]
            if trial_id in promoted:
                continue
            return trial_id if rank <= quota else None
        return None

    def promote(self, trial_id: int, rung: int) -> None:
        self._promoted[rung].add(trial_id)


def asha_run(
    trial_factory,
    space: SearchSpace,
    rungs,
    eta: int = 3,
    max_trials: int = 9,
    seed: int = 0,
    log_file=None,
) -> TrialRecord:
    """Successive halving over `max_trials` sampled configurations.

    `trial_factory(params)` must return a callable `run(budget) -> score`
    that can be re-invoked with the larger budgets of later rungs (resuming
    is the trial's concern). Returns the best trial that reached the final
    rung; trials never promoted are left with status "stopped".
    """
    scheduler = AshaScheduler(rungs, eta)
    rng = np.random.default_rng(seed)
    log = _TrialLog(log_file)
    started = time.perf_counter()

    records: list[TrialRecord] = []
    runners: list = []
    rung_of: list[int] = []

    def run_to(trial_id: int, rung: int) -> None:
        budget = scheduler.rungs[rung]
        score = runners[trial_id](budget)
        records[trial_id].add_score(budget, score)
        rung_of[trial_id] = rung
        scheduler.report(trial_id, rung, score)
        log.write(trial_id, records[trial_id].params, budget, score, started)

    for _ in range(max_trials):
        params = space.sample(rng)
        records.append(TrialRecord(params=params))
        runners.append(trial_factory(params))
        rung_of.append(-1)
        run_to(len(records) - 1, 0)

    while True:
        advanced = False
        for rung in range(len(scheduler.rungs) - 1):
            trial_id = scheduler.promotable(rung)
            if trial_id is not None:
                scheduler.promote(trial_id, rung)
                run_to(trial_id, rung + 1)
                advanced = True
                break
        if not advanced:
            break

    final = len(scheduler.rungs) - 1
    finalists = [r for r, rung in zip(records, rung_of) if rung == final]
    for record, rung in zip(records, rung_of):
        record.status = "complete" if rung == final else "stopped"
    if not finalists:
        raise RuntimeError("no trial reached the final rung")
    return max(finalists, key=lambda r: r.last_score)


def sq_search_space(config: ScenarioConfig) -> SearchSpace:
    """Reorder point in [0, capacity] and order quantity in [0, action bound], per (product, node)."""
    from .env import action_bounds

    upper = action_bounds(config)[:, 1].reshape(config.num_products, config.num_nodes)
    dims = []
    for i in range(config.num_products):
        for j in range(config.num_nodes):
            dims.append(Dim(f"s_{i}_{j}", low=0, high=int(config.storage_capacity[i, j])))
            dims.append(Dim(f"Q_{i}_{j}", low=0, high=int(upper[i, j])))
    return SearchSpace(dims)


def params_to_sq(config: ScenarioConfig, params: dict) -> SQParams:
    shape = (config.num_products, config.num_nodes)
    s = np.zeros(shape, dtype=np.int64)
    Q = np.zeros(shape, dtype=np.int64)
    for i in range(shape[0]):
        for j in range(shape[1]):
            s[i, j] = params[f"s_{i}_{j}"]
            Q[i, j] = params[f"Q_{i}_{j}"]
    return SQParams(s=s, Q=Q)


def tune_sq(
    config: ScenarioConfig,
    budget: int = 200,
    episodes: int = 30,
    seed: int = 0,
    seed_base: int = 0,
    log_file=None,
) -> tuple[SQParams, TrialRecord]:
    """Tune (s, Q) parameters by Bayesian optimization.

    The objective is mean profit over a fixed set of `episodes` seeds
    (common random numbers across candidates); report final numbers by
    re-evaluating the returned parameters on the full protocol.
    """
    space = sq_search_space(config)

    def objective(point: dict) -> float:
        policy = SQPolicy(config, params_to_sq(config, point))
        return evaluate_policy(config, policy, episodes, seed_base=seed_base).mean

    best = bo_optimize(
        objective, space, budget, seed=seed, eval_budget=episodes, log_file=log_file
    )
    return params_to_sq(config, best.params), best
