"""Two-echelon supply chain inventory management: simulator and solvers.

The package provides the inventory MDP itself plus everything needed to
benchmark solvers on it: a clairvoyant min-cost-flow oracle, static (s, Q)
reorder policies with Bayesian-optimization tuning, from-scratch VPG and
PPO agents, grid/ASHA hyperparameter search, and a seeded, reproducible
benchmark protocol with CSV/JSON exports.
"""

from .config import ConfigError, ScenarioConfig, load_scenario_file, save_scenario_file
from .env import (
    InventoryEnv,
    StepOutcome,
    action_bounds,
    clip_action,
    demand_matrix,
    sample_demand,
    seasonal_level,
    transition,
)
from .policies import (
    EvalResult,
    Policy,
    RandomPolicy,
    SQParams,
    SQPolicy,
    ZeroPolicy,
    evaluate_policy,
    sq_act,
)
from .oracle import PlanResult, dp_exact, oracle_evaluate, plan_clairvoyant, realize_demand
from .gp import GaussianProcess, expected_improvement
from .tuning import (
    AshaScheduler,
    Dim,
    SearchSpace,
    TrialRecord,
    asha_run,
    bo_optimize,
    grid_search,
    tune_sq,
)
from .agents import (
    NeuralPolicy,
    RolloutBuffer,
    SquashedGaussianActor,
    TrainConfig,
    TrainResult,
    compute_gae,
    default_train_config,
    load_checkpoint,
    ppo_update,
    save_checkpoint,
    train,
    vpg_update,
)
from .scenarios import BUILTIN_SCENARIOS, SCENARIO_SETS, hyperparameter_grid, load_scenario
from .bench import ResultRecord, export_results, import_results, run_benchmark

__version__ = "0.1.0"
