"""Command-line interface.

Subcommands: simulate, tune-sq, train, evaluate, bench, oracle. Every
command exits 0 on success and nonzero with a message on stderr otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .agents import default_train_config, load_checkpoint, save_checkpoint, train
from .bench import export_results, run_benchmark
from .config import ConfigError
from .env import InventoryEnv, clip_action
from .oracle import oracle_evaluate, plan_clairvoyant, plan_to_csv, realize_demand
from .policies import RandomPolicy, SQParams, SQPolicy, ZeroPolicy, evaluate_policy
from .scenarios import BUILTIN_SCENARIOS, SCENARIO_SETS, load_scenario
from .tuning import tune_sq


def _policy_from_spec(spec: str, config, seed: int):
    """Parse a --policy value: zero | random | sq:FILE | ckpt:FILE."""
    if spec == "zero":
        return ZeroPolicy(config)
    if spec == "random":
        return RandomPolicy(config, seed=seed)
    kind, _, arg = spec.partition(":")
    if kind == "sq" and arg:
        params = SQParams.from_dict(json.loads(Path(arg).read_text()))
        return SQPolicy(config, params)
    if kind == "ckpt" and arg:
        policy, _meta = load_checkpoint(arg)
        return policy
    raise ConfigError(f"unknown policy spec {spec!r} (zero, random, sq:FILE, or ckpt:FILE)")


def _scenario_list(value: str) -> list[str]:
    if value in SCENARIO_SETS:
        return list(SCENARIO_SETS[value])
    return [s.strip() for s in value.split(",") if s.strip()]


def _cmd_simulate(args) -> int:
    config = load_scenario(args.scenario)
    policy = _policy_from_spec(args.policy, config, args.seed)
    env = InventoryEnv(config, seed=args.seed)
    obs = env.reset(seed=args.seed)
    policy.reset(seed=args.seed)
    header = (
        ["t"]
        + [f"stock_{i}_{j}" for i in range(config.num_products) for j in range(config.num_nodes)]
        + [f"action_{i}_{j}" for i in range(config.num_products) for j in range(config.num_nodes)]
        + [f"demand_{i}_{j}" for i in range(config.num_products) for j in range(1, config.num_nodes)]
        + ["reward", "revenue", "production_cost", "transport_cost", "storage_cost", "penalty_cost"]
    )
    rows = []
    total = 0.0
    for t in range(config.episode_length):
        action = clip_action(policy.act(obs), env.bounds)
        outcome = env.step(action)
        total += outcome.reward
        rows.append(
            [t]
            + env.stock.reshape(-1).tolist()
            + action.tolist()
            + outcome.demand_realized.reshape(-1).tolist()
            + [outcome.reward]
            + [outcome.breakdown[k] for k in
               ("revenue", "production_cost", "transport_cost", "storage_cost", "penalty_cost")]
        )
        obs = outcome.observation
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"wrote trajectory to {args.out}")
    print(f"scenario {args.scenario} seed {args.seed}: cumulative profit {total:.2f}")
    return 0


def _cmd_tune_sq(args) -> int:
    config = load_scenario(args.scenario)
    params, best = tune_sq(
        config, budget=args.budget, episodes=args.tune_episodes,
        seed=args.seed, seed_base=args.seed, log_file=args.log,
    )
    result = evaluate_policy(config, SQPolicy(config, params), args.episodes, seed_base=args.seed)
    print(f"best tuning objective: {best.last_score:.2f} "
          f"(mean over {args.tune_episodes} common-seed episodes)")
    print(f"re-evaluated on {args.episodes} episodes: mean {result.mean:.2f} std {result.std:.2f}")
    if args.out:
        Path(args.out).write_text(json.dumps(params.to_dict(), indent=2) + "\n")
        print(f"wrote parameters to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = load_scenario(args.scenario)
    cfg = default_train_config(args.algo)
    if args.episodes is not None:
        cfg.total_episodes = args.episodes
    if args.lr is not None:
        cfg.learning_rate = args.lr
    if args.optimizer is not None:
        cfg.optimizer = args.optimizer
    if args.hidden is not None:
        cfg.hidden = tuple(int(h) for h in args.hidden.split(",") if h)

    def progress(episodes, mean, std):
        print(f"episodes {episodes:6d}  eval mean {mean:10.2f}  std {std:8.2f}", flush=True)

    result = train(args.algo, cfg, config, seed=args.seed, curve_callback=progress)
    if args.out:
        save_checkpoint(args.out, result)
        print(f"wrote checkpoint to {args.out}")
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "eval_mean", "eval_std"])
            writer.writerows(result.curve)
        print(f"wrote learning curve to {args.curve}")
    return 0


def _cmd_evaluate(args) -> int:
    config = load_scenario(args.scenario)
    policy = _policy_from_spec(args.policy, config, args.seed)
    result = evaluate_policy(config, policy, args.episodes, seed_base=args.seed)
    print(f"{args.scenario} {args.policy}: mean {result.mean:.2f} std {result.std:.2f} "
          f"over {args.episodes} episodes (seeds {args.seed}..{args.seed + args.episodes - 1})")
    return 0


def _cmd_bench(args) -> int:
    names = _scenario_list(args.scenarios)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    artifacts = {}
    for item in args.artifact or []:
        key, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"--artifact expects method:scenario=path, got {item!r}")
        artifacts[key] = value
    records = run_benchmark(
        names, methods, n_episodes=args.episodes, seed_base=args.seed,
        artifacts=artifacts, record_time=args.times,
    )
    for record in records:
        print(f"{record.scenario}-{record.experiment:6s} {record.method:8s} "
              f"mean {record.mean:10.2f}  std {record.std:8.2f}")
    if args.out:
        export_results(records, args.out, fmt=args.format)
        print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    config = load_scenario(args.scenario)
    result = oracle_evaluate(config, args.episodes, seed_base=args.seed)
    print(f"{args.scenario} oracle: mean {result.mean:.2f} std {result.std:.2f} "
          f"over {args.episodes} episodes")
    if args.plan_out:
        plan = plan_clairvoyant(realize_demand(config, args.seed), config)
        plan_to_csv(plan, config, args.plan_out)
        print(f"wrote seed-{args.seed} plan to {args.plan_out}")
    if args.out:
        from .bench import ResultRecord

        scenario, _, experiment = args.scenario.partition("-")
        record = ResultRecord(scenario, experiment, "oracle", result.mean, result.std,
                              args.episodes, args.seed)
        export_results([record], args.out, fmt="csv")
        print(f"wrote results to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echelon",
        description="Two-echelon supply chain inventory benchmarks: simulator, "
                    "clairvoyant oracle, (s,Q) tuning, and policy-gradient training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, episodes_default):
        p.add_argument("--scenario", required=True,
                       help=f"built-in name ({', '.join(BUILTIN_SCENARIOS[:3])}, ...) or JSON file")
        p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
        p.add_argument("--episodes", type=int, default=episodes_default)
        p.add_argument("--out", default=None, help="output file")

    p = sub.add_parser("simulate", help="roll one episode and dump the trajectory")
    common(p, 1)
    p.add_argument("--policy", default="zero", help="zero | random | sq:FILE | ckpt:FILE")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tune-sq", help="tune (s,Q) parameters with Bayesian optimization")
    common(p, 200)
    p.add_argument("--budget", type=int, default=200, help="objective evaluations (default 200)")
    p.add_argument("--tune-episodes", type=int, default=30,
                   help="common-seed episodes per objective evaluation (default 30)")
    p.add_argument("--log", default=None, help="append per-trial JSON lines here")
    p.set_defaults(func=_cmd_tune_sq)

    p = sub.add_parser("train", help="train a policy-gradient agent")
    p.add_argument("--algo", choices=("vpg", "ppo"), required=True)
    common(p, None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    p.add_argument("--hidden", default=None, help="comma-separated hidden sizes, e.g. 64,64")
    p.add_argument("--curve", default=None, help="write the learning curve CSV here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a policy under the standard protocol")
    common(p, 200)
    p.add_argument("--policy", required=True, help="zero | random | sq:FILE | ckpt:FILE")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bench", help="run a benchmark table over experiments and methods")
    p.add_argument("--scenarios", required=True,
                   help="set name (1p1w, 1p3w, 2p2w, all) or comma-separated experiment names")
    p.add_argument("--methods", default="oracle,random,zero",
                   help="comma-separated: oracle,random,zero,bo-sq,ppo,vpg,a3c-slot")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--artifact", action="append", default=[],
                   help="method:scenario=path (tuned params or checkpoints); repeatable")
    p.add_argument("--times", action="store_true",
                   help="record wall times (exports then vary between runs)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("oracle", help="evaluate the clairvoyant oracle")
    common(p, 200)
    p.add_argument("--plan-out", default=None, help="write the first seed's plan CSV here")
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
