"""Command-line frontend: validate, rollout, plan, exec, bench.

Exit codes: 0 success, 1 validation or execution failure, 2 I/O error,
3 planner timeout or unsolvable problem.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence

from pddlenv import bench, planner, registry
from pddlenv.env import Env, EnvConfig, register_files
from pddlenv.errors import (ConfigurationError, ParseError, PDDLEnvError,
                            PlanTimeout, PlanUnsolvable)
from pddlenv.parser import parse_domain, parse_problem

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_IO = 2
EXIT_PLANNING = 3


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _add_env_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--env", help="bundled environment name")
    sub.add_argument("--domain", help="domain file (with --problems)")
    sub.add_argument("--problems", nargs="+", help="problem files")
    sub.add_argument("--test", action="store_true",
                     help="use the test problem split")
    sub.add_argument("--seed", type=int, default=0)


def _build_env(args: argparse.Namespace, dynamic: bool = False,
               invalid_error: bool = False,
               max_episode_length: Optional[int] = None) -> Env:
    if bool(args.env) == bool(args.domain):
        raise ConfigurationError("choose one of --env or --domain/--problems")
    if args.env:
        entry = registry.registry_entry(args.env)
        config = EnvConfig(operators_as_actions=entry.operators_as_actions,
                           raise_error_on_invalid_action=invalid_error,
                           dynamic_action_space=dynamic,
                           max_episode_length=max_episode_length,
                           seed=args.seed)
        return registry.load_env(args.env, test=args.test, config=config)
    if not args.problems:
        raise ConfigurationError("--domain requires --problems")
    config = EnvConfig(raise_error_on_invalid_action=invalid_error,
                       dynamic_action_space=dynamic,
                       max_episode_length=max_episode_length,
                       seed=args.seed)
    return register_files(args.domain, args.problems, config)


def _env_label(args: argparse.Namespace) -> str:
    return args.env if args.env else args.domain


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        domain_text = _read(args.domain)
        problem_texts = [(_read(p), p) for p in args.problem]
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    status = EXIT_OK
    try:
        domain = parse_domain(domain_text, args.domain)
        print(f"OK {args.domain}")
    except ParseError as exc:
        print(exc)
        return EXIT_FAILURE
    for text, path in problem_texts:
        try:
            parse_problem(text, domain, path)
            print(f"OK {path}")
        except ParseError as exc:
            print(exc)
            status = EXIT_FAILURE
    return status


def cmd_rollout(args: argparse.Namespace) -> int:
    env = _build_env(args, dynamic=args.dynamic_actions,
                     invalid_error=args.invalid == "error")
    stats, trace = bench.run_random_rollouts(
        env, episodes=args.episodes, horizon=args.horizon, seed=args.seed,
        env_name=_env_label(args))
    print(f"{stats.env_name}: mode={stats.mode} episodes={stats.episodes} "
          f"horizon={stats.horizon} steps={stats.steps} "
          f"goal_rate={stats.goal_rate:.3f} dead_ends={stats.dead_ends} "
          f"fps={stats.fps:.1f}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write(bench.export_trace(trace))
        print(f"trace written to {args.trace}")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    env = _build_env(args)
    try:
        plan = planner.plan_gbfs(env, problem_index=args.problem_index,
                                 timeout=args.timeout)
    except (PlanTimeout, PlanUnsolvable) as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    for action in plan.actions:
        print(action)
    print(f"; length={len(plan)} expansions={plan.expansions} "
          f"generated={plan.generated} wall_time={plan.wall_time:.3f}s")
    if args.out:
        planner.write_plan(plan, args.out)
        print(f"; plan written to {args.out}")
    return EXIT_OK


def cmd_exec(args: argparse.Namespace) -> int:
    env = _build_env(args)
    try:
        actions = planner.read_plan(args.plan, env,
                                    problem_index=args.problem_index)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    env.reset_to(args.problem_index)
    done = env.goal_holds()
    reward = 1.0 if done else 0.0
    for action in actions:
        result = env.step(action)
        if result.info["operator"] is None:
            print(f"invalid action: {action}", file=sys.stderr)
            return EXIT_FAILURE
        reward, done = result.reward, result.done
    print(f"executed {len(actions)} actions: reward={reward} done={done}")
    return EXIT_OK if done and reward == 1.0 else EXIT_FAILURE


def cmd_bench(args: argparse.Namespace) -> int:
    if args.envs == "all":
        names = list(registry.list_envs())
    else:
        names = [n.strip() for n in args.envs.split(",") if n.strip()]
    modes = ["all", "valid"] if args.modes == "both" else [args.modes]
    rows: List[bench.RolloutStats] = []
    failures = 0
    for name in names:
        for mode in modes:
            try:
                entry = registry.registry_entry(name)
                config = EnvConfig(
                    operators_as_actions=entry.operators_as_actions,
                    dynamic_action_space=mode == "valid", seed=args.seed)
                env = registry.load_env(name, test=args.test, config=config)
                stats, _ = bench.run_random_rollouts(
                    env, episodes=args.episodes, horizon=args.horizon,
                    seed=args.seed, env_name=name)
            except PDDLEnvError as exc:
                print(f"{name} ({mode}) failed: {exc}", file=sys.stderr)
                failures += 1
                continue
            rows.append(stats)
            print(f"{stats.env_name:20s} mode={stats.mode:5s} "
                  f"steps={stats.steps:5d} goal_rate={stats.goal_rate:.3f} "
                  f"dead_ends={stats.dead_ends:3d} fps={stats.fps:.1f}")
    if args.csv and rows:
        bench.write_csv(rows, args.csv)
        print(f"summary written to {args.csv}")
    if args.plot and rows:
        from pddlenv.plotting import plot_bench

        plot_bench(rows, args.plot)
        print(f"figure written to {args.plot}")
    return EXIT_FAILURE if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pddlenv",
        description="PDDL-defined episodic environments: parse, roll out, "
                    "plan, and benchmark.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="parse files and report errors")
    p.add_argument("domain")
    p.add_argument("problem", nargs="*")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("rollout", help="random-policy episodes")
    _add_env_args(p)
    p.add_argument("--episodes", type=int, default=bench.DEFAULT_EPISODES)
    p.add_argument("--horizon", type=int, default=bench.DEFAULT_HORIZON)
    p.add_argument("--trace", help="write a JSON trace here")
    p.add_argument("--invalid", choices=("noop", "error"), default="noop")
    p.add_argument("--dynamic-actions", action="store_true",
                   help="sample only valid actions")
    p.set_defaults(func=cmd_rollout)

    p = subs.add_parser("plan", help="greedy best-first search")
    _add_env_args(p)
    p.add_argument("--problem-index", type=int, default=0)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--out", help="write the plan here, one action per line")
    p.set_defaults(func=cmd_plan)

    p = subs.add_parser("exec", help="execute a plan file")
    _add_env_args(p)
    p.add_argument("plan")
    p.add_argument("--problem-index", type=int, default=0)
    p.set_defaults(func=cmd_exec)

    p = subs.add_parser("bench", help="rollout protocol over many envs")
    p.add_argument("--envs", default="all",
                   help="'all' or a comma-separated list of names")
    p.add_argument("--test", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=bench.DEFAULT_EPISODES)
    p.add_argument("--horizon", type=int, default=bench.DEFAULT_HORIZON)
    p.add_argument("--modes", choices=("all", "valid", "both"), default="all")
    p.add_argument("--csv", help="write a CSV summary here")
    p.add_argument("--plot", help="render a figure here (requires --csv data)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAILURE
    except PDDLEnvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
