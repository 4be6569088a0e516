"""Search, heuristic, determinization, and plan round-trips.

Optimal lengths come from the breadth-first oracle in ``oracles.py``.
"""

from __future__ import annotations

from fractions import Fraction

import pytest

from oracles import bfs_optimal_length
from pddlenv import (EnvConfig, PlanTimeout, PlanUnsolvable, h_add, load_env,
                     plan_gbfs, read_plan, register, validate_plan, write_plan)
from pddlenv.planner import INFINITY, determinize, expand_quantifiers
from pddlenv.structs import (And, DeterministicEffect, Literal, Or,
                             ProbabilisticEffect)

from conftest import TRAP_DOMAIN, TRAP_PROBLEM


def test_hanoi_three_plan_matches_optimal_oracle():
    env = load_env("hanoi")
    plan = plan_gbfs(env)
    assert validate_plan(env, plan.actions)
    assert len(plan) >= 7
    assert bfs_optimal_length(env, limit=7) == 7


def test_blocks_two_plan_is_optimal_here():
    env = load_env("blocks")
    plan = plan_gbfs(env)
    assert validate_plan(env, plan.actions)
    assert len(plan) >= bfs_optimal_length(env) == 2


def test_plans_validate_on_every_deterministic_entry():
    for name in ("blocks", "doors", "ferry", "gripper", "hanoi",
                 "slide_tile", "sokoban", "tsp"):
        env = load_env(name)
        plan = plan_gbfs(env)
        assert validate_plan(env, plan.actions), name
        optimum = bfs_optimal_length(env, limit=len(plan))
        assert optimum is not None and len(plan) >= optimum


def test_already_satisfied_goal_yields_empty_plan():
    env = register(TRAP_DOMAIN, ["""
        (define (problem done) (:domain trap)
          (:init (token) (treasure)) (:goal (treasure)))
        """])
    plan = plan_gbfs(env)
    assert plan.actions == ()
    assert validate_plan(env, plan.actions)


def test_dropping_an_action_invalidates():
    env = load_env("hanoi")
    plan = plan_gbfs(env)
    for skip in range(len(plan)):
        pruned = plan.actions[:skip] + plan.actions[skip + 1:]
        assert not validate_plan(env, pruned)


def test_validation_covers_the_requested_problem():
    env = load_env("blocks")
    plan = plan_gbfs(env, problem_index=1)
    assert validate_plan(env, plan.actions, problem_index=1)
    assert not validate_plan(env, plan.actions, problem_index=2)


def test_timeout_raises():
    env = load_env("sokoban")
    with pytest.raises(PlanTimeout):
        plan_gbfs(env, timeout=0.0)


def test_unreachable_goal_exhausts_search():
    env = register(TRAP_DOMAIN, [TRAP_PROBLEM])
    with pytest.raises(PlanUnsolvable):
        plan_gbfs(env)


def test_search_is_deterministic():
    env = load_env("gripper")
    first = plan_gbfs(env)
    second = plan_gbfs(env)
    assert first.actions == second.actions
    assert (first.expansions, first.generated) == \
        (second.expansions, second.generated)


def test_planner_does_not_disturb_the_env():
    env = load_env("blocks", seed=0)
    env.reset_to(0)
    before = env.current_state
    plan_gbfs(env)
    assert env.current_state == before
    assert env.problem_index == 0


# -- heuristic ---------------------------------------------------------------


def test_h_add_zero_iff_goal():
    for name in ("blocks", "gripper", "tsp"):
        env = load_env(name)
        env.reset_to(0)
        assert (h_add(env.current_state, env) == 0.0) == env.goal_holds()
    env = load_env("blocks")
    env.reset_to(0)
    env.step(env.parse_action("(pickup a)"))
    env.step(env.parse_action("(stack a b)"))
    assert env.goal_holds()
    assert h_add(env.current_state, env) == 0.0


def test_h_add_single_relaxed_action():
    env = load_env("blocks")
    env.reset_to(0)
    goal = Literal(env.domain.predicate_map["holding"],
                   tuple(env.parse_action("(pickup a)").args))
    assert h_add(env.current_state, env, goal=goal) == 1.0


def test_h_add_unreachable_is_infinite():
    env = register(TRAP_DOMAIN, [TRAP_PROBLEM])
    env.reset_to(0)
    assert h_add(env.current_state, env) == INFINITY


def test_h_add_never_overstates_zero():
    # nonzero whenever the goal fails, on states sampled along a plan
    env = load_env("ferry")
    plan = plan_gbfs(env)
    runner = env.copy()
    runner.reset_to(0)
    for action in plan.actions:
        assert h_add(runner.current_state, runner) > 0.0
        runner.step(action)
    assert h_add(runner.current_state, runner) == 0.0


# -- determinization ----------------------------------------------------------


def test_determinize_picks_most_likely_outcome():
    env = load_env("river")
    effect = env.domain.operator_map["swim-across"].effect
    assert isinstance(effect, ProbabilisticEffect)
    det = determinize(effect)
    assert det == effect.outcomes[0][1]
    assert {str(l) for l in det.add} == {"(at ?to)"}


def test_determinize_residual_can_win():
    eff = ProbabilisticEffect((
        (Fraction(1, 5), DeterministicEffect(frozenset(), frozenset())),
        (Fraction(3, 10), DeterministicEffect(frozenset(), frozenset()))))
    assert eff.residual == Fraction(1, 2)
    assert determinize(eff) == DeterministicEffect(frozenset(), frozenset())


def test_probabilistic_entries_plan_on_determinization():
    env = load_env("river")
    plan = plan_gbfs(env)
    assert [str(a) for a in plan.actions] == ["(swim far-bank)"]


# -- quantifier expansion ------------------------------------------------------


def test_forall_goal_expands_to_conjunction():
    env = load_env("tsp")
    env.reset_to(0)
    state = env.current_state
    expanded = expand_quantifiers(state.goal, sorted(state.objects,
                                                     key=lambda o: o.name),
                                  env.domain)
    assert isinstance(expanded, And)
    assert not any(isinstance(op, Or) for op in expanded.operands)


# -- plan files -----------------------------------------------------------------


def test_plan_file_round_trip(tmp_path):
    env = load_env("hanoi")
    plan = plan_gbfs(env)
    path = tmp_path / "plan.txt"
    write_plan(plan, str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == len(plan)
    assert all(line.startswith("(move ") for line in lines)
    again = read_plan(str(path), env)
    assert again == plan.actions


def test_read_plan_skips_blanks_and_comments(tmp_path):
    env = load_env("blocks")
    path = tmp_path / "plan.txt"
    path.write_text("; solution\n\n(pickup a)\n  (stack a b)\n")
    actions = read_plan(str(path), env)
    assert [str(a) for a in actions] == ["(pickup a)", "(stack a b)"]
    assert validate_plan(env, actions)
