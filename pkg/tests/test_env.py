"""Episode runtime: matching, effects, rewards, action spaces, sampling.

The transition tables below were derived by hand from the bundled domain
files: each row lists the actions taken, the probe action, and the exact
literal changes, reward, and done flag the engine must produce.
"""

from __future__ import annotations

import random
from dataclasses import replace
from fractions import Fraction

import pytest

from oracles import oracle_closure
from pddlenv import (ConfigurationError, DeadEndError, DeclarationError,
                     EnvConfig, Env, InvalidActionError, ParseError,
                     apply_effect, load_env, parse_domain, parse_problem,
                     register)
from pddlenv.env import _operators_as_actions_domain
from pddlenv.structs import (And, DeterministicEffect, Literal,
                             ProbabilisticEffect, ground_effect)

from conftest import TRAP_DOMAIN, TRAP_PROBLEM


def literal_strs(state):
    return {str(l) for l in state.literals}


def drive(env, *action_texts):
    """Apply a sequence of actions, returning the last StepResult."""
    result = None
    for text in action_texts:
        result = env.step(env.parse_action(text))
    return result


@pytest.fixture
def blocks():
    env = load_env("blocks", seed=0)
    env.reset_to(0)
    return env


@pytest.fixture
def hanoi():
    env = load_env("hanoi", seed=0)
    env.reset_to(0)
    return env


@pytest.fixture
def gripper():
    env = load_env("gripper", seed=0)
    env.reset_to(0)
    return env


# -- blocks transition table -------------------------------------------


BLOCKS_INIT = {"(ontable a)", "(ontable b)", "(clear a)", "(clear b)",
               "(handempty)"}

BLOCKS_TABLE = [
    # (setup actions, probe, expected literals, reward, done)
    ((), "(pickup a)",
     {"(ontable b)", "(clear b)", "(holding a)"}, 0.0, False),
    ((), "(pickup b)",
     {"(ontable a)", "(clear a)", "(holding b)"}, 0.0, False),
    (("(pickup a)",), "(stack a b)",
     {"(ontable b)", "(clear a)", "(handempty)", "(on a b)"}, 1.0, True),
    (("(pickup a)",), "(putdown a)", BLOCKS_INIT, 0.0, False),
    (("(pickup b)",), "(stack b a)",
     {"(ontable a)", "(clear b)", "(handempty)", "(on b a)"}, 0.0, False),
    (("(pickup b)", "(stack b a)"), "(unstack b a)",
     {"(ontable a)", "(clear a)", "(holding b)"}, 0.0, False),
    # invalid probes: the state must come back unchanged
    (("(pickup b)",), "(pickup a)",
     {"(ontable a)", "(clear a)", "(holding b)"}, 0.0, False),
    (("(pickup a)",), "(stack a a)",
     {"(ontable b)", "(clear b)", "(holding a)"}, 0.0, False),
    ((), "(unstack a b)", BLOCKS_INIT, 0.0, False),
    ((), "(putdown b)", BLOCKS_INIT, 0.0, False),
    ((), "(stack a b)", BLOCKS_INIT, 0.0, False),
]


@pytest.mark.parametrize("setup,probe,literals,reward,done",
                         BLOCKS_TABLE,
                         ids=[f"blocks-{i}" for i in range(len(BLOCKS_TABLE))])
def test_blocks_transitions(blocks, setup, probe, literals, reward, done):
    drive(blocks, *setup)
    result = blocks.step(blocks.parse_action(probe))
    assert literal_strs(result.observation) == literals
    assert result.reward == reward
    assert result.done is done
    assert blocks.goal_holds() is (reward == 1.0)


def test_blocks_solve_sequence(blocks):
    rewards, dones = [], []
    for text in ["(pickup b)", "(putdown b)", "(pickup a)", "(stack a b)"]:
        result = blocks.step(blocks.parse_action(text))
        rewards.append(result.reward)
        dones.append(result.done)
    assert rewards == [0.0, 0.0, 0.0, 1.0]
    assert dones == [False, False, False, True]


def test_stepping_out_of_goal_drops_reward(blocks):
    drive(blocks, "(pickup a)", "(stack a b)")
    result = blocks.step(blocks.parse_action("(unstack a b)"))
    assert result.reward == 0.0
    assert result.done is False
    assert literal_strs(result.observation) == \
        {"(ontable b)", "(clear b)", "(holding a)"}


# -- hanoi transition table (operators_as_actions) -----------------------


HANOI_SOLVE = ["(move d1 d2 peg3)", "(move d2 d3 peg2)", "(move d1 peg3 d2)",
               "(move d3 peg1 peg3)", "(move d1 d2 peg1)",
               "(move d2 peg2 d3)", "(move d1 peg1 d2)"]

HANOI_TABLE = [
    ((), "(move d1 d2 peg2)",
     {"(on d1 peg2)", "(clear d2)"}, {"(on d1 d2)", "(clear peg2)"}),
    ((), "(move d1 d2 peg3)",
     {"(on d1 peg3)", "(clear d2)"}, {"(on d1 d2)", "(clear peg3)"}),
    (("(move d1 d2 peg2)",), "(move d2 d3 peg3)",
     {"(on d2 peg3)", "(clear d3)"}, {"(on d2 d3)", "(clear peg3)"}),
    (("(move d1 d2 peg2)", "(move d2 d3 peg3)"), "(move d1 peg2 d2)",
     {"(on d1 d2)", "(clear peg2)"}, {"(on d1 peg2)", "(clear d2)"}),
    # invalid probes, each failing one precondition literal
    ((), "(move d2 d3 peg2)", set(), set()),        # d2 not clear
    ((), "(move d3 peg1 peg2)", set(), set()),      # d3 not clear
    ((), "(move d1 d2 d3)", set(), set()),          # d3 not clear
    ((), "(move d2 d3 d1)", set(), set()),          # d2 never fits on d1
    ((), "(move d1 d3 peg2)", set(), set()),        # d1 sits on d2, not d3
    (("(move d1 d2 peg3)", "(move d2 d3 peg2)"), "(move d3 peg1 peg2)",
     set(), set()),                                 # peg2 now occupied
]


@pytest.mark.parametrize("setup,probe,added,removed",
                         HANOI_TABLE,
                         ids=[f"hanoi-{i}" for i in range(len(HANOI_TABLE))])
def test_hanoi_transitions(hanoi, setup, probe, added, removed):
    drive(hanoi, *setup)
    before = literal_strs(hanoi.current_state)
    result = hanoi.step(hanoi.parse_action(probe))
    assert literal_strs(result.observation) == (before - removed) | added
    assert result.reward == 0.0
    assert result.done is False


def test_hanoi_solve_sequence(hanoi):
    for text in HANOI_SOLVE[:-1]:
        result = hanoi.step(hanoi.parse_action(text))
        assert (result.reward, result.done) == (0.0, False)
    result = hanoi.step(hanoi.parse_action(HANOI_SOLVE[-1]))
    assert (result.reward, result.done) == (1.0, True)
    assert {"(on d3 peg3)", "(on d2 d3)", "(on d1 d2)"} <= \
        literal_strs(result.observation)


# -- gripper transition table --------------------------------------------


GRIPPER_INIT = {"(at-robby rooma)", "(at ball1 rooma)", "(at ball2 rooma)",
                "(free left)", "(free right)"}

GRIPPER_TABLE = [
    ((), "(pick ball1 left)",
     {"(at-robby rooma)", "(at ball2 rooma)", "(free right)",
      "(carry ball1 left)"}, 0.0),
    ((), "(move roomb)",
     {"(at-robby roomb)", "(at ball1 rooma)", "(at ball2 rooma)",
      "(free left)", "(free right)"}, 0.0),
    (("(pick ball1 left)", "(move roomb)"), "(drop ball1 left)",
     {"(at-robby roomb)", "(at ball1 roomb)", "(at ball2 rooma)",
      "(free left)", "(free right)"}, 0.0),
    (("(pick ball1 left)",), "(pick ball2 right)",
     {"(at-robby rooma)", "(carry ball1 left)", "(carry ball2 right)"}, 0.0),
    (("(move roomb)",), "(move rooma)", GRIPPER_INIT, 0.0),
    # invalid probes
    ((), "(move rooma)", GRIPPER_INIT, 0.0),         # already there
    ((), "(drop ball1 left)", GRIPPER_INIT, 0.0),    # not carrying
    (("(move roomb)",), "(pick ball1 left)",
     {"(at-robby roomb)", "(at ball1 rooma)", "(at ball2 rooma)",
      "(free left)", "(free right)"}, 0.0),          # ball in other room
    (("(pick ball1 left)",), "(pick ball1 right)",
     {"(at-robby rooma)", "(at ball2 rooma)", "(free right)",
      "(carry ball1 left)"}, 0.0),                   # ball already held
    (("(pick ball1 left)",), "(pick ball2 left)",
     {"(at-robby rooma)", "(at ball2 rooma)", "(free right)",
      "(carry ball1 left)"}, 0.0),                   # gripper occupied
]


@pytest.mark.parametrize("setup,probe,literals,reward",
                         GRIPPER_TABLE,
                         ids=[f"gripper-{i}" for i in range(len(GRIPPER_TABLE))])
def test_gripper_transitions(gripper, setup, probe, literals, reward):
    drive(gripper, *setup)
    result = gripper.step(gripper.parse_action(probe))
    assert literal_strs(result.observation) == literals
    assert result.reward == reward
    assert result.done is False


def test_gripper_solve_sequence(gripper):
    result = drive(gripper, "(pick ball1 left)", "(pick ball2 right)",
                   "(move roomb)", "(drop ball1 left)", "(drop ball2 right)")
    assert (result.reward, result.done) == (1.0, True)
    assert "(at ball1 roomb)" in literal_strs(result.observation)
    assert "(at ball2 roomb)" in literal_strs(result.observation)


def test_gripper_binds_nonfree_room_by_inference(gripper):
    match = gripper.match_operator(gripper.current_state,
                                   gripper.parse_action("(move roomb)"))
    assert match is not None
    operator, sub = match
    assert operator.name == "move-robot"
    assert {v.name: c.name for v, c in sub.items()} == \
        {"?from": "rooma", "?to": "roomb"}


# -- invalid-action modes ------------------------------------------------


def test_invalid_action_noop_reports_no_operator(blocks):
    before = blocks.current_state
    result = blocks.step(blocks.parse_action("(stack a b)"))
    assert result.observation == before
    assert result.info["operator"] is None
    assert result.info["effect_index"] is None


def test_invalid_action_raises_when_configured():
    env = load_env("blocks", config=EnvConfig(raise_error_on_invalid_action=True))
    env.reset_to(0)
    with pytest.raises(InvalidActionError):
        env.step(env.parse_action("(stack a b)"))


def test_ill_typed_action_rejected(gripper):
    with pytest.raises(ParseError) as err:
        gripper.parse_action("(move ball1)")
    assert err.value.kind == "typing"


def test_unknown_action_predicate_rejected(blocks):
    action = blocks.parse_action("(clear a)")
    with pytest.raises(DeclarationError):
        blocks.step(action)


def test_step_before_reset_rejected():
    env = load_env("blocks")
    with pytest.raises(RuntimeError):
        env.step(None)


# -- reward/done/goal coupling and horizons --------------------------------


def test_reward_one_iff_done_iff_goal(blocks):
    rng = random.Random(3)
    blocks.seed(3)
    for _ in range(8):
        blocks.reset()
        for _ in range(12):
            result = blocks.step(blocks.sample_action(rng=rng))
            goal = blocks.goal_holds()
            assert (result.reward == 1.0) == result.done == goal


def test_horizon_truncates_without_reward():
    env = load_env("blocks", max_episode_length=2)
    env.reset_to(0)
    first = env.step(env.parse_action("(pickup a)"))
    assert (first.done, first.info["truncated"]) == (False, False)
    second = env.step(env.parse_action("(putdown a)"))
    assert (second.reward, second.done) == (0.0, True)
    assert second.info["truncated"] is True


def test_goal_on_final_step_is_not_truncation():
    env = load_env("blocks", max_episode_length=2)
    env.reset_to(0)
    env.step(env.parse_action("(pickup a)"))
    result = env.step(env.parse_action("(stack a b)"))
    assert (result.reward, result.done) == (1.0, True)
    assert result.info["truncated"] is False


def test_episode_length_resets_with_episode():
    env = load_env("blocks", max_episode_length=1)
    env.reset_to(0)
    assert env.step(env.parse_action("(pickup a)")).done is True
    env.reset_to(0)
    result = env.step(env.parse_action("(pickup a)"))
    assert result.info["truncated"] is True


# -- reset, seeding, registration ------------------------------------------


def test_reset_info_labels_and_paths(blocks):
    _, info = blocks.reset_to(0)
    assert info["domain"] == "blocks"
    assert info["problem"] == "blocks-two"
    assert info["domain_file"].endswith("domain.pddl")
    assert info["problem_file"].endswith("problem1.pddl")


def test_reset_selection_reproducible():
    picks = []
    for _ in range(2):
        env = load_env("blocks", seed=123)
        picks.append([env.reset()[1]["problem"] for _ in range(12)])
    assert picks[0] == picks[1]
    assert len(set(picks[0])) > 1


def test_single_problem_always_selected():
    env = load_env("blocks")
    env = Env(env.domain, env.problems[:1], EnvConfig(seed=5))
    for _ in range(5):
        assert env.reset()[1]["problem"] == "blocks-two"


def test_reseed_replays_selection():
    env = load_env("blocks", seed=9)
    first = [env.reset()[1]["problem"] for _ in range(10)]
    env.seed(9)
    assert [env.reset()[1]["problem"] for _ in range(10)] == first


def test_zero_problems_rejected():
    env = load_env("blocks")
    with pytest.raises(ConfigurationError):
        Env(env.domain, (), EnvConfig())


def test_operator_without_action_predicate_rejected():
    domain = parse_domain("""
        (define (domain naked)
          (:predicates (p ?x) (q ?x))
          (:action act :parameters (?x)
            :precondition (p ?x) :effect (q ?x)))
        """, "naked")
    problem = parse_problem("""
        (define (problem one) (:domain naked)
          (:objects a) (:init (p a)) (:goal (q a)))
        """, domain, "one")
    with pytest.raises(ConfigurationError):
        Env(domain, (problem,), EnvConfig())
    # the same files are fine when operators stand in for actions
    env = Env(domain, (problem,), EnvConfig(operators_as_actions=True))
    env.reset_to(0)
    assert env.step(env.parse_action("(act a)")).done is True


def test_shared_action_predicate_rejected_at_parse():
    with pytest.raises(ParseError) as err:
        parse_domain("""
            (define (domain shared)
              (:predicates (p ?x) (q ?x) (go ?x))
              (:actions go)
              (:action one :parameters (?x)
                :precondition (and (go ?x) (p ?x)) :effect (q ?x))
              (:action two :parameters (?x)
                :precondition (and (go ?x) (q ?x)) :effect (p ?x)))
            """, "shared")
    assert err.value.kind == "declaration"


def test_shared_action_predicate_rejected_at_registration():
    base = load_env("blocks")
    op = base.domain.operator_map["pick-up"]
    twin = replace(op, name="pick-up-again")
    domain = replace(base.domain, operators=base.domain.operators + (twin,))
    with pytest.raises(ConfigurationError):
        Env(domain, base.problems, EnvConfig())


def test_operators_as_actions_arities_match_parameter_counts():
    source = load_env("blocks").domain
    augmented = _operators_as_actions_domain(source)
    arities = {p.name: p.arity for p in augmented.action_predicates}
    assert arities == {"pick-up": 1, "put-down": 1,
                       "stack-on": 2, "unstack-from": 2}
    for op in augmented.operators:
        assert op.action_literal.args == op.parameters


def test_operators_as_actions_shares_augmented_domain():
    one = load_env("hanoi")
    two = load_env("hanoi", test=True)
    assert one.domain is two.domain


def test_operators_as_actions_demotes_declared_selectors():
    env = load_env("blocks", config=EnvConfig(operators_as_actions=True))
    env.reset_to(0)
    names = {p.name for p in env.domain.action_predicates}
    assert names == {"pick-up", "put-down", "stack-on", "unstack-from"}
    demoted = env.domain.predicate_map["pickup"]
    assert not demoted.is_action_predicate
    result = drive(env, "(pick-up a)", "(stack-on a b)")
    assert (result.reward, result.done) == (1.0, True)
    with pytest.raises(DeclarationError):
        env.step(env.parse_action("(pickup a)"))


# -- action spaces ---------------------------------------------------------


def test_two_block_valid_actions_exact(blocks):
    valid = blocks.enumerate_valid_actions()
    assert {str(a) for a in valid} == {"(pickup a)", "(pickup b)"}


def test_valid_actions_match_brute_force():
    for name in ("blocks", "gripper", "hanoi"):
        env = load_env(name)
        env.reset_to(0)
        for _ in range(4):
            state = env.current_state
            brute = tuple(a for a in env.all_ground_actions(state)
                          if env.match_operator(state, a) is not None)
            valid = env.enumerate_valid_actions(state)
            assert valid == brute
            assert set(valid) <= set(env.all_ground_actions(state))
            if not valid:
                break
            env.step(valid[0])


def test_empty_valid_set_when_nothing_applies():
    env = register(TRAP_DOMAIN, [TRAP_PROBLEM], EnvConfig())
    env.reset_to(0)
    env.step(env.parse_action("(go)"))
    assert env.enumerate_valid_actions() == ()


def test_sample_action_uniform_over_valid():
    env = load_env("blocks", config=EnvConfig(dynamic_action_space=True))
    env.reset_to(0)
    rng = random.Random(42)
    counts = {"(pickup a)": 0, "(pickup b)": 0}
    for _ in range(10000):
        counts[str(env.sample_action(rng=rng))] += 1
    for n in counts.values():
        assert abs(n / 10000 - 0.5) <= 0.02


def test_sample_action_singleton(gripper):
    env = load_env("blocks", config=EnvConfig(dynamic_action_space=True))
    env.reset_to(0)
    env.step(env.parse_action("(pickup a)"))
    env.step(env.parse_action("(stack a b)"))
    rng = random.Random(0)
    # only unstacking a off b is valid now
    for _ in range(5):
        assert str(env.sample_action(rng=rng)) == "(unstack a b)"


def test_static_sampling_can_yield_invalid_actions(blocks):
    rng = random.Random(1)
    seen_invalid = False
    for _ in range(50):
        action = blocks.sample_action(rng=rng)
        if blocks.match_operator(blocks.current_state, action) is None:
            seen_invalid = True
            break
    assert seen_invalid


def test_dead_end_raises(trap_env):
    trap_env.reset_to(0)
    trap_env.step(trap_env.parse_action("(go)"))
    with pytest.raises(DeadEndError):
        trap_env.sample_action(rng=random.Random(0))


# -- effect application ----------------------------------------------------


def test_apply_deterministic_effect(blocks):
    state = blocks.current_state
    op = blocks.domain.operator_map["pick-up"]
    sub = dict(zip(op.parameters, blocks.parse_action("(pickup a)").args))
    effect = ground_effect(op.effect, sub, blocks.domain.types)
    after, index = apply_effect(state, effect)
    assert index is None
    assert literal_strs(after) == {"(ontable b)", "(clear b)", "(holding a)"}


def test_apply_empty_effect_is_identity(blocks):
    state = blocks.current_state
    after, _ = apply_effect(state, DeterministicEffect(frozenset(), frozenset()))
    assert after == state


def test_probabilistic_effect_residual_index():
    env = load_env("river")
    op = env.domain.operator_map["swim-across"]
    assert isinstance(op.effect, ProbabilisticEffect)
    assert [p for p, _ in op.effect.outcomes] == [Fraction(7, 10), Fraction(1, 5)]
    assert op.effect.residual == Fraction(1, 10)
    env.reset_to(0)
    state = env.current_state
    match = env.match_operator(state, env.parse_action("(swim far-bank)"))
    effect = ground_effect(op.effect, match[1], env.domain.types)
    seen = set()
    rng = random.Random(7)
    for _ in range(200):
        after, index = apply_effect(state, effect, rng)
        seen.add(index)
        if index == -1:
            assert after == state
    assert seen == {0, 1, -1}


def test_effect_sampling_frequencies():
    env = load_env("river", seed=5)
    counts = {0: 0, 1: 0, -1: 0}
    for _ in range(10000):
        env.reset_to(0)
        result = env.step(env.parse_action("(swim far-bank)"))
        counts[result.info["effect_index"]] += 1
    assert abs(counts[0] / 10000 - 0.7) <= 0.02
    assert abs(counts[1] / 10000 - 0.2) <= 0.02
    assert abs(counts[-1] / 10000 - 0.1) <= 0.02


def test_frame_property(blocks):
    rng = random.Random(8)
    for _ in range(40):
        state = blocks.current_state
        action = blocks.sample_action(rng=rng)
        match = blocks.match_operator(state, action)
        result = blocks.step(action)
        if match is None:
            assert result.observation == state
            continue
        op, sub = match
        effect = ground_effect(op.effect, sub, blocks.domain.types)
        touched = effect.add | effect.delete
        for lit in state.literals - touched:
            assert lit in result.observation.literals
        for lit in result.observation.literals - state.literals:
            assert lit in effect.add


def test_deterministic_step_matches_strips_successor():
    env = load_env("hanoi")
    env.reset_to(0)
    rng = random.Random(21)
    for _ in range(30):
        state = env.current_state
        action = env.sample_action(rng=rng)
        match = env.match_operator(state, action)
        result = env.step(action)
        if match is None:
            assert result.observation.literals == state.literals
        else:
            op, sub = match
            effect = ground_effect(op.effect, sub, env.domain.types)
            assert result.observation.literals == \
                (state.literals - effect.delete) | effect.add


# -- observations -----------------------------------------------------------


def test_observation_includes_constants():
    env = load_env("sokoban")
    obs, _ = env.reset_to(0)
    names = {o.name for o in obs.objects}
    assert {"up", "down", "left", "right"} <= names


def test_observation_carries_goal(blocks):
    obs = blocks.observe()
    assert str(obs.goal) == "(on a b)"


def test_derived_literals_visible_but_not_stored():
    env = load_env("tsp")
    obs, _ = env.reset_to(0)
    derived = {l for l in obs.literals if l.predicate.is_derived}
    assert derived
    internal = env.current_state
    assert not any(l.predicate.is_derived for l in internal.literals)
    assert derived == oracle_closure(internal.literals,
                                     internal.objects | env.domain.constants,
                                     env.domain)


def test_identical_seeds_identical_trajectories():
    traces = []
    for _ in range(2):
        env = load_env("river", seed=31)
        policy = random.Random(31)
        trace = []
        for _ in range(3):
            env.reset()
            for _ in range(10):
                result = env.step(env.sample_action(rng=policy))
                trace.append((str(result.info["problem"]),
                              result.reward, result.done,
                              result.info["effect_index"]))
        traces.append(trace)
    assert traces[0] == traces[1]
