"""Episodic environments over parsed domains and problems.

An Env owns an immutable Domain shared across instances, a list of
Problems, a config, and one seeded random stream. The stream is consumed
only by problem selection at reset and by probabilistic-effect sampling,
so a seed plus an action sequence fixes the trajectory exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from pddlenv import inference
from pddlenv.errors import (ConfigurationError, DeadEndError,
                            DeclarationError, InvalidActionError, TypingError)
from pddlenv.parser import parse_domain, parse_ground_literal, parse_problem
from pddlenv.structs import (And, DeterministicEffect, Domain, Effect,
                             Formula, GroundAction, Literal, Operator,
                             Predicate, ProbabilisticEffect, Problem, State,
                             Substitution, Variable, all_groundings,
                             ground_effect, substitute_formula)


@dataclass(frozen=True)
class EnvConfig:
    """Environment behavior switches.

    operators_as_actions: synthesize one action predicate per operator,
        exposing every parameter; declared action predicates are demoted.
    raise_error_on_invalid_action: raise instead of no-op on invalid steps.
    dynamic_action_space: sample_action draws from the valid actions of the
        current state rather than from all groundings.
    max_episode_length: when set, step() reports done after this many steps.
    seed: seeds the environment's random stream at construction.
    """

    operators_as_actions: bool = False
    raise_error_on_invalid_action: bool = False
    dynamic_action_space: bool = False
    max_episode_length: Optional[int] = None
    seed: Optional[int] = None


@dataclass(frozen=True, eq=False)
class StepResult:
    """One transition: the new observation, reward, done flag, and info."""

    observation: State
    reward: float
    done: bool
    info: Dict


@lru_cache(maxsize=None)
def _operators_as_actions_domain(domain: Domain) -> Domain:
    """A copy of ``domain`` where each operator is its own action predicate.

    Declared action predicates, if any, are demoted to ordinary predicates
    and their selector conjuncts dropped from preconditions: the synthesized
    per-operator literal takes over their role.
    """
    declared = {p.name for p in domain.action_predicates}
    predicates = tuple(replace(p, is_action_predicate=False)
                       if p.name in declared else p
                       for p in domain.predicates)
    taken = {p.name for p in predicates}
    synthesized = []
    operators = []
    for op in domain.operators:
        if op.name in taken:
            raise ConfigurationError(
                f"cannot synthesize an action predicate for operator "
                f"'{op.name}': a predicate with that name exists")
        pred = Predicate(op.name, tuple(v.type for v in op.parameters),
                         is_action_predicate=True)
        synthesized.append(pred)
        precondition = op.precondition
        if op.action_literal is not None:
            precondition = _strip_action_conjunct(precondition, op.action_literal)
        operators.append(replace(op, precondition=precondition,
                                 action_literal=Literal(pred, op.parameters)))
    return replace(domain,
                   predicates=predicates + tuple(synthesized),
                   operators=tuple(operators))


@dataclass(frozen=True)
class _Matcher:
    """Per-operator matching data derived once at registration."""

    operator: Operator
    action_predicate: Predicate
    free_params: Tuple[Variable, ...]
    nonfree_params: Tuple[Variable, ...]
    residual: Formula


def _strip_action_conjunct(precondition: Formula, literal: Literal) -> Formula:
    if isinstance(precondition, Literal):
        return And(()) if precondition == literal else precondition
    if isinstance(precondition, And):
        kept = []
        for operand in precondition.operands:
            stripped = _strip_action_conjunct(operand, literal)
            if isinstance(stripped, And) and not stripped.operands:
                continue
            kept.append(stripped)
        return And(tuple(kept))
    return precondition


class Env:
    """A reset/step environment over one domain and its problem set."""

    def __init__(self, domain: Domain, problems: Sequence[Problem],
                 config: Optional[EnvConfig] = None,
                 domain_path: Optional[str] = None,
                 problem_paths: Optional[Sequence[str]] = None) -> None:
        config = config or EnvConfig()
        if not problems:
            raise ConfigurationError("an environment needs at least one problem")
        for problem in problems:
            if problem.domain_name != domain.name:
                raise ConfigurationError(
                    f"problem '{problem.name}' is for domain "
                    f"'{problem.domain_name}', not '{domain.name}'")
        self._source_domain = domain
        if config.operators_as_actions:
            domain = _operators_as_actions_domain(domain)
        self._config = config
        self._domain = domain
        self._problems = tuple(problems)
        self._domain_path = domain_path
        self._problem_paths = (tuple(problem_paths) if problem_paths is not None
                               else (None,) * len(self._problems))
        if len(self._problem_paths) != len(self._problems):
            raise ConfigurationError("one problem path per problem, or none")

        inference.stratify(domain)  # fail fast on unstratifiable rules
        self._matchers = self._build_matchers(domain)
        self._rng = random.Random(config.seed)
        self._state: Optional[State] = None
        self._problem_index: Optional[int] = None
        self._steps = 0
        self._valid_cache: Dict[State, Tuple[GroundAction, ...]] = {}
        self._space_cache: Dict[int, Tuple[GroundAction, ...]] = {}

    @staticmethod
    def _build_matchers(domain: Domain) -> Dict[str, _Matcher]:
        matchers: Dict[str, _Matcher] = {}
        for op in domain.operators:
            literal = op.action_literal
            if literal is None:
                raise ConfigurationError(
                    f"operator '{op.name}' declares no action predicate; "
                    f"use operators_as_actions or add an (:actions ...) section")
            pred = literal.predicate
            if pred.name in matchers:
                raise ConfigurationError(
                    f"action predicate '{pred.name}' is shared by operators "
                    f"'{matchers[pred.name].operator.name}' and '{op.name}'")
            free = tuple(literal.args)  # distinct variables, checked at parse
            for var in free:
                if not isinstance(var, Variable) or var not in op.parameters:
                    raise ConfigurationError(
                        f"action literal of '{op.name}' must apply its parameters")
            nonfree = tuple(v for v in op.parameters if v not in free)
            residual = _strip_action_conjunct(op.precondition, literal)
            matchers[pred.name] = _Matcher(op, pred, free, nonfree, residual)
        return matchers

    # -- properties ------------------------------------------------------

    @property
    def domain(self) -> Domain:
        return self._domain

    @property
    def problems(self) -> Tuple[Problem, ...]:
        return self._problems

    @property
    def config(self) -> EnvConfig:
        return self._config

    @property
    def problem_index(self) -> Optional[int]:
        return self._problem_index

    @property
    def current_problem(self) -> Problem:
        self._require_episode()
        return self._problems[self._problem_index]

    @property
    def current_state(self) -> State:
        self._require_episode()
        return self._state

    def _require_episode(self) -> None:
        if self._state is None:
            raise RuntimeError("reset() must be called before this operation")

    # -- episode control -------------------------------------------------

    def seed(self, value: Optional[int]) -> None:
        """Reseed the environment's random stream."""
        self._rng = random.Random(value)

    def copy(self, config: Optional[EnvConfig] = None) -> Env:
        """A fresh environment sharing this one's parsed values."""
        return Env(self._source_domain, self._problems, config or self._config,
                   self._domain_path, self._problem_paths)

    def reset(self) -> Tuple[State, Dict]:
        """Start an episode on a uniformly drawn problem."""
        index = self._rng.randrange(len(self._problems))
        return self.reset_to(index)

    def reset_to(self, index: int) -> Tuple[State, Dict]:
        """Start an episode on a specific problem, consuming no randomness."""
        problem = self._problems[index]
        self._problem_index = index
        objects = problem.objects | self._domain.constants
        self._state = State(problem.init, objects, problem.goal)
        self._steps = 0
        self._valid_cache.clear()
        return self._observe(self._state), self._reset_info(index)

    def _reset_info(self, index: int) -> Dict:
        info = {"domain": self._domain.name,
                "problem": self._problems[index].name,
                "problem_index": index}
        if self._domain_path is not None:
            info["domain_file"] = self._domain_path
        if self._problem_paths[index] is not None:
            info["problem_file"] = self._problem_paths[index]
        return info

    def _observe(self, state: State) -> State:
        if not self._domain.derived:
            return state
        closure = inference.derived_closure(state, self._domain)
        return state.with_literals(state.literals | closure)

    def observe(self) -> State:
        """The current observation, including derived literals."""
        self._require_episode()
        return self._observe(self._state)

    # -- action space ----------------------------------------------------

    def all_ground_actions(self, state: Optional[State] = None
                           ) -> Tuple[GroundAction, ...]:
        """Every typed grounding of every action predicate, sorted."""
        if state is None:
            self._require_episode()
            state = self._state
        key = self._problem_index if state is self._state else None
        if key is not None and key in self._space_cache:
            return self._space_cache[key]
        objects = state.objects | self._domain.constants
        actions: List[GroundAction] = []
        for name in sorted(self._matchers):
            pred = self._matchers[name].action_predicate
            actions.extend(sorted(all_groundings(pred, objects, self._domain.types),
                                  key=lambda l: tuple(a.name for a in l.args)))
        out = tuple(actions)
        if key is not None:
            self._space_cache[key] = out
        return out

    def enumerate_valid_actions(self, state: Optional[State] = None
                                ) -> Tuple[GroundAction, ...]:
        """Actions that match_operator accepts in ``state``, sorted."""
        if state is None:
            self._require_episode()
            state = self._state
        cached = self._valid_cache.get(state)
        if cached is None:
            cached = tuple(action for action, _, _ in self._valid_transitions(state))
            self._valid_cache[state] = cached
        return cached

    def valid_transitions(self, state: Optional[State] = None
                          ) -> Tuple[Tuple[GroundAction, Operator, Substitution], ...]:
        """Valid actions with the operator and full binding each one takes."""
        if state is None:
            self._require_episode()
            state = self._state
        return self._valid_transitions(state)

    def _valid_transitions(self, state: State
                           ) -> Tuple[Tuple[GroundAction, Operator, Substitution], ...]:
        out = []
        for name in sorted(self._matchers):
            matcher = self._matchers[name]
            query = inference.Query(matcher.residual, matcher.operator.parameters, "all")
            seen = set()
            for sub in inference.find_assignments(query, state, self._domain):
                args = tuple(sub[v] for v in matcher.free_params)
                if args in seen:
                    continue  # keep the least nonfree binding per action
                seen.add(args)
                out.append((Literal(matcher.action_predicate, args),
                            matcher.operator, sub))
        out.sort(key=lambda item: (item[0].predicate.name,
                                   tuple(a.name for a in item[0].args)))
        return tuple(out)

    def sample_action(self, state: Optional[State] = None,
                      rng: Optional[random.Random] = None) -> GroundAction:
        """Uniform draw from the configured action space."""
        rng = rng if rng is not None else self._rng
        if self._config.dynamic_action_space:
            actions = self.enumerate_valid_actions(state)
            if not actions:
                raise DeadEndError("no valid actions in the current state")
        else:
            actions = self.all_ground_actions(state)
        return actions[rng.randrange(len(actions))]

    # -- stepping --------------------------------------------------------

    def match_operator(self, state: State, action: GroundAction
                     ) -> Optional[Tuple[Operator, Substitution]]:
        """The operator and full parameter binding ``action`` triggers, if any."""
        if not action.positive or not action.is_ground:
            raise TypingError(f"actions are positive ground literals: {action}")
        matcher = self._matchers.get(action.predicate.name)
        if matcher is None or matcher.action_predicate != action.predicate:
            raise DeclarationError(
                f"unknown action predicate '{action.predicate.name}'")
        free_binding: Substitution = {}
        for var, obj in zip(matcher.free_params, action.args):
            if not self._domain.types.is_subtype(obj.type, var.type):
                raise TypingError(
                    f"argument '{obj.name}' of {action} has type '{obj.type}', "
                    f"expected '{var.type}'")
            free_binding[var] = obj
        residual = substitute_formula(matcher.residual, free_binding)
        query = inference.Query(residual, matcher.nonfree_params, "first")
        solutions = inference.find_assignments(query, state, self._domain)
        if not solutions:
            return None
        full = dict(free_binding)
        full.update(solutions[0])
        return matcher.operator, full

    def goal_holds(self, state: Optional[State] = None) -> bool:
        if state is None:
            self._require_episode()
            state = self._state
        return inference.holds(state.goal, state, self._domain)

    def step(self, action: GroundAction) -> StepResult:
        """Apply ``action``; invalid actions no-op unless configured to raise."""
        self._require_episode()
        problem = self._problems[self._problem_index]
        info: Dict = {"problem": problem.name, "operator": None,
                      "substitution": None, "effect_index": None,
                      "truncated": False}
        match = self.match_operator(self._state, action)
        if match is None:
            if self._config.raise_error_on_invalid_action:
                raise InvalidActionError(f"invalid action {action} in the "
                                         f"current state")
            new_state = self._state
        else:
            operator, sub = match
            effect = ground_effect(operator.effect, sub, self._domain.types)
            new_state, index = apply_effect(self._state, effect, self._rng)
            info["operator"] = operator.name
            info["substitution"] = {v.name: c.name for v, c in
                                    sorted(sub.items(), key=lambda kv: kv[0].name)}
            info["effect_index"] = index
        self._state = new_state
        self._steps += 1
        goal = self.goal_holds(new_state)
        reward = 1.0 if goal else 0.0
        done = goal
        if (not goal and self._config.max_episode_length is not None
                and self._steps >= self._config.max_episode_length):
            done = True
            info["truncated"] = True
        return StepResult(self._observe(new_state), reward, done, info)

    def parse_action(self, text: str) -> GroundAction:
        """Parse an action string like ``(pick-up a)`` for this environment."""
        self._require_episode()
        return parse_ground_literal(text, self._domain, self._state.objects)


def apply_effect(state: State, effect: Effect,
                 rng: Optional[random.Random] = None
                 ) -> Tuple[State, Optional[int]]:
    """Successor state plus the sampled outcome index.

    Deterministic effects report index None. Probabilistic effects sample
    an outcome (index -1 is the residual trivial outcome). Deletes apply
    before adds.
    """
    if isinstance(effect, ProbabilisticEffect):
        if not effect.is_ground:
            raise TypingError("apply_effect requires a ground effect")
        draw = rng.random() if rng is not None else random.random()
        cumulative = 0
        index = -1
        chosen = DeterministicEffect(frozenset(), frozenset())
        for i, (prob, outcome) in enumerate(effect.outcomes):
            cumulative += prob
            if draw < cumulative:
                index, chosen = i, outcome
                break
        det = chosen
    else:
        if not effect.is_ground:
            raise TypingError("apply_effect requires a ground effect")
        det, index = effect, None
    literals = (state.literals - det.delete) | det.add
    return state.with_literals(frozenset(literals)), index


def register(domain_text: str, problem_texts: Sequence[str],
             config: Optional[EnvConfig] = None,
             domain_label: str = "<domain>",
             problem_labels: Optional[Sequence[str]] = None) -> Env:
    """Build an Env from in-memory PDDL text."""
    domain = parse_domain(domain_text, domain_label)
    labels = problem_labels or [f"<problem {i + 1}>" for i in range(len(problem_texts))]
    problems = [parse_problem(text, domain, label)
                for text, label in zip(problem_texts, labels)]
    return Env(domain, problems, config)


def register_files(domain_path: str, problem_paths: Sequence[str],
                   config: Optional[EnvConfig] = None) -> Env:
    """Build an Env from PDDL files, remembering their paths."""
    with open(domain_path, encoding="utf-8") as f:
        domain_text = f.read()
    domain = parse_domain(domain_text, str(domain_path))
    problems = []
    for path in problem_paths:
        with open(path, encoding="utf-8") as f:
            problems.append(parse_problem(f.read(), domain, str(path)))
    return Env(domain, problems, config, domain_path=str(domain_path),
               problem_paths=[str(p) for p in problem_paths])
