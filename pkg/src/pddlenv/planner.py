"""Greedy best-first planning over an environment's problems.

The heuristic is additive delete-relaxation cost. Probabilistic effects
are determinized to their most likely outcome, both for the heuristic
and for search successors, so plans are optimistic about chance.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from pddlenv import inference
from pddlenv.env import Env
from pddlenv.errors import PlanTimeout, PlanUnsolvable
from pddlenv.parser import parse_ground_literal
from pddlenv.structs import (And, Constant, DeterministicEffect, Domain,
                             Effect, Equality, Exists, ForAll, Formula,
                             GroundAction, Literal, Not, Or, ProbabilisticEffect,
                             State, Variable, ground_effect, substitute_formula)

INFINITY = float("inf")


@dataclass(frozen=True)
class Plan:
    """A validated-by-construction action sequence plus search counters."""

    actions: Tuple[GroundAction, ...]
    expansions: int
    generated: int
    wall_time: float

    def __len__(self) -> int:
        return len(self.actions)


def determinize(effect: Effect) -> DeterministicEffect:
    """The most likely single outcome; first wins on ties."""
    if isinstance(effect, DeterministicEffect):
        return effect
    best_prob, best = effect.outcomes[0]
    for prob, outcome in effect.outcomes[1:]:
        if prob > best_prob:
            best_prob, best = prob, outcome
    if effect.residual > best_prob:
        return DeterministicEffect(frozenset(), frozenset())
    return best


def expand_quantifiers(formula: Formula, objects: Sequence[Constant],
                       domain: Domain) -> Formula:
    """Replace ForAll with And and Exists with Or over typed objects."""
    def pool(var: Variable) -> List[Constant]:
        return [o for o in sorted(objects, key=lambda c: c.name)
                if domain.types.is_subtype(o.type, var.type)]

    def expand(f: Formula) -> Formula:
        if isinstance(f, (Literal, Equality)):
            return f
        if isinstance(f, And):
            return And(tuple(expand(o) for o in f.operands))
        if isinstance(f, Or):
            return Or(tuple(expand(o) for o in f.operands))
        if isinstance(f, Not):
            return Not(expand(f.operand))
        if isinstance(f, (ForAll, Exists)):
            combos = itertools.product(*(pool(v) for v in f.variables))
            parts = tuple(expand(substitute_formula(
                f.body, dict(zip(f.variables, combo)))) for combo in combos)
            return And(parts) if isinstance(f, ForAll) else Or(parts)
        raise TypeError(f"not a formula: {f!r}")

    return expand(formula)


@dataclass(frozen=True)
class _GroundOp:
    """One grounded operator as the relaxation sees it."""

    cost_literals: Tuple[Literal, ...]
    adds: Tuple[Literal, ...]


def _flat_conjuncts(formula: Formula) -> List[Formula]:
    if isinstance(formula, And):
        out: List[Formula] = []
        for operand in formula.operands:
            out.extend(_flat_conjuncts(operand))
        return out
    return [formula]


def _ground_operators(env: Env, state: State) -> List[_GroundOp]:
    """Typed groundings of every operator, pruned by static facts."""
    domain = env.domain
    objects = sorted(state.objects | domain.constants, key=lambda c: c.name)
    dynamic = set()
    for op in domain.operators:
        effect = op.effect
        outcomes = (effect.outcomes if isinstance(effect, ProbabilisticEffect)
                    else ((None, effect),))
        for _, det in outcomes:
            for lit in det.add | det.delete:
                dynamic.add(lit.predicate.name)

    def is_static(literal: Literal) -> bool:
        return (literal.predicate.name not in dynamic
                and not literal.predicate.is_derived
                and not literal.predicate.is_action_predicate)

    ground_ops: List[_GroundOp] = []
    for op in domain.operators:
        pools = [[o for o in objects
                  if domain.types.is_subtype(o.type, v.type)]
                 for v in op.parameters]
        conjuncts = _flat_conjuncts(op.precondition)
        for combo in itertools.product(*pools):
            sub = dict(zip(op.parameters, combo))
            cost_literals: List[Literal] = []
            dead = False
            for part in conjuncts:
                if isinstance(part, Literal):
                    lit = part.substitute(sub)
                    if lit.predicate.is_action_predicate:
                        continue
                    if not lit.positive or lit.predicate.is_derived:
                        continue  # optimistic: free in the relaxation
                    if is_static(lit) and lit not in state.literals:
                        dead = True
                        break
                    cost_literals.append(lit)
                elif isinstance(part, Equality):
                    if sub.get(part.left, part.left) != sub.get(part.right, part.right):
                        dead = True
                        break
                elif isinstance(part, Not) and isinstance(part.operand, Equality):
                    eq = part.operand
                    if sub.get(eq.left, eq.left) == sub.get(eq.right, eq.right):
                        dead = True
                        break
                # Or/quantifiers cost nothing in the relaxation
            if dead:
                continue
            det = determinize(ground_effect(op.effect, sub, domain.types))
            if not det.add:
                continue
            ground_ops.append(_GroundOp(tuple(cost_literals), tuple(det.add)))
    return ground_ops


class _Heuristic:
    """Additive delete-relaxation cost, grounded once per problem."""

    def __init__(self, env: Env, initial: State) -> None:
        self._env = env
        self._ground_ops = _ground_operators(env, initial)
        self._goal = expand_quantifiers(
            initial.goal, sorted(initial.objects | env.domain.constants,
                                 key=lambda c: c.name), env.domain)

    def _table(self, state: State) -> Dict[Literal, float]:
        cost: Dict[Literal, float] = {lit: 0.0 for lit in state.literals}
        changed = True
        while changed:
            changed = False
            for op in self._ground_ops:
                total = 1.0
                for lit in op.cost_literals:
                    c = cost.get(lit)
                    if c is None:
                        total = INFINITY
                        break
                    total += c
                if total == INFINITY:
                    continue
                for lit in op.adds:
                    if total < cost.get(lit, INFINITY):
                        cost[lit] = total
                        changed = True
        return cost

    def __call__(self, state: State) -> float:
        table = self._table(state)
        env, domain = self._env, self._env.domain

        def formula_cost(f: Formula) -> float:
            if isinstance(f, Literal):
                if f.positive and not f.predicate.is_derived:
                    return table.get(f, INFINITY)
                # negative or derived: exact now-or-one estimate
                return 0.0 if inference.holds(f, state, domain) else 1.0
            if isinstance(f, And):
                return sum(formula_cost(o) for o in f.operands)
            if isinstance(f, Or):
                return min((formula_cost(o) for o in f.operands),
                           default=INFINITY)
            if isinstance(f, Equality):
                return 0.0 if f.left == f.right else INFINITY
            if isinstance(f, Not):
                return 0.0 if inference.holds(f, state, domain) else 1.0
            raise TypeError(f"unexpected goal part: {f!r}")

        return formula_cost(self._goal)


def h_add(state: State, env: Env, goal: Optional[Formula] = None) -> float:
    """One-off additive relaxed cost of ``goal`` (default: the state's own)."""
    if goal is not None:
        state = State(state.literals, state.objects, goal)
    return _Heuristic(env, state)(state)


def plan_gbfs(env: Env, problem_index: int = 0, timeout: float = 30.0) -> Plan:
    """Greedy best-first search on one problem; FIFO among equal h.

    Raises PlanTimeout past the deadline and PlanUnsolvable once the
    reachable determinized space is exhausted.
    """
    started = time.monotonic()
    search_env = env.copy()
    problem = search_env.problems[problem_index]
    objects = problem.objects | search_env.domain.constants
    initial = State(problem.init, objects, problem.goal)
    domain = search_env.domain
    heuristic = _Heuristic(search_env, initial)

    counter = itertools.count()
    open_heap: List[Tuple[float, int, State]] = []
    heapq.heappush(open_heap, (heuristic(initial), next(counter), initial))
    parents: Dict[State, Tuple[Optional[State], Optional[GroundAction]]] = {
        initial: (None, None)}
    expansions = 0
    generated = 1

    def finish(state: State) -> Plan:
        actions: List[GroundAction] = []
        cursor: Optional[State] = state
        while cursor is not None:
            parent, action = parents[cursor]
            if action is not None:
                actions.append(action)
            cursor = parent
        actions.reverse()
        return Plan(tuple(actions), expansions, generated,
                    time.monotonic() - started)

    closed = set()
    while open_heap:
        if time.monotonic() - started > timeout:
            raise PlanTimeout(f"no plan within {timeout} s "
                              f"({expansions} expansions)")
        _, _, state = heapq.heappop(open_heap)
        if state in closed:
            continue
        if inference.holds(state.goal, state, domain):
            return finish(state)
        closed.add(state)
        expansions += 1
        for action, operator, sub in search_env.valid_transitions(state):
            det = determinize(ground_effect(operator.effect, sub, domain.types))
            successor = state.with_literals(
                (state.literals - det.delete) | det.add)
            if successor in parents:
                continue
            parents[successor] = (state, action)
            generated += 1
            heapq.heappush(open_heap,
                           (heuristic(successor), next(counter), successor))
    raise PlanUnsolvable(f"search space exhausted after {expansions} expansions")


def validate_plan(env: Env, plan: Sequence[GroundAction],
                  problem_index: int = 0) -> bool:
    """Execute the plan in a fresh copy; true iff it ends at the goal."""
    runner = env.copy()
    runner.reset_to(problem_index)
    if not plan:
        return runner.goal_holds()
    result = None
    for action in plan:
        result = runner.step(action)
        if result.info["operator"] is None:
            return False
    return result.done and result.reward == 1.0


def write_plan(plan: Plan, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for action in plan.actions:
            f.write(f"{action}\n")


def read_plan(path: str, env: Env, problem_index: int = 0
              ) -> Tuple[GroundAction, ...]:
    problem = env.problems[problem_index]
    objects = problem.objects | env.domain.constants
    actions = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith(";"):
                continue
            actions.append(parse_ground_literal(line, env.domain, objects))
    return tuple(actions)
