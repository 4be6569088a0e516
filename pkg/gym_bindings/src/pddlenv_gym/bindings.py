"""Gym-style bindings: reset/step handles and registration by name.

Every transition delegates to the wrapped engine environment; the binding
adds only the conventional surface (``reset``, ``step``, ``action_space``,
``observation_space``) and observation values that mirror engine states.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from pddlenv import (Constant, DeadEndError, Domain, Env, Formula,
                     GroundAction, Literal, State, list_envs, load_env)

__all__ = ["BoundObservation", "LiteralActionSpace", "PDDLEnv",
           "StateObservationSpace", "make", "parity_trace", "registered_ids"]


@dataclass(frozen=True)
class BoundObservation:
    """An engine state mirrored as plain immutable values.

    ``objects`` holds (name, type) pairs, ``literals`` holds
    (predicate, argument...) tuples, and ``goal`` keeps the engine's
    immutable formula value. Conversion back via :meth:`to_state` is
    lossless.
    """

    objects: FrozenSet[Tuple[str, str]]
    literals: FrozenSet[Tuple[str, ...]]
    goal: Formula

    @classmethod
    def from_state(cls, state: State) -> BoundObservation:
        objects = frozenset((c.name, c.type) for c in state.objects)
        literals = frozenset(
            (lit.predicate.name,) + tuple(a.name for a in lit.args)
            for lit in state.literals)
        return cls(objects, literals, state.goal)

    def to_state(self, domain: Domain) -> State:
        """The engine state this observation mirrors."""
        predicates = dict(domain.predicate_map)
        predicates.update({r.predicate.name: r.predicate
                           for r in domain.derived})
        types = {name: type_name for name, type_name in self.objects}
        objects = frozenset(Constant(name, type_name)
                            for name, type_name in self.objects)
        literals = frozenset(
            Literal(predicates[head], tuple(Constant(a, types[a])
                                            for a in args))
            for head, *args in self.literals)
        return State(literals, objects, self.goal)

    def object_strs(self) -> Tuple[str, ...]:
        return tuple(sorted(f"{name} - {type_name}"
                            for name, type_name in self.objects))

    def literal_strs(self) -> Tuple[str, ...]:
        return tuple(sorted("(" + " ".join(parts) + ")"
                            for parts in self.literals))

    def goal_str(self) -> str:
        return str(self.goal)


class LiteralActionSpace:
    """The wrapped environment's action set, sampled through its own rules."""

    def __init__(self, engine: Env) -> None:
        self._engine = engine
        self._rng = random.Random()

    def seed(self, seed: Optional[int] = None) -> None:
        self._rng = random.Random(seed)

    def sample(self) -> GroundAction:
        return self._engine.sample_action(rng=self._rng)

    def contains(self, action: GroundAction) -> bool:
        if self._engine.config.dynamic_action_space:
            return action in self._engine.enumerate_valid_actions()
        return action in self._engine.all_ground_actions()

    __contains__ = contains


class StateObservationSpace:
    """Observations whose literal arguments name the episode's objects."""

    def __init__(self, engine: Env) -> None:
        self._engine = engine

    def contains(self, observation: BoundObservation) -> bool:
        if not isinstance(observation, BoundObservation):
            return False
        names = {name for name, _ in observation.objects}
        return all(set(parts[1:]) <= names for parts in observation.literals)

    __contains__ = contains


class PDDLEnv:
    """A reset/step handle over one engine environment.

    Not thread-safe: use one handle per thread. Handles share nothing.
    """

    def __init__(self, engine: Env) -> None:
        self._engine = engine
        self.action_space = LiteralActionSpace(engine)
        self.observation_space = StateObservationSpace(engine)

    @property
    def engine(self) -> Env:
        return self._engine

    def reset(self) -> Tuple[BoundObservation, Dict]:
        state, info = self._engine.reset()
        return BoundObservation.from_state(state), dict(info)

    def step(self, action: Union[GroundAction, str]
             ) -> Tuple[BoundObservation, float, bool, Dict]:
        if isinstance(action, str):
            action = self._engine.parse_action(action)
        result = self._engine.step(action)
        return (BoundObservation.from_state(result.observation),
                result.reward, result.done, dict(result.info))

    def close(self) -> None:
        pass


def _camel(name: str) -> str:
    return "".join(part.capitalize() for part in name.split("_"))


_REGISTRY: Dict[str, Tuple[str, bool]] = {}
for _name in list_envs():
    _REGISTRY[f"PDDLEnv{_camel(_name)}-v0"] = (_name, False)
    _REGISTRY[f"PDDLEnv{_camel(_name)}Test-v0"] = (_name, True)


def registered_ids() -> Tuple[str, ...]:
    """All registration strings, sorted."""
    return tuple(sorted(_REGISTRY))


def make(name: str, test: bool = False,
         seed: Optional[int] = None) -> PDDLEnv:
    """A bound environment for a catalog name or registration string.

    Registration strings carry their own split, so ``test`` only applies
    to plain catalog names.
    """
    if name in _REGISTRY:
        name, test = _REGISTRY[name]
    elif name not in list_envs():
        raise KeyError(f"unknown environment '{name}'")
    return PDDLEnv(load_env(name, test=test, seed=seed))


Step = Tuple[str, BoundObservation, float, bool]
Trace = List[Union[Step, Tuple[str, BoundObservation]]]


def _bound_trace(env: PDDLEnv, seed: int, n_steps: int) -> Trace:
    env.action_space.seed(seed)
    out: Trace = []
    observation, _ = env.reset()
    out.append(("reset", observation))
    for _ in range(n_steps):
        try:
            action = env.action_space.sample()
        except DeadEndError:
            observation, _ = env.reset()
            out.append(("reset", observation))
            continue
        observation, reward, done, info = env.step(action)
        out.append((str(action), observation, reward, done))
        if done or info.get("truncated"):
            observation, _ = env.reset()
            out.append(("reset", observation))
    return out


def _engine_trace(env: Env, seed: int, n_steps: int) -> Trace:
    policy = random.Random(seed)
    out: Trace = []
    state, _ = env.reset()
    out.append(("reset", BoundObservation.from_state(state)))
    for _ in range(n_steps):
        try:
            action = env.sample_action(rng=policy)
        except DeadEndError:
            state, _ = env.reset()
            out.append(("reset", BoundObservation.from_state(state)))
            continue
        result = env.step(action)
        out.append((str(action), BoundObservation.from_state(result.observation),
                    result.reward, result.done))
        if result.done or result.info.get("truncated"):
            state, _ = env.reset()
            out.append(("reset", BoundObservation.from_state(state)))
    return out


def parity_trace(name: str, seed: int, n_steps: int = 100) -> bool:
    """True iff a seeded random run matches through binding and engine.

    Both sides draw the same policy stream and compare full
    action/observation/reward/done sequences, including resets.
    """
    bound = make(name, seed=seed)
    engine = load_env(name, seed=seed)
    return _bound_trace(bound, seed, n_steps) == _engine_trace(engine, seed,
                                                               n_steps)
