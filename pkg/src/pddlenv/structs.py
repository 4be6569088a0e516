"""Immutable relational model: types, terms, literals, formulas, effects,
operators, domains, problems, and states."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

from pddlenv.errors import DeclarationError, GroundingError, TypingError

ROOT_TYPE = "object"

# Tolerance on the probabilistic-effect sum check.
PROBABILITY_EPSILON = Fraction(1, 10**9)


@dataclass(frozen=True)
class TypeHierarchy:
    """A forest of type names rooted at ``object``.

    ``entries`` maps each declared type to its parent (``None`` only for
    ``object``). Entries are normalized to sorted order so equality is
    independent of declaration order.
    """

    entries: Tuple[Tuple[str, Optional[str]], ...]

    def __post_init__(self) -> None:
        parents = dict(self.entries)
        if len(parents) != len(self.entries):
            raise DeclarationError("duplicate type declaration")
        parents.setdefault(ROOT_TYPE, None)
        if parents[ROOT_TYPE] is not None:
            raise DeclarationError(f"type '{ROOT_TYPE}' cannot have a parent")
        for name, parent in parents.items():
            if parent is not None and parent not in parents:
                raise DeclarationError(f"parent type '{parent}' of '{name}' is not declared")
        # Cycle check: walk each parent chain, which must end at the root.
        for name in parents:
            seen = set()
            cur: Optional[str] = name
            while cur is not None:
                if cur in seen:
                    raise DeclarationError(f"type hierarchy contains a cycle through '{cur}'")
                seen.add(cur)
                cur = parents[cur]
        object.__setattr__(self, "entries", tuple(sorted(parents.items())))

    @classmethod
    def from_mapping(cls, parents: Mapping[str, Optional[str]]) -> TypeHierarchy:
        return cls(tuple(parents.items()))

    @cached_property
    def _parent_map(self) -> Dict[str, Optional[str]]:
        return dict(self.entries)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self._parent_map

    def parent(self, name: str) -> Optional[str]:
        if name not in self._parent_map:
            raise DeclarationError(f"unknown type '{name}'")
        return self._parent_map[name]

    def is_subtype(self, child: str, parent: str) -> bool:
        """Reflexive-transitive subtype test over the parent chains."""
        if parent not in self._parent_map:
            raise DeclarationError(f"unknown type '{parent}'")
        cur: Optional[str] = child
        if cur not in self._parent_map:
            raise DeclarationError(f"unknown type '{child}'")
        while cur is not None:
            if cur == parent:
                return True
            cur = self._parent_map[cur]
        return False


EMPTY_HIERARCHY = TypeHierarchy(())


def is_subtype(child: str, parent: str, hierarchy: TypeHierarchy) -> bool:
    return hierarchy.is_subtype(child, parent)


@dataclass(frozen=True)
class Variable:
    """A typed variable. Names always start with ``?``."""

    name: str
    type: str = ROOT_TYPE

    def __post_init__(self) -> None:
        assert self.name.startswith("?"), f"variable names start with '?': {self.name}"

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{self.name}:{self.type}"


@dataclass(frozen=True)
class Constant:
    """A typed object name."""

    name: str
    type: str = ROOT_TYPE

    def __post_init__(self) -> None:
        assert not self.name.startswith("?"), f"object names cannot start with '?': {self.name}"

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{self.name}:{self.type}"


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class Predicate:
    """A named relation with declared parameter types.

    At most one of ``is_action_predicate`` and ``is_derived`` may be set.
    """

    name: str
    param_types: Tuple[str, ...] = ()
    is_action_predicate: bool = False
    is_derived: bool = False

    def __post_init__(self) -> None:
        if self.is_action_predicate and self.is_derived:
            raise DeclarationError(
                f"predicate '{self.name}' cannot be both an action predicate and derived")

    @property
    def arity(self) -> int:
        return len(self.param_types)

    def __call__(self, *args: Term) -> Literal:
        return Literal(self, tuple(args))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Literal:
    """A predicate applied to terms, with a polarity."""

    predicate: Predicate
    args: Tuple[Term, ...]
    positive: bool = True

    def __post_init__(self) -> None:
        if len(self.args) != self.predicate.arity:
            raise TypingError(
                f"'{self.predicate.name}' expects {self.predicate.arity} "
                f"arguments, got {len(self.args)}")

    @cached_property
    def _str(self) -> str:
        inner = self.predicate.name
        if self.args:
            inner += " " + " ".join(str(a) for a in self.args)
        if self.positive:
            return f"({inner})"
        return f"(not ({inner}))"

    @cached_property
    def _hash(self) -> int:
        return hash((self.predicate, self.args, self.positive))

    def __str__(self) -> str:
        return self._str

    def __repr__(self) -> str:
        return self._str

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Literal):
            return NotImplemented
        return (self.positive == other.positive and self.predicate == other.predicate
                and self.args == other.args)

    @cached_property
    def is_ground(self) -> bool:
        return all(isinstance(a, Constant) for a in self.args)

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return tuple(a for a in self.args if isinstance(a, Variable))

    def negate(self) -> Literal:
        return Literal(self.predicate, self.args, not self.positive)

    def substitute(self, sub: "Substitution",
                   hierarchy: Optional[TypeHierarchy] = None) -> Literal:
        return apply_substitution(self, sub, hierarchy)


@dataclass(frozen=True)
class And:
    operands: Tuple["Formula", ...]

    def __str__(self) -> str:
        return "(and " + " ".join(str(o) for o in self.operands) + ")"


@dataclass(frozen=True)
class Or:
    operands: Tuple["Formula", ...]

    def __str__(self) -> str:
        return "(or " + " ".join(str(o) for o in self.operands) + ")"


@dataclass(frozen=True)
class Not:
    operand: "Formula"

    def __str__(self) -> str:
        return f"(not {self.operand})"


@dataclass(frozen=True)
class ForAll:
    variables: Tuple[Variable, ...]
    body: "Formula"

    def __str__(self) -> str:
        decl = " ".join(f"{v} - {v.type}" for v in self.variables)
        return f"(forall ({decl}) {self.body})"


@dataclass(frozen=True)
class Exists:
    variables: Tuple[Variable, ...]
    body: "Formula"

    def __str__(self) -> str:
        decl = " ".join(f"{v} - {v.type}" for v in self.variables)
        return f"(exists ({decl}) {self.body})"


@dataclass(frozen=True)
class Equality:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"(= {self.left} {self.right})"


Formula = Union[Literal, And, Or, Not, ForAll, Exists, Equality]

TRUE = And(())

Substitution = Dict[Variable, Constant]


def free_variables(formula: Formula) -> frozenset:
    """All variables of ``formula`` not bound by a quantifier."""
    if isinstance(formula, Literal):
        return frozenset(formula.variables)
    if isinstance(formula, Equality):
        return frozenset(t for t in (formula.left, formula.right) if isinstance(t, Variable))
    if isinstance(formula, (And, Or)):
        out: frozenset = frozenset()
        for op in formula.operands:
            out |= free_variables(op)
        return out
    if isinstance(formula, Not):
        return free_variables(formula.operand)
    if isinstance(formula, (ForAll, Exists)):
        return free_variables(formula.body) - frozenset(formula.variables)
    raise TypeError(f"not a formula: {formula!r}")


def _substitute_term(term: Term, sub: Substitution) -> Term:
    if isinstance(term, Variable):
        return sub.get(term, term)
    return term


def apply_substitution(literal: Literal, sub: Substitution,
                       hierarchy: Optional[TypeHierarchy] = None) -> Literal:
    """Replace variables in ``literal`` by their images under ``sub``.

    When ``hierarchy`` is given, every binding used is checked to respect
    the variable's declared type. Idempotent on ground literals.
    """
    if hierarchy is not None:
        for var, obj in sub.items():
            if not hierarchy.is_subtype(obj.type, var.type):
                raise TypingError(
                    f"cannot bind {var!r} to {obj!r}: '{obj.type}' is not a "
                    f"subtype of '{var.type}'")
    if literal.is_ground:
        return literal
    return Literal(literal.predicate,
                   tuple(_substitute_term(a, sub) for a in literal.args),
                   literal.positive)


def substitute_formula(formula: Formula, sub: Substitution) -> Formula:
    """Apply ``sub`` throughout a formula. Quantified variables shadow it."""
    if not sub:
        return formula
    if isinstance(formula, Literal):
        return apply_substitution(formula, sub)
    if isinstance(formula, Equality):
        return Equality(_substitute_term(formula.left, sub),
                        _substitute_term(formula.right, sub))
    if isinstance(formula, And):
        return And(tuple(substitute_formula(o, sub) for o in formula.operands))
    if isinstance(formula, Or):
        return Or(tuple(substitute_formula(o, sub) for o in formula.operands))
    if isinstance(formula, Not):
        return Not(substitute_formula(formula.operand, sub))
    if isinstance(formula, (ForAll, Exists)):
        inner = {v: c for v, c in sub.items() if v not in formula.variables}
        body = substitute_formula(formula.body, inner)
        return type(formula)(formula.variables, body)
    raise TypeError(f"not a formula: {formula!r}")


def all_groundings(predicate: Predicate, objects: frozenset,
                   hierarchy: TypeHierarchy) -> frozenset:
    """Every positive ground literal of ``predicate`` over typed ``objects``."""
    pools = []
    for ptype in predicate.param_types:
        pool = sorted((o for o in objects if hierarchy.is_subtype(o.type, ptype)),
                      key=lambda o: o.name)
        if not pool:
            return frozenset()
        pools.append(pool)
    if not pools:
        return frozenset({Literal(predicate, ())})
    return frozenset(Literal(predicate, combo) for combo in itertools.product(*pools))


@dataclass(frozen=True)
class DeterministicEffect:
    """Add and delete sets of positive literals. The sets never overlap."""

    add: frozenset
    delete: frozenset

    def __post_init__(self) -> None:
        for lit in itertools.chain(self.add, self.delete):
            if not lit.positive:
                raise ValueError(f"effect sets hold positive literals only: {lit}")
        if self.add & self.delete:
            clash = sorted(str(l) for l in self.add & self.delete)
            raise ValueError(f"literal both added and deleted: {', '.join(clash)}")

    @property
    def is_trivial(self) -> bool:
        return not self.add and not self.delete

    @cached_property
    def is_ground(self) -> bool:
        return all(l.is_ground for l in itertools.chain(self.add, self.delete))


EMPTY_EFFECT = DeterministicEffect(frozenset(), frozenset())


@dataclass(frozen=True)
class ProbabilisticEffect:
    """A distribution over deterministic outcomes.

    Probabilities may sum to less than 1; the residual mass is the trivial
    (empty) outcome, reported with index -1 when sampled.
    """

    outcomes: Tuple[Tuple[Fraction, DeterministicEffect], ...]

    def __post_init__(self) -> None:
        total = Fraction(0)
        for prob, _ in self.outcomes:
            if prob < 0 or prob > 1:
                raise ValueError(f"outcome probability out of [0, 1]: {prob}")
            total += prob
        if total > 1 + PROBABILITY_EPSILON:
            raise ValueError(f"outcome probabilities sum to {total} > 1")

    @property
    def residual(self) -> Fraction:
        return max(Fraction(0), 1 - sum(p for p, _ in self.outcomes))

    @cached_property
    def is_ground(self) -> bool:
        return all(e.is_ground for _, e in self.outcomes)


Effect = Union[DeterministicEffect, ProbabilisticEffect]


def ground_effect(effect: Effect, sub: Substitution,
                  hierarchy: Optional[TypeHierarchy] = None) -> Effect:
    """Ground every literal in ``effect`` under ``sub``.

    ``sub`` must bind every variable occurring in the effect. If grounding
    makes an add and a delete coincide, the delete is dropped (adds win,
    matching successor-set semantics where deletes apply first).
    """

    def ground_det(det: DeterministicEffect) -> DeterministicEffect:
        add = frozenset(apply_substitution(l, sub, hierarchy) for l in det.add)
        delete = frozenset(apply_substitution(l, sub, hierarchy) for l in det.delete)
        for lit in itertools.chain(add, delete):
            if not lit.is_ground:
                raise GroundingError(f"effect literal left unbound variables: {lit}")
        return DeterministicEffect(add, delete - add)

    if isinstance(effect, DeterministicEffect):
        return ground_det(effect)
    return ProbabilisticEffect(tuple((p, ground_det(e)) for p, e in effect.outcomes))


@dataclass(frozen=True)
class Operator:
    """A lifted transition schema.

    ``action_literal`` is the distinguished positive precondition literal
    whose predicate names this operator in the action space; it is ``None``
    for domains that rely on whole-operator actions.
    """

    name: str
    parameters: Tuple[Variable, ...]
    precondition: Formula
    effect: Effect
    action_literal: Optional[Literal] = None

    @property
    def action_predicate(self) -> Optional[Predicate]:
        return None if self.action_literal is None else self.action_literal.predicate

    @property
    def free_parameters(self) -> Tuple[Variable, ...]:
        """Parameters exposed in the action space."""
        if self.action_literal is None:
            return self.parameters
        return tuple(self.action_literal.args)  # type: ignore[arg-type]


@dataclass(frozen=True)
class DerivedPredicate:
    """One rule for a derived predicate: head parameters and a body formula."""

    predicate: Predicate
    parameters: Tuple[Variable, ...]
    body: Formula


@dataclass(frozen=True)
class Domain:
    """A parsed PDDL domain."""

    name: str
    requirements: frozenset
    types: TypeHierarchy
    constants: frozenset
    predicates: Tuple[Predicate, ...]
    operators: Tuple[Operator, ...]
    derived: Tuple[DerivedPredicate, ...] = ()

    def __post_init__(self) -> None:
        pred_names = [p.name for p in self.predicates]
        if len(set(pred_names)) != len(pred_names):
            raise DeclarationError(f"duplicate predicate declarations in '{self.name}'")
        op_names = [o.name for o in self.operators]
        if len(set(op_names)) != len(op_names):
            raise DeclarationError(f"duplicate operator declarations in '{self.name}'")

    @cached_property
    def _hash(self) -> int:
        return hash((self.name, self.requirements, self.types, self.constants,
                     self.predicates, self.operators, self.derived))

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def predicate_map(self) -> Dict[str, Predicate]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def operator_map(self) -> Dict[str, Operator]:
        return {o.name: o for o in self.operators}

    @property
    def action_predicates(self) -> Tuple[Predicate, ...]:
        return tuple(p for p in self.predicates if p.is_action_predicate)

    @cached_property
    def derived_rules(self) -> Dict[str, Tuple[DerivedPredicate, ...]]:
        out: Dict[str, list] = {}
        for rule in self.derived:
            out.setdefault(rule.predicate.name, []).append(rule)
        return {name: tuple(rules) for name, rules in out.items()}


@dataclass(frozen=True)
class Problem:
    """A parsed PDDL problem: objects, initial literals, and a goal."""

    name: str
    domain_name: str
    objects: frozenset
    init: frozenset
    goal: Formula

    @cached_property
    def _hash(self) -> int:
        return hash((self.name, self.domain_name, self.objects, self.init, self.goal))

    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class State:
    """A closed-world state: objects, positive ground literals, and the goal."""

    literals: frozenset
    objects: frozenset
    goal: Formula

    def __post_init__(self) -> None:
        for lit in self.literals:
            if not lit.positive or not lit.is_ground:
                raise ValueError(f"states hold positive ground literals only: {lit}")

    @cached_property
    def _hash(self) -> int:
        return hash((self.literals, self.objects, self.goal))

    def __hash__(self) -> int:
        return self._hash

    def with_literals(self, literals: frozenset) -> State:
        return State(literals, self.objects, self.goal)


# A ground action is a positive ground literal of an action predicate.
GroundAction = Literal
