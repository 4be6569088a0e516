"""Finite-model query answering over closed-world states.

Two evaluation paths share one contract. Conjunctions of literals and
(in)equalities run through a goal-ordered backtracking matcher with
first-argument indexing; everything else runs through a recursive
evaluator that expands quantifiers over the typed objects. Solutions are
always the same set the brute-force reading would produce: every
type-respecting assignment of the free variables under which the formula
holds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from pddlenv.errors import DeclarationError, StratificationError
from pddlenv.structs import (And, Constant, DerivedPredicate, Domain, Equality,
                             Exists, ForAll, Formula, Literal, Not, Or,
                             Predicate, State, Substitution, Term, Variable,
                             free_variables)


@dataclass(frozen=True)
class Query:
    """A formula, the variables to solve for, and a result mode.

    ``free_vars`` must cover the formula's free variables; variables listed
    but absent from the formula range over all objects of their type.
    ``mode`` is ``all`` (sorted solutions), ``first`` (at most one, the
    lexicographically least), or ``bool`` (an empty substitution marks
    satisfiability).
    """

    formula: Formula
    free_vars: Tuple[Variable, ...]
    mode: str = "all"

    def __post_init__(self) -> None:
        assert self.mode in ("all", "first", "bool"), self.mode
        missing = free_variables(self.formula) - set(self.free_vars)
        if missing:
            names = ", ".join(sorted(v.name for v in missing))
            raise ValueError(f"query omits free variables: {names}")


class _Universe:
    """Indexed view of a state's literals plus the typed object pools."""

    def __init__(self, state: State, domain: Domain,
                 literals: frozenset) -> None:
        self.domain = domain
        self.types = domain.types
        self.objects = tuple(sorted(state.objects | domain.constants,
                                    key=lambda o: o.name))
        self.literals = literals
        self._by_pred: Dict[str, List[Literal]] = {}
        self._by_pred_arg0: Dict[Tuple[str, str], List[Literal]] = {}
        for lit in sorted(literals, key=str):
            self._by_pred.setdefault(lit.predicate.name, []).append(lit)
            if lit.args:
                key = (lit.predicate.name, lit.args[0].name)
                self._by_pred_arg0.setdefault(key, []).append(lit)
        self._pools: Dict[str, Tuple[Constant, ...]] = {}

    def pool(self, type_name: str) -> Tuple[Constant, ...]:
        cached = self._pools.get(type_name)
        if cached is None:
            cached = tuple(o for o in self.objects
                           if self.types.is_subtype(o.type, type_name))
            self._pools[type_name] = cached
        return cached

    def candidates(self, literal: Literal, binding: Substitution) -> List[Literal]:
        first = literal.args[0] if literal.args else None
        if isinstance(first, Variable):
            first = binding.get(first)
        if isinstance(first, Constant):
            return self._by_pred_arg0.get((literal.predicate.name, first.name), [])
        return self._by_pred.get(literal.predicate.name, [])

    def holds_ground(self, literal: Literal) -> bool:
        return literal in self.literals


def _unify(literal: Literal, fact: Literal, binding: Substitution,
           uni: _Universe) -> Optional[Substitution]:
    out = binding
    for pattern, value in zip(literal.args, fact.args):
        if isinstance(pattern, Constant):
            if pattern != value:
                return None
            continue
        bound = out.get(pattern)
        if bound is not None:
            if bound != value:
                return None
            continue
        if not uni.types.is_subtype(value.type, pattern.type):
            return None
        if out is binding:
            out = dict(binding)
        out[pattern] = value
    return dict(out) if out is binding else out


def _term_value(term: Term, binding: Substitution) -> Optional[Constant]:
    if isinstance(term, Constant):
        return term
    return binding.get(term)


def _unbound(formula: Formula, binding: Substitution) -> List[Variable]:
    return sorted((v for v in free_variables(formula) if v not in binding),
                  key=lambda v: v.name)


def _enumerate(variables: Sequence[Variable], binding: Substitution,
               uni: _Universe) -> Iterator[Substitution]:
    pools = [uni.pool(v.type) for v in variables]
    for combo in itertools.product(*pools):
        ext = dict(binding)
        ext.update(zip(variables, combo))
        yield ext


def _is_conjunct(formula: Formula) -> bool:
    return isinstance(formula, (Literal, Equality)) or (
        isinstance(formula, Not) and isinstance(formula.operand, Equality))


def _is_conjunctive(formula: Formula) -> bool:
    if isinstance(formula, And):
        return all(_is_conjunct(op) for op in formula.operands)
    return _is_conjunct(formula)


def _solve_conjuncts(conjuncts: Sequence[Formula], binding: Substitution,
                     uni: _Universe) -> Iterator[Substitution]:
    """Goal-ordered backtracking over literal/equality conjuncts."""
    if not conjuncts:
        yield binding
        return

    # Pick the cheapest conjunct: immediate tests and single-variable
    # equality binders first, then the positive literal with the fewest
    # indexed candidates. Anything else waits until bindings arrive.
    best_idx, best_kind, best_cost = None, None, None
    for idx, conj in enumerate(conjuncts):
        if isinstance(conj, Equality) or (isinstance(conj, Not)
                                          and isinstance(conj.operand, Equality)):
            eq = conj if isinstance(conj, Equality) else conj.operand
            n_unbound = sum(1 for t in (eq.left, eq.right)
                            if isinstance(t, Variable) and t not in binding)
            if n_unbound == 0:
                best_idx, best_kind = idx, "test"
                break
            if n_unbound == 1 and isinstance(conj, Equality):
                best_idx, best_kind = idx, "test"
                break
            continue
        assert isinstance(conj, Literal)
        if conj.positive:
            cost = len(uni.candidates(conj, binding))
            if best_kind != "literal" or cost < best_cost:  # type: ignore[operator]
                best_idx, best_kind, best_cost = idx, "literal", cost
        elif all(v in binding for v in conj.variables):
            best_idx, best_kind = idx, "test"
            break

    if best_idx is None:
        # Only under-bound negatives or inequalities remain; enumerate one
        # variable of the first of them and retry.
        conj = conjuncts[0]
        var = _unbound(conj, binding)[0]
        for ext in _enumerate([var], binding, uni):
            yield from _solve_conjuncts(conjuncts, ext, uni)
        return

    rest = list(conjuncts[:best_idx]) + list(conjuncts[best_idx + 1:])
    conj = conjuncts[best_idx]

    if best_kind == "test":
        for ext in _solve_general(conj, binding, uni):
            yield from _solve_conjuncts(rest, ext, uni)
        return

    assert isinstance(conj, Literal) and conj.positive
    for fact in uni.candidates(conj, binding):
        ext = _unify(conj, fact, binding, uni)
        if ext is not None:
            yield from _solve_conjuncts(rest, ext, uni)


def _operand_rank(formula: Formula) -> int:
    if isinstance(formula, Literal):
        return 0 if formula.positive else 3
    if isinstance(formula, Equality):
        return 1
    if isinstance(formula, (Or, Exists, And)):
        return 2
    return 3


def _solve_general(formula: Formula, binding: Substitution,
                   uni: _Universe) -> Iterator[Substitution]:
    """Yield bindings (possibly partial) under which ``formula`` holds.

    A yielded binding means the formula is true for every type-respecting
    extension over its remaining unbound variables.
    """
    if isinstance(formula, Literal):
        if formula.positive:
            for fact in uni.candidates(formula, binding):
                ext = _unify(formula, fact, binding, uni)
                if ext is not None:
                    yield ext
            return
        unbound = [v for v in formula.variables if v not in binding]
        for ext in _enumerate(sorted(set(unbound), key=lambda v: v.name),
                              binding, uni):
            if not uni.holds_ground(formula.negate().substitute(ext)):
                yield ext
        return

    if isinstance(formula, Equality):
        left = _term_value(formula.left, binding)
        right = _term_value(formula.right, binding)
        if left is not None and right is not None:
            if left == right:
                yield binding
            return
        if left is None and right is None:
            assert isinstance(formula.left, Variable)
            if formula.left == formula.right:
                yield from _enumerate([formula.left], binding, uni)
                return
            for ext in _enumerate([formula.left], binding, uni):
                yield from _solve_general(formula, ext, uni)
            return
        var, value = ((formula.left, right) if left is None else (formula.right, left))
        assert isinstance(var, Variable)
        if uni.types.is_subtype(value.type, var.type):
            ext = dict(binding)
            ext[var] = value
            yield ext
        return

    if isinstance(formula, Not):
        unbound = _unbound(formula.operand, binding)
        for ext in _enumerate(unbound, binding, uni):
            if not _truth(formula.operand, ext, uni):
                yield ext
        return

    if isinstance(formula, And):
        if _is_conjunctive(formula):
            yield from _solve_conjuncts(formula.operands, binding, uni)
            return
        operands = sorted(formula.operands, key=_operand_rank)

        def chain(i: int, b: Substitution) -> Iterator[Substitution]:
            if i == len(operands):
                yield b
                return
            for ext in _solve_general(operands[i], b, uni):
                yield from chain(i + 1, ext)

        yield from chain(0, binding)
        return

    if isinstance(formula, Or):
        seen = set()
        for operand in formula.operands:
            for ext in _solve_general(operand, binding, uni):
                key = frozenset(ext.items())
                if key not in seen:
                    seen.add(key)
                    yield ext
        return

    if isinstance(formula, Exists):
        seen = set()
        for ext in _solve_general(formula.body, binding, uni):
            # a quantified variable the body never bound still needs a witness
            if any(v not in ext and not uni.pool(v.type)
                   for v in formula.variables):
                continue
            out = {v: c for v, c in ext.items() if v not in formula.variables}
            key = frozenset(out.items())
            if key not in seen:
                seen.add(key)
                yield out
        return

    if isinstance(formula, ForAll):
        unbound = _unbound(formula, binding)
        for ext in _enumerate(unbound, binding, uni):
            if _truth(formula, ext, uni):
                yield ext
        return

    raise TypeError(f"not a formula: {formula!r}")


def _truth(formula: Formula, binding: Substitution, uni: _Universe) -> bool:
    """Boolean evaluation; ``binding`` must cover the formula's free variables."""
    if isinstance(formula, Literal):
        ground = formula.substitute(binding)
        if formula.positive:
            return uni.holds_ground(ground)
        return not uni.holds_ground(ground.negate())
    if isinstance(formula, Equality):
        return _term_value(formula.left, binding) == _term_value(formula.right, binding)
    if isinstance(formula, And):
        return all(_truth(op, binding, uni) for op in formula.operands)
    if isinstance(formula, Or):
        return any(_truth(op, binding, uni) for op in formula.operands)
    if isinstance(formula, Not):
        return not _truth(formula.operand, binding, uni)
    if isinstance(formula, (ForAll, Exists)):
        combos = _enumerate(formula.variables, binding, uni)
        results = (_truth(formula.body, ext, uni) for ext in combos)
        return all(results) if isinstance(formula, ForAll) else any(results)
    raise TypeError(f"not a formula: {formula!r}")


def _check_declared(formula: Formula, domain: Domain) -> None:
    if isinstance(formula, Literal):
        declared = domain.predicate_map.get(formula.predicate.name)
        if declared is None:
            raise DeclarationError(f"unknown predicate '{formula.predicate.name}'")
        if declared != formula.predicate:
            raise DeclarationError(
                f"predicate '{formula.predicate.name}' does not match its declaration")
    elif isinstance(formula, (And, Or)):
        for op in formula.operands:
            _check_declared(op, domain)
    elif isinstance(formula, Not):
        _check_declared(formula.operand, domain)
    elif isinstance(formula, (ForAll, Exists)):
        _check_declared(formula.body, domain)


def _universe(state: State, domain: Domain) -> _Universe:
    literals = state.literals
    if domain.derived:
        literals = literals | derived_closure(state, domain)
    return _Universe(state, domain, literals)


def find_assignments(query: Query, state: State, domain: Domain,
                     path: str = "auto") -> List[Substitution]:
    """All (or the first, per ``query.mode``) satisfying assignments.

    Results are deterministic: sorted lexicographically by object name
    following ``query.free_vars`` order. ``path`` forces the conjunctive
    fast path or the general evaluator; ``auto`` picks per formula.
    """
    assert path in ("auto", "fast", "general"), path
    _check_declared(query.formula, domain)
    uni = _universe(state, domain)

    use_fast = _is_conjunctive(query.formula) if path == "auto" else path == "fast"
    if use_fast:
        if not _is_conjunctive(query.formula):
            raise ValueError("fast path requires a conjunction of literals")
        conjuncts = (query.formula.operands if isinstance(query.formula, And)
                     else (query.formula,))
        raw = _solve_conjuncts(conjuncts, {}, uni)
    else:
        raw = _solve_general(query.formula, {}, uni)

    if query.mode == "bool":
        for partial in raw:
            if all(partial.get(v) is not None or uni.pool(v.type)
                   for v in query.free_vars):
                return [{}]
        return []

    solutions = set()
    for partial in raw:
        missing = [v for v in query.free_vars if v not in partial]
        pools = [uni.pool(v.type) for v in missing]
        for combo in itertools.product(*pools):
            full = dict(partial)
            full.update(zip(missing, combo))
            solutions.add(tuple(full[v] for v in query.free_vars))
    ordered = sorted(solutions, key=lambda combo: tuple(c.name for c in combo))
    if query.mode == "first":
        ordered = ordered[:1]
    return [dict(zip(query.free_vars, combo)) for combo in ordered]


def holds(formula: Formula, state: State, domain: Domain) -> bool:
    """Closed-world truth of a formula with no free variables."""
    free = free_variables(formula)
    if free:
        names = ", ".join(sorted(v.name for v in free))
        raise ValueError(f"holds() requires a closed formula; free: {names}")
    _check_declared(formula, domain)
    return _truth(formula, {}, _universe(state, domain))


def _polarity_deps(formula: Formula, positive: bool,
                   out: List[Tuple[str, bool]]) -> None:
    if isinstance(formula, Literal):
        if formula.predicate.is_derived:
            out.append((formula.predicate.name, positive == formula.positive))
    elif isinstance(formula, (And, Or)):
        for op in formula.operands:
            _polarity_deps(op, positive, out)
    elif isinstance(formula, Not):
        _polarity_deps(formula.operand, not positive, out)
    elif isinstance(formula, (ForAll, Exists)):
        _polarity_deps(formula.body, positive, out)


@lru_cache(maxsize=None)
def stratify(domain: Domain) -> Tuple[Tuple[DerivedPredicate, ...], ...]:
    """Group derived rules into strata; recursion through negation is an error."""
    if not domain.derived:
        return ()
    heads = sorted(domain.derived_rules)
    deps: Dict[str, List[Tuple[str, bool]]] = {h: [] for h in heads}
    for rule in domain.derived:
        _polarity_deps(rule.body, True, deps[rule.predicate.name])

    # Tarjan's strongly connected components over the dependency graph.
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack: Dict[str, bool] = {}
    stack: List[str] = []
    components: List[Tuple[str, ...]] = []
    counter = itertools.count()

    def connect(node: str) -> None:
        index[node] = low[node] = next(counter)
        stack.append(node)
        on_stack[node] = True
        for dep, _ in deps[node]:
            if dep not in index:
                connect(dep)
                low[node] = min(low[node], low[dep])
            elif on_stack.get(dep):
                low[node] = min(low[node], index[dep])
        if low[node] == index[node]:
            component = []
            while True:
                top = stack.pop()
                on_stack[top] = False
                component.append(top)
                if top == node:
                    break
            components.append(tuple(sorted(component)))

    for head in heads:
        if head not in index:
            connect(head)

    member: Dict[str, Tuple[str, ...]] = {}
    for component in components:
        for name in component:
            member[name] = component

    for rule in domain.derived:
        head = rule.predicate.name
        for dep, positive in deps[head]:
            if not positive and member[dep] is member[head]:
                raise StratificationError(
                    f"derived predicate '{dep}' is negated within its own "
                    f"recursive stratum (via '{head}')")

    # Tarjan emits components in dependency order already: every edge out
    # of a component lands in an earlier-emitted one.
    strata = []
    for component in components:
        rules = tuple(r for r in domain.derived if r.predicate.name in component)
        strata.append(rules)
    return tuple(strata)


def derived_closure(state: State, domain: Domain) -> frozenset:
    """Least fixpoint of the derived rules over the state's base literals."""
    if not domain.derived:
        return frozenset()
    strata = stratify(domain)
    atoms: set = set()
    for rules in strata:
        while True:
            uni = _Universe(state, domain, state.literals | frozenset(atoms))
            added = False
            for rule in rules:
                # Parameters missing from the body range over their typed pools.
                for partial in _solve_general(rule.body, {}, uni):
                    missing = [v for v in rule.parameters if v not in partial]
                    pools = [uni.pool(v.type) for v in missing]
                    for combo in itertools.product(*pools):
                        full = dict(partial)
                        full.update(zip(missing, combo))
                        atom = Literal(rule.predicate,
                                       tuple(full[v] for v in rule.parameters))
                        if atom not in atoms:
                            atoms.add(atom)
                            added = True
            if not added:
                break
    return frozenset(atoms)
