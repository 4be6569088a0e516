"""Model values -> canonical PDDL text.

``parse_domain(serialize_domain(d))`` reproduces ``d`` structurally, and
likewise for problems. Set-valued fields are emitted in sorted order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, List

from pddlenv.structs import (ROOT_TYPE, And, DeterministicEffect, Domain,
                             Effect, Equality, Exists, ForAll, Formula,
                             Literal, Not, Operator, Or, ProbabilisticEffect,
                             Problem, Variable)


def format_probability(value: Fraction) -> str:
    """Exact text for a probability: decimal when finite, else ``p/q``."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    text = str(scaled).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def _typed_vars(variables: Iterable[Variable]) -> str:
    return " ".join(f"{v.name} - {v.type}" for v in variables)


def _formula(formula: Formula) -> str:
    if isinstance(formula, Literal):
        return str(formula)
    if isinstance(formula, And):
        return "(and " + " ".join(_formula(o) for o in formula.operands) + ")"
    if isinstance(formula, Or):
        return "(or " + " ".join(_formula(o) for o in formula.operands) + ")"
    if isinstance(formula, Not):
        return f"(not {_formula(formula.operand)})"
    if isinstance(formula, ForAll):
        return f"(forall ({_typed_vars(formula.variables)}) {_formula(formula.body)})"
    if isinstance(formula, Exists):
        return f"(exists ({_typed_vars(formula.variables)}) {_formula(formula.body)})"
    if isinstance(formula, Equality):
        return f"(= {formula.left} {formula.right})"
    raise TypeError(f"not a formula: {formula!r}")


def _det_effect(effect: DeterministicEffect) -> str:
    parts = [str(l) for l in sorted(effect.add, key=str)]
    parts += [f"(not {l})" for l in sorted(effect.delete, key=str)]
    return "(and " + " ".join(parts) + ")"


def _effect(effect: Effect) -> str:
    if isinstance(effect, DeterministicEffect):
        return _det_effect(effect)
    assert isinstance(effect, ProbabilisticEffect)
    pairs = " ".join(f"{format_probability(p)} {_det_effect(e)}"
                     for p, e in effect.outcomes)
    return f"(probabilistic {pairs})"


def _has_conjunct(formula: Formula, literal: Literal) -> bool:
    if isinstance(formula, Literal):
        return formula == literal
    if isinstance(formula, And):
        return any(_has_conjunct(o, literal) for o in formula.operands)
    return False


def _operator(op: Operator) -> str:
    precondition = op.precondition
    if op.action_literal is not None and not _has_conjunct(precondition,
                                                           op.action_literal):
        # synthesized action predicate: restore it as a conjunct so the
        # emitted text parses back to the same matching behavior
        precondition = And((op.action_literal,) + (
            precondition.operands if isinstance(precondition, And)
            else (precondition,)))
    lines = [f"  (:action {op.name}",
             f"    :parameters ({_typed_vars(op.parameters)})",
             f"    :precondition {_formula(precondition)}",
             f"    :effect {_effect(op.effect)})"]
    return "\n".join(lines)


def serialize_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append("  (:requirements " + " ".join(sorted(domain.requirements)) + ")")
    declared = [(name, parent) for name, parent in domain.types.entries
                if name != ROOT_TYPE]
    if declared:
        lines.append("  (:types " + " ".join(f"{n} - {p}" for n, p in declared) + ")")
    if domain.constants:
        consts = sorted(domain.constants, key=lambda c: c.name)
        lines.append("  (:constants " + " ".join(f"{c.name} - {c.type}" for c in consts)
                     + ")")
    if domain.predicates:
        lines.append("  (:predicates")
        for pred in domain.predicates:
            params = " ".join(f"?v{i} - {t}" for i, t in enumerate(pred.param_types))
            inner = f"{pred.name} {params}".rstrip()
            lines.append(f"    ({inner})")
        lines[-1] += ")"
    action_preds = [p.name for p in domain.predicates if p.is_action_predicate]
    if action_preds:
        lines.append("  (:actions " + " ".join(action_preds) + ")")
    for rule in domain.derived:
        head = f"({rule.predicate.name} {_typed_vars(rule.parameters)}".rstrip() + ")"
        lines.append(f"  (:derived {head} {_formula(rule.body)})")
    for op in domain.operators:
        lines.append(_operator(op))
    return "\n".join(lines) + ")\n"


def serialize_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})",
             f"  (:domain {problem.domain_name})"]
    if problem.objects:
        objs = sorted(problem.objects, key=lambda o: o.name)
        lines.append("  (:objects " + " ".join(f"{o.name} - {o.type}" for o in objs) + ")")
    if problem.init:
        lines.append("  (:init")
        for lit in sorted(problem.init, key=str):
            lines.append(f"    {lit}")
        lines[-1] += ")"
    else:
        lines.append("  (:init)")
    lines.append(f"  (:goal {_formula(problem.goal)})")
    return "\n".join(lines) + ")\n"
