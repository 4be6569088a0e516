"""PDDL text -> model values.

Supported grammar: STRIPS operators, hierarchical typing, equality,
``and``/``or``/``not``/``forall``/``exists`` in preconditions and goals,
``:constants``, ``:derived`` predicates, and flat ``probabilistic`` effects.
An ``(:actions name ...)`` section marks declared predicates as action
predicates; each operator precondition must then contain exactly one
positive literal of exactly one of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pddlenv import inference
from pddlenv.errors import DeclarationError, ParseError, SourceSpan, StratificationError
from pddlenv.structs import (ROOT_TYPE, And, Constant, DerivedPredicate,
                             DeterministicEffect, Domain, Effect, Equality,
                             Exists, ForAll, Formula, Literal, Not, Operator,
                             Or, Predicate, ProbabilisticEffect, Problem,
                             Term, TypeHierarchy, Variable, free_variables)

MAX_NESTING_DEPTH = 256

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-_?:=./")

# Requirement flags that announce constructs this parser cannot handle.
_REJECTED_REQUIREMENTS = frozenset({
    ":action-costs", ":fluents", ":numeric-fluents", ":durative-actions",
    ":time", ":continuous-effects",
})

_UNSUPPORTED_HEADS = frozenset({"when", "either", "imply", "increase",
                                "decrease", "assign", "scale-up", "scale-down"})


@dataclass(frozen=True)
class Token:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class SList:
    items: Tuple["SExpr", ...]
    span: SourceSpan


SExpr = Union[Token, SList]


def _err(kind: str, message: str, span: Optional[SourceSpan]) -> ParseError:
    return ParseError(kind, message, span)


def tokenize(text: str, label: str = "<string>") -> List[Token]:
    """Split ``text`` into parens and lowercased words, tracking positions."""
    tokens: List[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(Token(ch, SourceSpan(label, line, col)))
            col += 1
            i += 1
        else:
            start = i
            span = SourceSpan(label, line, col)
            while i < n and text[i] not in " \t\r\n();":
                if text[i].lower() not in _WORD_CHARS:
                    raise _err("lex", f"illegal character {text[i]!r}",
                               SourceSpan(label, line, col + (i - start)))
                i += 1
            tokens.append(Token(text[start:i].lower(), span))
            col += i - start
    return tokens


def _read_sexprs(tokens: Sequence[Token], label: str) -> List[SExpr]:
    out: List[SExpr] = []
    pos = 0

    def read(depth: int) -> SExpr:
        nonlocal pos
        if depth > MAX_NESTING_DEPTH:
            raise _err("syntax", "maximum nesting depth exceeded", tokens[pos].span)
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items: List[SExpr] = []
            while True:
                if pos >= len(tokens):
                    raise _err("syntax", "unclosed '('", tok.span)
                if tokens[pos].text == ")":
                    pos += 1
                    return SList(tuple(items), tok.span)
                items.append(read(depth + 1))
        if tok.text == ")":
            raise _err("syntax", "unbalanced ')'", tok.span)
        return tok

    while pos < len(tokens):
        out.append(read(0))
    if not out:
        raise _err("syntax", "empty input", SourceSpan(label, 1, 1))
    return out


def _read_one(text: str, label: str) -> SList:
    forms = _read_sexprs(tokenize(text, label), label)
    if len(forms) > 1:
        span = forms[1].span if isinstance(forms[1], SList) else forms[1].span
        raise _err("syntax", "trailing content after the first form", span)
    form = forms[0]
    if not isinstance(form, SList):
        raise _err("syntax", "expected a parenthesized form", form.span)
    return form


def _expect_word(sx: SExpr, what: str) -> Token:
    if not isinstance(sx, Token):
        raise _err("syntax", f"expected {what}", sx.span)
    return sx


def _is_number(text: str) -> bool:
    return bool(text) and (text[0].isdigit() or (text[0] == "." and len(text) > 1))


def _parse_typed_names(items: Sequence[SExpr], types: Optional[TypeHierarchy],
                       what: str) -> List[Tuple[Token, str]]:
    """Parse ``name ... - type name ... - type ...`` lists.

    Names with no trailing type default to ``object``. When ``types`` is
    given, every mentioned type must be declared in it.
    """
    out: List[Tuple[Token, str]] = []
    pending: List[Token] = []
    i = 0
    while i < len(items):
        tok = _expect_word(items[i], f"a name in {what}")
        if tok.text == "-":
            if not pending:
                raise _err("syntax", f"'-' with nothing to type in {what}", tok.span)
            if i + 1 >= len(items):
                raise _err("syntax", f"'-' with no type in {what}", tok.span)
            type_sx = items[i + 1]
            if (isinstance(type_sx, SList) and type_sx.items
                    and isinstance(type_sx.items[0], Token)
                    and type_sx.items[0].text == "either"):
                raise _err("unsupported-feature",
                           "'either' types are not supported", type_sx.span)
            type_tok = _expect_word(type_sx, "a type name")
            if types is not None and type_tok.text not in types:
                raise _err("declaration", f"unknown type '{type_tok.text}'", type_tok.span)
            out.extend((name, type_tok.text) for name in pending)
            pending = []
            i += 2
        else:
            pending.append(tok)
            i += 1
    if pending and types is not None and ROOT_TYPE not in types:
        raise _err("declaration", f"unknown type '{ROOT_TYPE}'", pending[0].span)
    out.extend((name, ROOT_TYPE) for name in pending)
    return out


def _parse_variable_list(items: Sequence[SExpr], types: TypeHierarchy,
                         what: str) -> List[Variable]:
    out: List[Variable] = []
    seen = set()
    for tok, type_name in _parse_typed_names(items, types, what):
        if not tok.text.startswith("?"):
            raise _err("syntax", f"expected a variable in {what}, got '{tok.text}'", tok.span)
        if tok.text in seen:
            raise _err("declaration", f"duplicate variable '{tok.text}' in {what}", tok.span)
        seen.add(tok.text)
        out.append(Variable(tok.text, type_name))
    return out


@dataclass
class _FormulaContext:
    types: TypeHierarchy
    predicates: Dict[str, Predicate]
    constants: Dict[str, Constant]
    scope: Dict[str, Variable]
    where: str


def _parse_term(sx: SExpr, ctx: _FormulaContext) -> Tuple[Term, SourceSpan]:
    tok = _expect_word(sx, "a term")
    if tok.text.startswith("?"):
        var = ctx.scope.get(tok.text)
        if var is None:
            raise _err("declaration", f"unbound variable '{tok.text}' in {ctx.where}", tok.span)
        return var, tok.span
    const = ctx.constants.get(tok.text)
    if const is None:
        raise _err("declaration", f"unknown object '{tok.text}' in {ctx.where}", tok.span)
    return const, tok.span


def _parse_atom(sx: SList, ctx: _FormulaContext) -> Literal:
    if not sx.items:
        raise _err("syntax", f"empty form in {ctx.where}", sx.span)
    head = _expect_word(sx.items[0], "a predicate name")
    if _is_number(head.text):
        raise _err("syntax", f"expected a predicate name, got '{head.text}'", head.span)
    pred = ctx.predicates.get(head.text)
    if pred is None:
        raise _err("declaration", f"unknown predicate '{head.text}'", head.span)
    args = sx.items[1:]
    if len(args) != pred.arity:
        raise _err("typing", f"'{pred.name}' expects {pred.arity} arguments, "
                             f"got {len(args)}", head.span)
    terms = []
    for arg, ptype in zip(args, pred.param_types):
        term, span = _parse_term(arg, ctx)
        if not ctx.types.is_subtype(term.type, ptype):
            raise _err("typing", f"argument '{term}' of '{pred.name}' has type "
                                 f"'{term.type}', expected '{ptype}'", span)
        terms.append(term)
    return Literal(pred, tuple(terms))


def _parse_formula(sx: SExpr, ctx: _FormulaContext) -> Formula:
    if isinstance(sx, Token):
        raise _err("syntax", f"expected a formula in {ctx.where}", sx.span)
    if not sx.items:
        raise _err("syntax", f"empty formula in {ctx.where}", sx.span)
    head = _expect_word(sx.items[0], "a formula head")

    if head.text in _UNSUPPORTED_HEADS:
        raise _err("unsupported-feature", f"'{head.text}' is not supported", head.span)
    if head.text == "probabilistic":
        raise _err("syntax", "'probabilistic' is only allowed in effects", head.span)

    if head.text in ("and", "or"):
        operands = tuple(_parse_formula(item, ctx) for item in sx.items[1:])
        return And(operands) if head.text == "and" else Or(operands)

    if head.text == "not":
        if len(sx.items) != 2:
            raise _err("syntax", "'not' takes exactly one operand", head.span)
        inner = _parse_formula(sx.items[1], ctx)
        if isinstance(inner, Literal):
            return inner.negate()
        return Not(inner)

    if head.text in ("forall", "exists"):
        if len(sx.items) != 3 or not isinstance(sx.items[1], SList):
            raise _err("syntax", f"'{head.text}' takes a variable list and a body", head.span)
        variables = _parse_variable_list(sx.items[1].items, ctx.types, f"'{head.text}'")
        for var in variables:
            if var.name in ctx.scope:
                raise _err("declaration",
                           f"quantified variable '{var.name}' shadows an outer one",
                           sx.items[1].span)
        inner_scope = dict(ctx.scope)
        inner_scope.update({v.name: v for v in variables})
        inner_ctx = _FormulaContext(ctx.types, ctx.predicates, ctx.constants,
                                    inner_scope, ctx.where)
        body = _parse_formula(sx.items[2], inner_ctx)
        node = ForAll if head.text == "forall" else Exists
        return node(tuple(variables), body)

    if head.text == "=":
        if len(sx.items) != 3:
            raise _err("syntax", "'=' takes exactly two terms", head.span)
        left, _ = _parse_term(sx.items[1], ctx)
        right, _ = _parse_term(sx.items[2], ctx)
        return Equality(left, right)

    return _parse_atom(sx, ctx)


def _parse_effect_literal(sx: SExpr, ctx: _FormulaContext) -> Tuple[Literal, bool]:
    """One effect conjunct: a positive literal or ``(not <literal>)``."""
    if not isinstance(sx, SList) or not sx.items:
        raise _err("syntax", "expected an effect literal", sx.span)
    head = _expect_word(sx.items[0], "an effect head")
    if head.text in _UNSUPPORTED_HEADS or head.text in ("forall", "exists", "or"):
        raise _err("unsupported-feature",
                   f"'{head.text}' is not supported in effects", head.span)
    if head.text == "not":
        if len(sx.items) != 2 or not isinstance(sx.items[1], SList):
            raise _err("syntax", "'not' takes exactly one literal in effects", head.span)
        return _parse_atom(sx.items[1], ctx), False
    lit = _parse_atom(sx, ctx)
    return lit, True


def _check_effect_predicate(lit: Literal, span: SourceSpan) -> None:
    if lit.predicate.is_derived:
        raise _err("declaration",
                   f"derived predicate '{lit.predicate.name}' cannot appear in effects", span)
    if lit.predicate.is_action_predicate:
        raise _err("declaration",
                   f"action predicate '{lit.predicate.name}' cannot appear in effects", span)


def _parse_det_effect(sx: SExpr, ctx: _FormulaContext) -> DeterministicEffect:
    if not isinstance(sx, SList) or not sx.items:
        raise _err("syntax", "expected an effect", sx.span if isinstance(sx, SList) else sx.span)
    head = _expect_word(sx.items[0], "an effect head")
    if head.text == "probabilistic":
        raise _err("unsupported-feature",
                   "'probabilistic' must be the entire effect, not nested inside one",
                   head.span)
    conjuncts: List[SExpr]
    if head.text == "and":
        conjuncts = list(sx.items[1:])
    else:
        conjuncts = [sx]
    add, delete = set(), set()
    for item in conjuncts:
        if isinstance(item, SList) and item.items:
            inner_head = _expect_word(item.items[0], "an effect head")
            if inner_head.text == "and":
                nested = _parse_det_effect(item, ctx)
                add |= nested.add
                delete |= nested.delete
                continue
            if inner_head.text == "probabilistic":
                raise _err("unsupported-feature",
                           "'probabilistic' must be the entire effect, not nested inside one",
                           inner_head.span)
        lit, positive = _parse_effect_literal(item, ctx)
        _check_effect_predicate(lit, item.span)
        (add if positive else delete).add(lit)
    clash = add & delete
    if clash:
        names = ", ".join(sorted(str(l) for l in clash))
        raise _err("syntax", f"literal both added and deleted: {names}", sx.span)
    return DeterministicEffect(frozenset(add), frozenset(delete))


def _parse_effect(sx: SExpr, ctx: _FormulaContext) -> Effect:
    if not isinstance(sx, SList) or not sx.items:
        raise _err("syntax", "expected an effect",
                   sx.span if isinstance(sx, (SList, Token)) else None)
    head = _expect_word(sx.items[0], "an effect head")
    if head.text != "probabilistic":
        return _parse_det_effect(sx, ctx)
    pairs = sx.items[1:]
    if not pairs or len(pairs) % 2 != 0:
        raise _err("syntax", "'probabilistic' takes probability/effect pairs", head.span)
    outcomes = []
    total = Fraction(0)
    for prob_sx, eff_sx in zip(pairs[0::2], pairs[1::2]):
        prob_tok = _expect_word(prob_sx, "a probability")
        if not _is_number(prob_tok.text):
            raise _err("syntax", f"expected a probability, got '{prob_tok.text}'",
                       prob_tok.span)
        try:
            prob = Fraction(prob_tok.text)
        except (ValueError, ZeroDivisionError):
            raise _err("syntax", f"malformed probability '{prob_tok.text}'", prob_tok.span)
        if prob < 0 or prob > 1:
            raise _err("syntax", f"probability {prob_tok.text} out of [0, 1]", prob_tok.span)
        total += prob
        outcomes.append((prob, _parse_det_effect(eff_sx, ctx)))
    if total > 1 + Fraction(1, 10**9):
        raise _err("syntax", f"outcome probabilities sum to {total} > 1", head.span)
    return ProbabilisticEffect(tuple(outcomes))


def _sections(form: SList, kind_name: str, label: str) -> Tuple[str, List[SList]]:
    """Unpack ``(define (<kind> name) section ...)``."""
    if not form.items or not isinstance(form.items[0], Token) \
            or form.items[0].text != "define":
        raise _err("syntax", "expected '(define ...)'", form.span)
    if len(form.items) < 2 or not isinstance(form.items[1], SList):
        raise _err("syntax", f"expected '({kind_name} <name>)'", form.span)
    head = form.items[1]
    if len(head.items) != 2 or not isinstance(head.items[0], Token) \
            or head.items[0].text != kind_name or not isinstance(head.items[1], Token):
        raise _err("syntax", f"expected '({kind_name} <name>)'", head.span)
    sections = []
    for sx in form.items[2:]:
        if not isinstance(sx, SList) or not sx.items or not isinstance(sx.items[0], Token):
            raise _err("syntax", "expected a '(:keyword ...)' section",
                       sx.span if isinstance(sx, (SList, Token)) else form.span)
        sections.append(sx)
    return head.items[1].text, sections


def _find_action_literal(op_name: str, precondition: Formula,
                         span: SourceSpan) -> Optional[Literal]:
    """Locate the unique positive action-predicate conjunct of a precondition."""

    def count(formula: Formula) -> int:
        if isinstance(formula, Literal):
            return int(formula.predicate.is_action_predicate)
        if isinstance(formula, Equality):
            return 0
        if isinstance(formula, (And, Or)):
            return sum(count(o) for o in formula.operands)
        if isinstance(formula, Not):
            return count(formula.operand)
        return count(formula.body)

    def top_conjuncts(formula: Formula) -> List[Literal]:
        if isinstance(formula, Literal):
            return [formula]
        if isinstance(formula, And):
            out = []
            for operand in formula.operands:
                out.extend(top_conjuncts(operand))
            return out
        return []

    total = count(precondition)
    if total == 0:
        return None
    candidates = [l for l in top_conjuncts(precondition)
                  if l.predicate.is_action_predicate and l.positive]
    if total != 1 or len(candidates) != 1:
        raise _err("declaration",
                   f"operator '{op_name}' must contain exactly one positive "
                   f"action-predicate literal as a top-level conjunct", span)
    literal = candidates[0]
    if len(set(literal.variables)) != len(literal.args):
        raise _err("declaration",
                   f"action literal of '{op_name}' must apply distinct variables", span)
    return literal


def _strip_action_literal(precondition: Formula, literal: Literal) -> Formula:
    """The precondition with the distinguished action conjunct removed."""

    def strip(formula: Formula) -> Optional[Formula]:
        if formula is literal or formula == literal:
            return None
        if isinstance(formula, And):
            kept = tuple(s for s in (strip(o) for o in formula.operands) if s is not None)
            return And(kept)
        return formula

    out = strip(precondition)
    return And(()) if out is None else out


def parse_domain(text: str, label: str = "<domain>") -> Domain:
    """Parse a PDDL domain. Raises ParseError with a span on any failure."""
    form = _read_one(text, label)
    name, sections = _sections(form, "domain", label)

    singles: Dict[str, SList] = {}
    operators_sx: List[SList] = []
    derived_sx: List[SList] = []
    for sx in sections:
        keyword = sx.items[0].text
        if keyword == ":action":
            operators_sx.append(sx)
        elif keyword == ":derived":
            derived_sx.append(sx)
        elif keyword in (":requirements", ":types", ":constants", ":predicates",
                         ":actions"):
            if keyword in singles:
                raise _err("syntax", f"duplicate '{keyword}' section", sx.span)
            singles[keyword] = sx
        elif keyword == ":functions":
            raise _err("unsupported-feature", "':functions' is not supported",
                       sx.items[0].span)
        else:
            raise _err("syntax", f"unknown section '{keyword}'", sx.items[0].span)

    requirements = set()
    if ":requirements" in singles:
        for item in singles[":requirements"].items[1:]:
            tok = _expect_word(item, "a requirement flag")
            if tok.text in _REJECTED_REQUIREMENTS:
                raise _err("unsupported-feature",
                           f"requirement '{tok.text}' is not supported", tok.span)
            requirements.add(tok.text)

    parents: Dict[str, Optional[str]] = {ROOT_TYPE: None}
    if ":types" in singles:
        declared = _parse_typed_names(singles[":types"].items[1:], None, "':types'")
        for tok, parent in declared:
            if tok.text == ROOT_TYPE:
                if parent != ROOT_TYPE:
                    raise _err("declaration", f"'{ROOT_TYPE}' cannot have a parent", tok.span)
                continue
            if tok.text in parents:
                raise _err("declaration", f"duplicate type '{tok.text}'", tok.span)
            parents[tok.text] = parent
        # Types used only as parents are implicitly children of the root.
        for parent in {p for p in parents.values() if p is not None}:
            parents.setdefault(parent, ROOT_TYPE)
    try:
        types = TypeHierarchy.from_mapping(parents)
    except DeclarationError as exc:
        span = singles[":types"].span if ":types" in singles else form.span
        raise _err("declaration", str(exc), span)

    constants: Dict[str, Constant] = {}
    if ":constants" in singles:
        for tok, type_name in _parse_typed_names(singles[":constants"].items[1:],
                                                 types, "':constants'"):
            if tok.text in constants:
                raise _err("declaration", f"duplicate constant '{tok.text}'", tok.span)
            constants[tok.text] = Constant(tok.text, type_name)

    predicates: Dict[str, Predicate] = {}
    pred_order: List[str] = []
    if ":predicates" in singles:
        for sx in singles[":predicates"].items[1:]:
            if not isinstance(sx, SList) or not sx.items:
                raise _err("syntax", "expected a predicate declaration",
                           sx.span if isinstance(sx, (SList, Token)) else None)
            pname = _expect_word(sx.items[0], "a predicate name")
            if pname.text in predicates:
                raise _err("declaration", f"duplicate predicate '{pname.text}'", pname.span)
            params = _parse_variable_list(sx.items[1:], types, f"'{pname.text}'")
            predicates[pname.text] = Predicate(pname.text, tuple(v.type for v in params))
            pred_order.append(pname.text)

    if ":actions" in singles:
        for item in singles[":actions"].items[1:]:
            tok = _expect_word(item, "an action predicate name")
            pred = predicates.get(tok.text)
            if pred is None:
                raise _err("declaration", f"unknown predicate '{tok.text}'", tok.span)
            if pred.is_action_predicate:
                raise _err("declaration", f"duplicate action predicate '{tok.text}'",
                           tok.span)
            predicates[tok.text] = Predicate(pred.name, pred.param_types,
                                             is_action_predicate=True)

    derived_heads: List[Tuple[str, List[Variable], SExpr, SourceSpan]] = []
    for sx in derived_sx:
        if len(sx.items) != 3 or not isinstance(sx.items[1], SList):
            raise _err("syntax", "':derived' takes a head and a body", sx.span)
        head_sx = sx.items[1]
        if not head_sx.items:
            raise _err("syntax", "empty derived head", head_sx.span)
        hname = _expect_word(head_sx.items[0], "a predicate name")
        pred = predicates.get(hname.text)
        if pred is None:
            raise _err("declaration", f"unknown predicate '{hname.text}'", hname.span)
        if pred.is_action_predicate:
            raise _err("declaration",
                       f"action predicate '{hname.text}' cannot be derived", hname.span)
        params = _parse_variable_list(head_sx.items[1:], types, f"'{hname.text}' head")
        if tuple(v.type for v in params) != pred.param_types:
            raise _err("typing", f"derived head '{hname.text}' does not match its "
                                 f"declaration", hname.span)
        if not pred.is_derived:
            predicates[hname.text] = Predicate(pred.name, pred.param_types, is_derived=True)
        derived_heads.append((hname.text, params, sx.items[2], sx.span))

    # Re-resolve rule heads and parse bodies once all flags are final.
    resolved_rules: List[DerivedPredicate] = []
    for pname, params, body_sx, span in derived_heads:
        ctx = _FormulaContext(types, predicates, constants,
                              {v.name: v for v in params}, f"derived '{pname}'")
        body = _parse_formula(body_sx, ctx)
        _forbid_action_predicates(body, f"derived '{pname}'", span)
        resolved_rules.append(DerivedPredicate(predicates[pname], tuple(params), body))

    operators: List[Operator] = []
    op_names = set()
    action_pred_owner: Dict[str, str] = {}
    for sx in operators_sx:
        operator = _parse_operator(sx, types, predicates, constants)
        if operator.name in op_names:
            raise _err("declaration", f"duplicate operator '{operator.name}'", sx.span)
        op_names.add(operator.name)
        if operator.action_literal is not None:
            pred_name = operator.action_literal.predicate.name
            if pred_name in action_pred_owner:
                raise _err("declaration",
                           f"action predicate '{pred_name}' is claimed by both "
                           f"'{action_pred_owner[pred_name]}' and '{operator.name}'",
                           sx.span)
            action_pred_owner[pred_name] = operator.name
        elif action_pred_owner or ":actions" in singles:
            raise _err("declaration",
                       f"operator '{operator.name}' has no action-predicate literal",
                       sx.span)
        operators.append(operator)

    domain = Domain(name=name,
                    requirements=frozenset(requirements),
                    types=types,
                    constants=frozenset(constants.values()),
                    predicates=tuple(predicates[p] for p in pred_order),
                    operators=tuple(operators),
                    derived=tuple(resolved_rules))
    try:
        inference.stratify(domain)
    except StratificationError as exc:
        raise _err("declaration", str(exc), form.span)
    return domain


def _forbid_action_predicates(formula: Formula, where: str, span: SourceSpan) -> None:
    if isinstance(formula, Literal):
        if formula.predicate.is_action_predicate:
            raise _err("declaration",
                       f"action predicate '{formula.predicate.name}' cannot appear "
                       f"in {where}", span)
    elif isinstance(formula, (And, Or)):
        for op in formula.operands:
            _forbid_action_predicates(op, where, span)
    elif isinstance(formula, Not):
        _forbid_action_predicates(formula.operand, where, span)
    elif isinstance(formula, (ForAll, Exists)):
        _forbid_action_predicates(formula.body, where, span)


def _parse_operator(sx: SList, types: TypeHierarchy,
                    predicates: Dict[str, Predicate],
                    constants: Dict[str, Constant]) -> Operator:
    if len(sx.items) < 2 or not isinstance(sx.items[1], Token):
        raise _err("syntax", "':action' takes a name", sx.span)
    name = sx.items[1].text
    fields: Dict[str, SExpr] = {}
    i = 2
    while i < len(sx.items):
        key = _expect_word(sx.items[i], "an ':action' keyword")
        if key.text not in (":parameters", ":precondition", ":effect"):
            raise _err("syntax", f"unknown ':action' keyword '{key.text}'", key.span)
        if key.text in fields:
            raise _err("syntax", f"duplicate '{key.text}'", key.span)
        if i + 1 >= len(sx.items):
            raise _err("syntax", f"'{key.text}' has no value", key.span)
        fields[key.text] = sx.items[i + 1]
        i += 2
    for required in (":parameters", ":precondition", ":effect"):
        if required not in fields:
            raise _err("syntax", f"operator '{name}' is missing '{required}'", sx.span)
    params_sx = fields[":parameters"]
    if not isinstance(params_sx, SList):
        raise _err("syntax", "':parameters' takes a variable list", params_sx.span)
    parameters = _parse_variable_list(params_sx.items, types, f"'{name}' parameters")
    ctx = _FormulaContext(types, predicates, constants,
                          {v.name: v for v in parameters}, f"operator '{name}'")
    precondition = _parse_formula(fields[":precondition"], ctx)
    effect = _parse_effect(fields[":effect"], ctx)
    action_literal = _find_action_literal(name, precondition, sx.span)
    return Operator(name=name, parameters=tuple(parameters),
                    precondition=precondition, effect=effect,
                    action_literal=action_literal)


def parse_problem(text: str, domain: Domain, label: str = "<problem>") -> Problem:
    """Parse a PDDL problem against ``domain``."""
    form = _read_one(text, label)
    name, sections = _sections(form, "problem", label)

    singles: Dict[str, SList] = {}
    for sx in sections:
        keyword = sx.items[0].text
        if keyword not in (":domain", ":objects", ":init", ":goal"):
            raise _err("syntax", f"unknown section '{keyword}'", sx.items[0].span)
        if keyword in singles:
            raise _err("syntax", f"duplicate '{keyword}' section", sx.span)
        singles[keyword] = sx

    if ":domain" not in singles or len(singles[":domain"].items) != 2:
        raise _err("syntax", "expected '(:domain <name>)'", form.span)
    domain_tok = _expect_word(singles[":domain"].items[1], "a domain name")
    if domain_tok.text != domain.name:
        raise _err("declaration",
                   f"problem is for domain '{domain_tok.text}', not '{domain.name}'",
                   domain_tok.span)

    constant_names = {c.name: c for c in domain.constants}
    objects: Dict[str, Constant] = {}
    if ":objects" in singles:
        for tok, type_name in _parse_typed_names(singles[":objects"].items[1:],
                                                 domain.types, "':objects'"):
            if tok.text in objects:
                raise _err("declaration", f"duplicate object '{tok.text}'", tok.span)
            if tok.text in constant_names:
                raise _err("declaration",
                           f"object '{tok.text}' collides with a domain constant", tok.span)
            objects[tok.text] = Constant(tok.text, type_name)

    all_constants = dict(constant_names)
    all_constants.update(objects)
    ctx = _FormulaContext(domain.types, domain.predicate_map, all_constants, {}, ":init")

    init = set()
    if ":init" in singles:
        for sx in singles[":init"].items[1:]:
            if not isinstance(sx, SList) or not sx.items:
                raise _err("syntax", "expected a literal in ':init'",
                           sx.span if isinstance(sx, (SList, Token)) else None)
            head = _expect_word(sx.items[0], "a predicate name")
            if head.text == "not":
                raise _err("syntax", "negative literals are not allowed in ':init'",
                           head.span)
            if head.text == "=":
                raise _err("syntax", "'=' is not allowed in ':init'", head.span)
            lit = _parse_atom(sx, ctx)
            if lit.predicate.is_derived:
                raise _err("declaration",
                           f"derived predicate '{lit.predicate.name}' cannot appear "
                           f"in ':init'", head.span)
            if lit.predicate.is_action_predicate:
                raise _err("declaration",
                           f"action predicate '{lit.predicate.name}' cannot appear "
                           f"in ':init'", head.span)
            init.add(lit)  # duplicates collapse silently

    if ":goal" not in singles or len(singles[":goal"].items) != 2:
        raise _err("syntax", "expected '(:goal <formula>)'", form.span)
    goal_ctx = _FormulaContext(domain.types, domain.predicate_map, all_constants,
                               {}, ":goal")
    goal = _parse_formula(singles[":goal"].items[1], goal_ctx)
    _forbid_action_predicates(goal, "':goal'", singles[":goal"].span)

    return Problem(name=name, domain_name=domain.name,
                   objects=frozenset(objects.values()),
                   init=frozenset(init), goal=goal)


def parse_ground_literal(text: str, domain: Domain, objects: frozenset,
                         label: str = "<action>") -> Literal:
    """Parse one ground positive literal such as ``(pick-up a)``."""
    form = _read_one(text, label)
    names = {c.name: c for c in domain.constants}
    names.update({o.name: o for o in objects})
    ctx = _FormulaContext(domain.types, domain.predicate_map, names, {}, "action text")
    return _parse_atom(form, ctx)
