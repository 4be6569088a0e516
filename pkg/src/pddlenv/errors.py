"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    """A 1-based (line, column) location inside a named input text."""

    label: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.label}:{self.line}:{self.column}"


class PDDLEnvError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PDDLEnvError):
    """A failure while turning PDDL text into model values.

    ``kind`` is one of ``lex``, ``syntax``, ``declaration``, ``typing``,
    or ``unsupported-feature``. ``span`` points at the offending token.
    """

    KINDS = frozenset({"lex", "syntax", "declaration", "typing", "unsupported-feature"})

    def __init__(self, kind: str, message: str, span: Optional[SourceSpan]) -> None:
        assert kind in self.KINDS, kind
        self.kind = kind
        self.message = message
        self.span = span
        where = str(span) if span is not None else "<unknown>"
        super().__init__(f"{where}: [{kind}] {message}")


class DeclarationError(PDDLEnvError):
    """An unknown type, predicate, operator, or object name."""


class TypingError(PDDLEnvError):
    """A binding or literal that violates declared types or arities."""


class GroundingError(PDDLEnvError):
    """A substitution left a variable unbound where ground values are required."""


class StratificationError(PDDLEnvError):
    """A derived predicate is negated within its own recursive stratum."""


class ConfigurationError(PDDLEnvError):
    """An environment registration that is inconsistent with its domain."""


class InvalidActionError(PDDLEnvError):
    """Raised by step() for invalid actions when the environment is so configured."""


class DeadEndError(PDDLEnvError):
    """Valid-action sampling was requested in a state with no valid actions."""


class PlanningFailure(PDDLEnvError):
    """The planner gave up. ``reason`` is ``timeout`` or ``unsolvable``."""

    reason = "unknown"


class PlanTimeout(PlanningFailure):
    reason = "timeout"


class PlanUnsolvable(PlanningFailure):
    reason = "unsolvable"
