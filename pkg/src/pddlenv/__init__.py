"""Relational reinforcement-learning environments defined by PDDL files."""

from pddlenv.bench import (RolloutStats, export_trace, replay_trace,
                           run_random_rollouts)
from pddlenv.env import Env, EnvConfig, StepResult, apply_effect, register, register_files
from pddlenv.errors import (ConfigurationError, DeadEndError, DeclarationError,
                            GroundingError, InvalidActionError, ParseError,
                            PDDLEnvError, PlanningFailure, PlanTimeout,
                            PlanUnsolvable, SourceSpan, StratificationError,
                            TypingError)
from pddlenv.inference import Query, derived_closure, find_assignments, holds, stratify
from pddlenv.parser import parse_domain, parse_ground_literal, parse_problem
from pddlenv.planner import (Plan, h_add, plan_gbfs, read_plan, validate_plan,
                             write_plan)
from pddlenv.registry import list_envs, load_env, load_env_dir
from pddlenv.structs import (And, Constant, DerivedPredicate,
                             DeterministicEffect, Domain, Effect, Equality,
                             Exists, ForAll, Formula, GroundAction, Literal,
                             Not, Operator, Or, Predicate, ProbabilisticEffect,
                             Problem, State, Substitution, TypeHierarchy,
                             Variable, all_groundings, apply_substitution,
                             free_variables, ground_effect, substitute_formula)
from pddlenv.writer import serialize_domain, serialize_problem

__version__ = "0.1.0"

__all__ = [
    "And", "Constant", "ConfigurationError", "DeadEndError",
    "DeclarationError", "DerivedPredicate", "DeterministicEffect", "Domain",
    "Effect", "Env", "EnvConfig", "Equality", "Exists", "ForAll", "Formula",
    "GroundAction", "GroundingError", "InvalidActionError", "Literal", "Not",
    "Operator", "Or", "ParseError", "PDDLEnvError", "Plan", "PlanTimeout",
    "PlanUnsolvable", "PlanningFailure", "Predicate", "ProbabilisticEffect",
    "Problem", "Query", "RolloutStats", "SourceSpan", "State", "StepResult",
    "StratificationError", "Substitution", "TypeHierarchy", "TypingError",
    "Variable", "all_groundings", "apply_effect", "apply_substitution",
    "derived_closure", "export_trace", "find_assignments", "free_variables",
    "ground_effect", "h_add", "holds", "list_envs", "load_env",
    "load_env_dir", "parse_domain", "parse_ground_literal", "parse_problem",
    "plan_gbfs", "read_plan", "register", "register_files", "replay_trace",
    "run_random_rollouts", "serialize_domain", "serialize_problem",
    "stratify", "substitute_formula", "validate_plan", "write_plan",
    "__version__",
]
