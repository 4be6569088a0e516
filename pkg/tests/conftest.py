"""Shared fixtures: tiny domains used across the suite."""

from __future__ import annotations

import pytest

import pddlenv

# Two-room trap: after the single token is spent there are no valid
# actions left, and the goal is unreachable.
TRAP_DOMAIN = """
(define (domain trap)
  (:requirements :strips)
  (:predicates (token) (spent) (treasure) (go))
  (:actions go)
  (:action spend
    :parameters ()
    :precondition (and (go) (token))
    :effect (and (not (token)) (spent)))
)
"""

TRAP_PROBLEM = """
(define (problem trap-one)
  (:domain trap)
  (:init (token))
  (:goal (treasure)))
"""


@pytest.fixture(scope="session")
def blocks_env():
    return pddlenv.load_env("blocks", seed=0)


@pytest.fixture()
def trap_env():
    config = pddlenv.EnvConfig(dynamic_action_space=True, seed=0)
    return pddlenv.register(TRAP_DOMAIN, [TRAP_PROBLEM], config)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance report lines collected during the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
