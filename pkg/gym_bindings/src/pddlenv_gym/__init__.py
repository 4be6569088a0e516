"""Gym-style bindings for pddlenv environments."""

from pddlenv_gym.bindings import (BoundObservation, LiteralActionSpace,
                                  PDDLEnv, StateObservationSpace, make,
                                  parity_trace, registered_ids)

__version__ = "0.1.0"

__all__ = ["BoundObservation", "LiteralActionSpace", "PDDLEnv",
           "StateObservationSpace", "make", "parity_trace", "registered_ids",
           "__version__"]
