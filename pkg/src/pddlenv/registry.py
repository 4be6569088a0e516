"""Catalog of bundled environments and loaders for external ones.

Each bundled environment ships a domain file plus separate train and test
problem sets. Domains are parsed once per file path, so the train and test
environments of one catalog entry share the same Domain object.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Tuple

from pddlenv.env import Env, EnvConfig
from pddlenv.errors import ConfigurationError
from pddlenv.parser import parse_domain, parse_problem
from pddlenv.structs import Domain, Problem

ASSET_ROOT = Path(__file__).parent / "assets"


@dataclass(frozen=True)
class RegistryEntry:
    """One bundled environment and the config it is meant to run with."""

    name: str
    operators_as_actions: bool = False
    dynamic_action_space: bool = False
    probabilistic: bool = False

    @property
    def directory(self) -> Path:
        return ASSET_ROOT / self.name

    def config(self, seed: Optional[int] = None,
               max_episode_length: Optional[int] = None) -> EnvConfig:
        return EnvConfig(operators_as_actions=self.operators_as_actions,
                         dynamic_action_space=self.dynamic_action_space,
                         max_episode_length=max_episode_length,
                         seed=seed)


_ENTRIES: Tuple[RegistryEntry, ...] = (
    RegistryEntry("blocks"),
    RegistryEntry("doors"),
    RegistryEntry("exploding_blocks", probabilistic=True),
    RegistryEntry("ferry"),
    RegistryEntry("gripper"),
    RegistryEntry("hanoi", operators_as_actions=True),
    RegistryEntry("river", probabilistic=True),
    RegistryEntry("slide_tile", operators_as_actions=True),
    RegistryEntry("sokoban"),
    RegistryEntry("triangle_tireworld", probabilistic=True),
    RegistryEntry("tsp"),
)

_BY_NAME: Dict[str, RegistryEntry] = {entry.name: entry for entry in _ENTRIES}


def list_envs() -> Tuple[str, ...]:
    """Names of the bundled environments, sorted."""
    return tuple(entry.name for entry in _ENTRIES)


def registry_entry(name: str) -> RegistryEntry:
    entry = _BY_NAME.get(name)
    if entry is None:
        known = ", ".join(list_envs())
        raise ConfigurationError(f"unknown environment '{name}'; "
                                 f"bundled environments: {known}")
    return entry


@lru_cache(maxsize=None)
def _load_domain(path: str) -> Domain:
    with open(path, encoding="utf-8") as f:
        return parse_domain(f.read(), path)


def _load_problems(domain: Domain, directory: Path
                   ) -> Tuple[Tuple[Problem, ...], Tuple[str, ...]]:
    paths = sorted(directory.glob("*.pddl"),
                   key=lambda p: (len(p.name), p.name))
    if not paths:
        raise ConfigurationError(f"no problem files in {directory}")
    problems = []
    for path in paths:
        with open(path, encoding="utf-8") as f:
            problems.append(parse_problem(f.read(), domain, str(path)))
    return tuple(problems), tuple(str(p) for p in paths)


def load_env(name: str, test: bool = False, seed: Optional[int] = None,
             max_episode_length: Optional[int] = None,
             config: Optional[EnvConfig] = None) -> Env:
    """A bundled environment by name, using its train or test problems."""
    entry = registry_entry(name)
    if config is None:
        config = entry.config(seed=seed, max_episode_length=max_episode_length)
    domain = _load_domain(str(entry.directory / "domain.pddl"))
    problem_dir = entry.directory / ("problems_test" if test else "problems")
    problems, paths = _load_problems(domain, problem_dir)
    return Env(domain, problems, config,
               domain_path=str(entry.directory / "domain.pddl"),
               problem_paths=paths)


def load_env_dir(directory: str, test: bool = False,
                 config: Optional[EnvConfig] = None) -> Env:
    """An environment from a directory shaped like a catalog entry.

    The directory must hold ``domain.pddl`` and a ``problems/`` folder;
    an optional ``problems_test/`` folder serves the test split.
    """
    root = Path(directory)
    domain_path = root / "domain.pddl"
    if not domain_path.is_file():
        raise ConfigurationError(f"no domain.pddl in {root}")
    domain = _load_domain(str(domain_path))
    problem_dir = root / ("problems_test" if test else "problems")
    if not problem_dir.is_dir():
        raise ConfigurationError(f"no {problem_dir.name}/ folder in {root}")
    problems, paths = _load_problems(domain, problem_dir)
    return Env(domain, problems, config or EnvConfig(),
               domain_path=str(domain_path), problem_paths=paths)
