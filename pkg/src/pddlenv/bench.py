"""Random-policy throughput measurement and trace capture.

The protocol is fixed-horizon random rollouts: reset, then sample and
step until done or the horizon. Timing covers stepping only; parsing
and registration happen before the clock starts, and one warm-up
episode is run and discarded (the environment is re-seeded after it,
so recorded traces replay against a fresh stream).
"""

from __future__ import annotations

import csv
import json
import random
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from pddlenv.env import Env
from pddlenv.errors import DeadEndError

DEFAULT_EPISODES = 100
DEFAULT_HORIZON = 10


@dataclass(frozen=True)
class RolloutStats:
    """Aggregate results of one random-policy run."""

    env_name: str
    mode: str
    episodes: int
    horizon: int
    steps: int
    wall_time: float
    fps: float
    goal_rate: float
    dead_ends: int
    seed: int


def _policy_rng(seed: int) -> random.Random:
    # distinct stream from the env's, so trace replay does not depend on
    # how many draws the policy made
    return random.Random(f"policy-{seed}")


def run_random_rollouts(env: Env, episodes: int = DEFAULT_EPISODES,
                        horizon: int = DEFAULT_HORIZON, seed: int = 0,
                        env_name: Optional[str] = None
                        ) -> Tuple[RolloutStats, Dict]:
    """Run the rollout protocol; returns stats plus a replayable trace."""
    if episodes < 1 or horizon < 1:
        raise ValueError("episodes and horizon must be at least 1")
    mode = "valid" if env.config.dynamic_action_space else "all"
    name = env_name or env.domain.name

    env.seed(seed)
    policy = _policy_rng(seed)
    _episode(env, horizon, policy)  # warm-up, discarded

    env.seed(seed)
    policy = _policy_rng(seed)
    episodes_data: List[Dict] = []
    steps = goals = dead_ends = 0
    started = time.perf_counter()
    for _ in range(episodes):
        record, reached_goal, dead = _episode(env, horizon, policy)
        episodes_data.append(record)
        steps += len(record["steps"])
        goals += int(reached_goal)
        dead_ends += int(dead)
    wall_time = time.perf_counter() - started

    stats = RolloutStats(env_name=name, mode=mode, episodes=episodes,
                         horizon=horizon, steps=steps, wall_time=wall_time,
                         fps=steps / wall_time if wall_time > 0 else 0.0,
                         goal_rate=goals / episodes, dead_ends=dead_ends,
                         seed=seed)
    trace = {"env": name, "seed": seed, "mode": mode, "episodes": episodes_data}
    return stats, trace


def _episode(env: Env, horizon: int, policy: random.Random
             ) -> Tuple[Dict, bool, bool]:
    _, info = env.reset()
    record: Dict = {"problem": info["problem"], "steps": []}
    reached_goal = False
    for _ in range(horizon):
        try:
            action = env.sample_action(rng=policy)
        except DeadEndError:
            return record, reached_goal, True
        result = env.step(action)
        record["steps"].append({"action": str(action),
                                "reward": result.reward,
                                "done": result.done,
                                "effect_index": result.info["effect_index"]})
        if result.done:
            reached_goal = result.reward == 1.0
            break
    return record, reached_goal, False


def export_trace(trace: Dict) -> str:
    """Stable JSON text for a trace."""
    return json.dumps(trace, indent=2) + "\n"


def replay_trace(env: Env, trace: Dict) -> bool:
    """Re-run a trace's actions against its seed; true iff outcomes match."""
    env.seed(trace["seed"])
    for episode in trace["episodes"]:
        _, info = env.reset()
        if info["problem"] != episode["problem"]:
            return False
        for step in episode["steps"]:
            action = env.parse_action(step["action"])
            result = env.step(action)
            if (result.reward != step["reward"]
                    or result.done != step["done"]
                    or result.info["effect_index"] != step["effect_index"]):
                return False
    return True


CSV_FIELDS = ("name", "mode", "episodes", "horizon", "steps", "goal_rate",
              "dead_ends", "seed", "fps", "wall_time")


def stats_row(stats: RolloutStats) -> Dict[str, object]:
    return {"name": stats.env_name, "mode": stats.mode,
            "episodes": stats.episodes, "horizon": stats.horizon,
            "steps": stats.steps, "goal_rate": f"{stats.goal_rate:.3f}",
            "dead_ends": stats.dead_ends, "seed": stats.seed,
            "fps": f"{stats.fps:.1f}", "wall_time": f"{stats.wall_time:.4f}"}


def write_csv(rows: Sequence[RolloutStats], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for stats in rows:
            writer.writerow(stats_row(stats))
