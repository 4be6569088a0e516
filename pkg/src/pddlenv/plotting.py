"""Benchmark figures rendered to image files."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from pddlenv.bench import RolloutStats


def plot_bench(rows: Sequence[RolloutStats], path: str) -> None:
    """Throughput and goal-rate bars, one group per environment."""
    if not rows:
        raise ValueError("nothing to plot")
    labels = [f"{r.env_name} ({r.mode})" for r in rows]
    fps = [r.fps for r in rows]
    goal_rates = [r.goal_rate for r in rows]
    positions = range(len(rows))

    fig, (ax_fps, ax_goal) = plt.subplots(
        1, 2, figsize=(11, 0.45 * len(rows) + 2.2), sharey=True)
    ax_fps.barh(positions, fps, color="steelblue")
    ax_fps.set_yticks(positions, labels)
    ax_fps.invert_yaxis()
    ax_fps.set_xlabel("steps per second")
    ax_fps.set_xscale("log")
    ax_goal.barh(positions, goal_rates, color="darkseagreen")
    ax_goal.set_xlim(0.0, 1.0)
    ax_goal.set_xlabel("goal rate")
    fig.suptitle("random-policy rollouts")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
