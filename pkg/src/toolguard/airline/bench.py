"""Benchmark execution and pass^k scoring.

The wording "at least k of n attempts succeed" admits two readings, so
both estimators are implemented and every reported number is labeled
with the estimator that produced it:

* ``combinatorial``: C(c, k) / C(n, k) averaged over tasks, the
  probability that k attempts sampled without replacement all succeed;
* ``at_least_k``: the indicator c >= k averaged over tasks, the literal
  reading.
"""
from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, Sequence

from ..errors import InvalidK
from ..lang import Module
from ..runtime import (
    AlertStats,
    EnforcementStrategy,
    Limits,
    ScriptedAgent,
    ScriptedUser,
    Trajectory,
    collect_alert_stats,
    run_conversation,
)
from .env import AirlineEnvironment
from .tasks import Task, score_task

ESTIMATORS = ("combinatorial", "at_least_k")


def pass_hat_k(
    successes: Sequence[int], n: int, k: int, estimator: str = "combinatorial"
) -> float:
    """Average per-task success estimate for k of n trials."""
    if not 1 <= k <= n:
        raise InvalidK(f"k must be within 1..{n}, got {k}")
    for c in successes:
        if not 0 <= c <= n:
            raise InvalidK(f"success count {c} outside 0..{n}")
    if not successes:
        return 0.0
    if estimator == "combinatorial":
        return sum(comb(c, k) / comb(n, k) for c in successes) / len(successes)
    if estimator == "at_least_k":
        return sum(1 for c in successes if c >= k) / len(successes)
    raise InvalidK(f"unknown estimator {estimator!r}")


@dataclass
class PassKReport:
    n: int
    ks: tuple[int, ...]
    per_task: tuple[tuple[str, int], ...]  # (task id, successes)
    estimates: dict = field(default_factory=dict)

    @staticmethod
    def build(per_task, n: int, ks) -> "PassKReport":
        successes = [c for _tid, c in per_task]
        estimates = {
            name: {k: pass_hat_k(successes, n, k, name) for k in ks}
            for name in ESTIMATORS
        }
        return PassKReport(
            n=n, ks=tuple(ks), per_task=tuple(per_task), estimates=estimates
        )

    def value(self, k: int, estimator: str = "combinatorial") -> float:
        return self.estimates[estimator][k]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ks": list(self.ks),
            "per_task": [{"task": t, "successes": c} for t, c in self.per_task],
            "estimates": {
                name: {str(k): v for k, v in table.items()}
                for name, table in self.estimates.items()
            },
        }

    def render_table(self) -> str:
        lines = [f"{'k':>4}  {'combinatorial':>14}  {'at_least_k':>11}"]
        for k in self.ks:
            lines.append(
                f"{k:4d}  {self.estimates['combinatorial'][k]:14.4f}"
                f"  {self.estimates['at_least_k'][k]:11.4f}"
            )
        return "\n".join(lines)


@dataclass
class BenchmarkResult:
    report: PassKReport
    alerts: AlertStats
    trajectories: list[tuple[int, int, Trajectory]] = field(default_factory=list)


def default_agent_factory(task: Task, seed: int) -> ScriptedAgent:
    # the seed keeps the interface uniform for backend-driven agents;
    # scripted agents are deterministic regardless
    random.Random(seed)
    return ScriptedAgent(list(task.agent_script))


def run_benchmark(
    tasks: Sequence[Task],
    strategy: EnforcementStrategy,
    guards: Module | None,
    trials: int = 10,
    ks: Sequence[int] = (1,),
    seed: int = 0,
    jobs: int = 1,
    out_dir: str | Path | None = None,
    agent_factory: Callable[[Task, int], ScriptedAgent] = default_agent_factory,
    limits: Limits = Limits(),
) -> BenchmarkResult:
    """n trials per task on isolated state copies; failed trials count
    as task failures without aborting the batch."""

    def one_trial(task: Task, trial: int):
        env = AirlineEnvironment(task.fresh_env_state())
        agent = agent_factory(task, seed + trial)
        user = ScriptedUser(list(task.user_script))
        try:
            traj = run_conversation(agent, user, env, guards, strategy, limits)
            ok = score_task(task, env.state) and not traj.truncated
        except Exception:
            traj = Trajectory()
            ok = False
        return task, trial, traj, ok

    cells = [(task, trial) for task in tasks for trial in range(trials)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda c: one_trial(*c), cells))
    else:
        outcomes = [one_trial(*c) for c in cells]

    per_task_counts: dict[str, int] = {t.id: 0 for t in tasks}
    labeled: list[tuple[int, int, Trajectory]] = []
    for task, trial, traj, ok in outcomes:
        if ok:
            per_task_counts[task.id] += 1
        labeled.append((task.task_type, trial, traj))
        if out_dir is not None:
            directory = Path(out_dir) / task.id
            directory.mkdir(parents=True, exist_ok=True)
            traj.save(directory / f"trial_{trial:02d}.jsonl")

    report = PassKReport.build(
        tuple((t.id, per_task_counts[t.id]) for t in tasks), trials, ks
    )
    result = BenchmarkResult(
        report=report, alerts=collect_alert_stats(labeled), trajectories=labeled
    )
    if out_dir is not None:
        summary = {
            "strategy": strategy.kind,
            "report": report.to_json(),
            "alerts": result.alerts.to_json(),
        }
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "report.json").write_text(
            json.dumps(summary, indent=2) + "\n"
        )
    return result
