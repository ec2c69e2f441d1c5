"""Benchmark tasks: scripted conversations with annotated goal states.

A task file stores the scripted user and agent, the goal state, and the
tool-call script that produced it, so reachability of the goal through
the toolkit is checkable by replay.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..runtime import AgentAction
from .state import EnvState
from .tools import execute_tool


@dataclass(frozen=True)
class Task:
    id: str
    task_type: int
    violating: bool
    description: str
    initial: EnvState
    user_script: tuple[str, ...]
    agent_script: tuple[AgentAction, ...]
    goal: EnvState
    goal_script: tuple[dict, ...] = field(default=())

    def fresh_env_state(self) -> EnvState:
        return self.initial.clone()


def _parse_agent_step(obj: dict) -> AgentAction:
    if "say" in obj:
        return AgentAction.say(obj["say"])
    if "call" in obj:
        return AgentAction.call(obj["call"]["name"], obj["call"].get("args", {}))
    raise ValueError(f"bad agent step: {obj}")


def apply_goal_script(initial: EnvState, script) -> EnvState:
    state = initial.clone()
    for step in script:
        state, _payload = execute_tool(state, step["name"], step.get("args", {}))
    return state


def load_task(path: Path, base_state: EnvState) -> Task:
    obj = json.loads(path.read_text())
    initial = base_state.clone()
    goal_script = tuple(obj.get("goal_script", []))
    goal = apply_goal_script(initial, goal_script)
    stored_goal = obj.get("goal_state")
    if stored_goal is not None and EnvState.from_json(stored_goal) != goal:
        raise ValueError(
            f"{path.name}: stored goal state disagrees with goal_script replay"
        )
    return Task(
        id=obj["id"],
        task_type=obj["task_type"],
        violating=obj.get("violating", False),
        description=obj.get("description", ""),
        initial=initial,
        user_script=tuple(obj.get("user_script", [])),
        agent_script=tuple(_parse_agent_step(s) for s in obj.get("agent_script", [])),
        goal=goal,
        goal_script=goal_script,
    )


def load_corpus(directory: str | Path) -> list[Task]:
    directory = Path(directory)
    base_state = EnvState.load(directory / "base_state.json")
    problems = base_state.validate()
    if problems:
        raise ValueError(
            "corrupt base state: " + "; ".join(problems)
        )
    tasks = []
    for path in sorted(directory.glob("task_*.json")):
        tasks.append(load_task(path, base_state))
    return tasks


def score_task(task: Task, final: EnvState) -> bool:
    """Success iff the canonicalized final state equals the goal."""
    return final.canonical() == task.goal.canonical()
