"""Conversation loop with guard interception before mutating tool calls.

Four enforcement strategies:

* ``none``: tools execute as requested (the best-effort baseline).
* ``reflect_full_doc`` / ``reflect_policy_map``: advisory text is
  injected before each tool call and, when guards are deployed, denies
  are recorded as non-blocking alerts; execution always proceeds.
* ``toolguards``: the guard for a mutating tool runs just before the
  call. A deny blocks execution, records a blocking alert, and hands an
  explanation back to the agent; repeated denies of the same tool are
  cut off by forcing a user-facing message instead.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .errors import BudgetExceeded, GuardNotImplemented, RuntimeFault, ToolError
from .events import (
    TRAJECTORY_SCHEMA,
    AssistantMessage,
    Event,
    GuardAlert,
    SystemInjection,
    ToolCall,
    ToolResult,
    UserMessage,
    event_from_json,
    event_to_json,
)
from .lang import DataApi, GuardContext, Module, Verdict, evaluate

STEP_LIMIT_MARKER = "[conversation truncated: step limit reached]"
GUARD_FAULT_POLICY = "guard_fault"

STRATEGY_KINDS = ("none", "reflect_full_doc", "reflect_policy_map", "toolguards")


@dataclass(frozen=True)
class EnforcementStrategy:
    kind: str = "none"
    deny_retry_budget: int = 3
    advisory_text: str = ""
    fail_mode: str = "closed"  # guard faults: "closed" blocks, "open" executes

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")

    @property
    def blocking(self) -> bool:
        return self.kind == "toolguards"

    @property
    def advisory(self) -> bool:
        return self.kind in ("reflect_full_doc", "reflect_policy_map")


@dataclass(frozen=True)
class Limits:
    max_steps: int = 80


@dataclass(frozen=True)
class AgentAction:
    kind: str  # "say" | "call"
    text: str = ""
    tool: str = ""
    args: dict = field(default_factory=dict)

    @staticmethod
    def say(text: str) -> "AgentAction":
        return AgentAction(kind="say", text=text)

    @staticmethod
    def call(tool: str, args: dict) -> "AgentAction":
        return AgentAction(kind="call", tool=tool, args=args)


class AgentPolicy(Protocol):
    def next_action(self, history: Sequence[Event]) -> Optional[AgentAction]: ...


class UserPolicy(Protocol):
    def next_message(self, history: Sequence[Event]) -> Optional[str]: ...


class Environment(Protocol):
    """Tool execution plus the read-only view guards are allowed."""

    @property
    def now(self) -> datetime: ...

    def is_mutating(self, tool: str) -> bool: ...

    def execute(self, tool: str, args: dict) -> object: ...

    def read_api(self) -> DataApi: ...


class Trajectory:
    def __init__(self, events: Sequence[Event] = ()):
        self.events: list[Event] = list(events)
        self.truncated = False

    def append(self, ev: Event) -> None:
        self.events.append(ev)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def alerts(self) -> list[GuardAlert]:
        return [e for e in self.events if isinstance(e, GuardAlert)]

    def executed_calls(self) -> list[ToolCall]:
        return [
            e for e in self.events if isinstance(e, ToolCall) and e.allowed
        ]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"schema": TRAJECTORY_SCHEMA})]
        lines += [
            json.dumps(event_to_json(e), ensure_ascii=False) for e in self.events
        ]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "Trajectory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = json.loads(lines[0])
        if header.get("schema") != TRAJECTORY_SCHEMA:
            raise ValueError(f"unknown trajectory schema {header.get('schema')!r}")
        return Trajectory([event_from_json(json.loads(ln)) for ln in lines[1:]])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())


class ScriptedUser:
    """Plays messages in order; ends the conversation when exhausted."""

    def __init__(self, messages: Sequence[str]):
        self._messages = list(messages)
        self._i = 0

    def next_message(self, history) -> Optional[str]:
        if self._i >= len(self._messages):
            return None
        msg = self._messages[self._i]
        self._i += 1
        return msg


class ScriptedAgent:
    """Deterministic agent for tests and the benchmark corpus.

    Advisory injections never change its behavior. A blocking denial of
    its latest call makes it relay the explanation to the user once
    (``retry_denied`` retries the same call instead, for livelock
    exercises)."""

    def __init__(self, steps: Sequence[AgentAction], retry_denied: bool = False):
        self._steps = list(steps)
        self._i = 0
        self.retry_denied = retry_denied
        self._last_call: AgentAction | None = None

    def next_action(self, history: Sequence[Event]) -> Optional[AgentAction]:
        blocked = self._last_call is not None and _last_call_blocked(
            history, self._last_call.tool
        )
        if blocked:
            denied = self._last_call
            self._last_call = None
            if self.retry_denied:
                self._last_call = denied
                return denied
            alert = _last_blocking_alert(history)
            text = alert.explanation if alert else "that action is not allowed"
            return AgentAction.say(f"I cannot do that: {text}")
        if self._i >= len(self._steps):
            return None
        action = self._steps[self._i]
        self._i += 1
        self._last_call = action if action.kind == "call" else None
        return action


def _last_call_blocked(history: Sequence[Event], tool: str) -> bool:
    for ev in reversed(history):
        if isinstance(ev, ToolCall):
            return ev.name == tool and not ev.allowed
        if isinstance(ev, (UserMessage, AssistantMessage)):
            return False
    return False


def _last_blocking_alert(history: Sequence[Event]) -> GuardAlert | None:
    for ev in reversed(history):
        if isinstance(ev, GuardAlert) and ev.blocking:
            return ev
    return None


def run_conversation(
    agent: AgentPolicy,
    user: UserPolicy,
    env: Environment,
    guards: Module | None,
    strategy: EnforcementStrategy,
    limits: Limits = Limits(),
) -> Trajectory:
    traj = Trajectory()
    deny_streak: dict[str, int] = {}

    msg = user.next_message(traj.events)
    if msg is None:
        return traj
    traj.append(UserMessage(msg))

    steps = 0
    while True:
        steps += 1
        if steps > limits.max_steps:
            traj.append(SystemInjection(STEP_LIMIT_MARKER))
            traj.truncated = True
            return traj

        action = agent.next_action(traj.events)
        if action is None or action.kind == "say":
            if action is not None:
                traj.append(AssistantMessage(action.text))
            msg = user.next_message(traj.events)
            if msg is None:
                return traj
            traj.append(UserMessage(msg))
            continue

        tool, args = action.tool, action.args
        guarded = (
            guards is not None
            and env.is_mutating(tool)
            and guards.guard_for(tool) is not None
        )

        if strategy.advisory:
            traj.append(SystemInjection(strategy.advisory_text))
            if guarded:
                verdict = _evaluate_guard(guards, tool, args, env, traj, strategy)
                if not verdict.allowed:
                    traj.append(
                        GuardAlert(
                            policy_id=verdict.policy_id,
                            explanation=verdict.explanation,
                            blocking=False,
                        )
                    )
            _execute(env, tool, args, traj)
            continue

        if strategy.blocking and guarded:
            verdict = _evaluate_guard(guards, tool, args, env, traj, strategy)
            if not verdict.allowed:
                traj.append(
                    GuardAlert(
                        policy_id=verdict.policy_id,
                        explanation=verdict.explanation,
                        blocking=True,
                    )
                )
                traj.append(ToolCall(name=tool, args=args, allowed=False))
                traj.append(
                    SystemInjection(
                        f"Action blocked: policy {verdict.policy_id} was"
                        f" violated. {verdict.explanation} Revise your"
                        " decision."
                    )
                )
                deny_streak[tool] = deny_streak.get(tool, 0) + 1
                if deny_streak[tool] >= strategy.deny_retry_budget:
                    # livelock cutoff: force the agent to talk to the user
                    traj.append(
                        AssistantMessage(
                            f"I am unable to run {tool}:"
                            f" {verdict.explanation}"
                        )
                    )
                    deny_streak[tool] = 0
                    msg = user.next_message(traj.events)
                    if msg is None:
                        return traj
                    traj.append(UserMessage(msg))
                continue
            deny_streak[tool] = 0
            _execute(env, tool, args, traj)
            continue

        _execute(env, tool, args, traj)


def _evaluate_guard(
    guards: Module,
    tool: str,
    args: dict,
    env: Environment,
    traj: Trajectory,
    strategy: EnforcementStrategy,
) -> Verdict:
    ctx = GuardContext(
        now=env.now,
        history=list(traj.events),
        data_api=env.read_api(),
    )
    try:
        return evaluate(guards, tool, args, ctx)
    except (GuardNotImplemented, BudgetExceeded, RuntimeFault) as e:
        if strategy.fail_mode == "open":
            return Verdict.allow()
        return Verdict.deny(
            GUARD_FAULT_POLICY,
            f"guard evaluation failed ({type(e).__name__}: {e});"
            " failing closed",
        )


def _execute(env: Environment, tool: str, args: dict, traj: Trajectory) -> None:
    traj.append(ToolCall(name=tool, args=args, allowed=True))
    try:
        payload = env.execute(tool, args)
    except ToolError as e:
        payload = {"error": str(e)}
    traj.append(ToolResult(payload))


@dataclass(frozen=True)
class AlertStats:
    task_types_triggered: int
    task_instances_flagged: int
    total_violations: int

    def to_json(self) -> dict:
        return {
            "task_types_triggered": self.task_types_triggered,
            "task_instances_flagged": self.task_instances_flagged,
            "total_violations": self.total_violations,
        }


def collect_alert_stats(
    labeled: Sequence[tuple[int, int, Trajectory]],
) -> AlertStats:
    """``labeled`` rows are (task_type, instance, trajectory)."""
    types: set[int] = set()
    instances: set[tuple[int, int]] = set()
    total = 0
    for task_type, instance, traj in labeled:
        alerts = traj.alerts()
        if alerts:
            types.add(task_type)
            instances.add((task_type, instance))
        total += len(alerts)
    return AlertStats(
        task_types_triggered=len(types),
        task_instances_flagged=len(instances),
        total_violations=total,
    )
