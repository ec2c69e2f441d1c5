"""Conversation/trajectory events.

Shared by the guard interpreter (which reads them as chat history) and
the agent runtime (which appends them). Serialized one JSON object per
line; the stream is schema-versioned by a header record.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

TRAJECTORY_SCHEMA = "trajectory/v1"


@dataclass(frozen=True)
class UserMessage:
    text: str
    kind: str = field(default="user_message", init=False)


@dataclass(frozen=True)
class AssistantMessage:
    text: str
    kind: str = field(default="assistant_message", init=False)


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: dict
    allowed: bool = True
    kind: str = field(default="tool_call", init=False)


@dataclass(frozen=True)
class ToolResult:
    payload: Any
    kind: str = field(default="tool_result", init=False)


@dataclass(frozen=True)
class GuardAlert:
    policy_id: str
    explanation: str
    blocking: bool
    kind: str = field(default="guard_alert", init=False)


@dataclass(frozen=True)
class SystemInjection:
    text: str
    kind: str = field(default="system_injection", init=False)


Event = (
    UserMessage | AssistantMessage | ToolCall | ToolResult
    | GuardAlert | SystemInjection
)

_KINDS = {
    "user_message": UserMessage,
    "assistant_message": AssistantMessage,
    "tool_call": ToolCall,
    "tool_result": ToolResult,
    "guard_alert": GuardAlert,
    "system_injection": SystemInjection,
}


def event_to_json(ev: Event) -> dict:
    out = {"kind": ev.kind}
    for key, value in ev.__dict__.items():
        if key != "kind":
            out[key] = value
    return out


def event_from_json(obj: dict) -> Event:
    kind = obj.get("kind")
    cls = _KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown event kind {kind!r}")
    fields = {k: v for k, v in obj.items() if k != "kind"}
    return cls(**fields)
