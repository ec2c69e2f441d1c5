"""Runtime values and payload marshalling.

Guard values are plain Python objects: bool, int, Decimal, str,
datetime, timedelta, list, dict (records). Absent optional fields are
dropped from record dicts; MISSING is the transient lookup result.
JSON payloads crossing the data-api boundary are marshalled against the
declared types, so a guard never sees an untyped value.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from decimal import Decimal

from ..errors import RuntimeFault
from . import types as T


class _Missing:
    def __repr__(self):
        return "MISSING"


MISSING = _Missing()


@dataclass(frozen=True)
class Verdict:
    kind: str  # "allow" | "deny"
    policy_id: str = ""
    explanation: str = ""

    def __post_init__(self):
        if self.kind == "deny" and not (self.policy_id and self.explanation):
            raise ValueError("deny requires a policy id and an explanation")

    @property
    def allowed(self) -> bool:
        return self.kind == "allow"

    @staticmethod
    def allow() -> "Verdict":
        return Verdict(kind="allow")

    @staticmethod
    def deny(policy_id: str, explanation: str) -> "Verdict":
        return Verdict(kind="deny", policy_id=policy_id, explanation=explanation)

    def to_json(self) -> dict:
        if self.allowed:
            return {"verdict": "allow"}
        return {
            "verdict": "deny",
            "policy_id": self.policy_id,
            "explanation": self.explanation,
        }


def marshal(payload, t: T.Type, table: T.SchemaTable, where: str = "payload"):
    """Convert a JSON-ish payload into a typed guard value."""
    if isinstance(t, T.OptionalType):
        if payload is None:
            return MISSING
        return marshal(payload, t.elem, table, where)
    if payload is None:
        raise RuntimeFault(f"{where}: unexpected null")
    if t == T.BOOL:
        if isinstance(payload, bool):
            return payload
        raise RuntimeFault(f"{where}: expected bool, got {type(payload).__name__}")
    if t == T.INT:
        if isinstance(payload, bool) or not isinstance(payload, int):
            raise RuntimeFault(f"{where}: expected int, got {type(payload).__name__}")
        return payload
    if t == T.DECIMAL:
        if isinstance(payload, bool):
            raise RuntimeFault(f"{where}: expected number, got bool")
        if isinstance(payload, Decimal):
            return payload
        if isinstance(payload, int):
            return Decimal(payload)
        if isinstance(payload, float):
            return Decimal(str(payload))
        raise RuntimeFault(f"{where}: expected number, got {type(payload).__name__}")
    if t == T.TEXT:
        if isinstance(payload, str):
            return payload
        raise RuntimeFault(f"{where}: expected text, got {type(payload).__name__}")
    if t == T.TIMESTAMP:
        if isinstance(payload, datetime):
            return payload
        if isinstance(payload, str):
            try:
                return datetime.fromisoformat(payload)
            except ValueError as e:
                raise RuntimeFault(f"{where}: bad timestamp {payload!r}") from e
        raise RuntimeFault(f"{where}: expected timestamp, got {type(payload).__name__}")
    if t == T.DURATION:
        # durations in payloads are numbers of hours
        if isinstance(payload, timedelta):
            return payload
        if isinstance(payload, (int, float)) and not isinstance(payload, bool):
            return timedelta(hours=payload)
        raise RuntimeFault(f"{where}: expected duration, got {type(payload).__name__}")
    if isinstance(t, T.ListType):
        if not isinstance(payload, list):
            raise RuntimeFault(f"{where}: expected list, got {type(payload).__name__}")
        return [
            marshal(item, t.elem, table, f"{where}[{i}]")
            for i, item in enumerate(payload)
        ]
    if isinstance(t, T.NamedType):
        d = table.resolve(t.name)
        if isinstance(d, T.EnumSchema):
            if isinstance(payload, str) and payload in d.members:
                return payload
            raise RuntimeFault(
                f"{where}: {payload!r} is not a member of enum {t.name}"
            )
        if isinstance(d, T.RecordSchema):
            return marshal_record(payload, d, table, where)
        raise RuntimeFault(f"{where}: unknown type {t.name}")
    raise RuntimeFault(f"{where}: cannot marshal into {t.render()}")


def marshal_record(
    payload, schema: T.RecordSchema, table: T.SchemaTable, where: str
) -> dict:
    if not isinstance(payload, dict):
        raise RuntimeFault(
            f"{where}: expected record {schema.name}, got {type(payload).__name__}"
        )
    known = {f.name for f in schema.fields}
    unknown = set(payload) - known
    if unknown:
        raise RuntimeFault(
            f"{where}: unknown field(s) {sorted(unknown)} for {schema.name}"
        )
    out: dict = {}
    for f in schema.fields:
        if f.name not in payload or payload[f.name] is None:
            if not f.optional:
                raise RuntimeFault(
                    f"{where}: missing required field {f.name!r} of {schema.name}"
                )
            continue
        out[f.name] = marshal(
            payload[f.name], f.type, table, f"{where}.{f.name}"
        )
    return out
