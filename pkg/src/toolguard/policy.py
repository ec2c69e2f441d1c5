"""Policy items and per-tool policy maps.

The map is the buildtime contract between the document mapper, the
review service, and the guard forge. It serializes as an editable,
versioned JSON file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .document import PolicyDocument, is_verbatim
from .errors import ValidationError
from .toolkit import Toolkit

MAP_SCHEMA_VERSION = 1

POLICY_MAP_JSON_SCHEMA = {
    "type": "object",
    "required": ["version", "doc_fingerprint", "items"],
    "properties": {
        "version": {"type": "integer"},
        "doc_fingerprint": {"type": "string"},
        "items": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "id", "tool", "name", "description", "references",
                    "compliance_examples", "violation_examples", "status",
                ],
                "properties": {
                    "id": {"type": "string"},
                    "tool": {"type": "string"},
                    "name": {"type": "string"},
                    "description": {"type": "string"},
                    "references": {"type": "array", "items": {"type": "string"}},
                    "compliance_examples": {"type": "array", "items": {"type": "string"}},
                    "violation_examples": {"type": "array", "items": {"type": "string"}},
                    "status": {"enum": ["active", "archived"]},
                    "archive_reason": {"type": ["string", "null"]},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class PolicyItem:
    id: str
    tool: str
    name: str
    description: str
    references: tuple[str, ...] = ()
    compliance_examples: tuple[str, ...] = ()
    violation_examples: tuple[str, ...] = ()
    status: str = "active"
    archive_reason: str | None = None

    @property
    def active(self) -> bool:
        return self.status == "active"

    def archived(self, reason: str) -> "PolicyItem":
        return replace(self, status="archived", archive_reason=reason)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "tool": self.tool,
            "name": self.name,
            "description": self.description,
            "references": list(self.references),
            "compliance_examples": list(self.compliance_examples),
            "violation_examples": list(self.violation_examples),
            "status": self.status,
            "archive_reason": self.archive_reason,
        }

    @staticmethod
    def from_json(obj: dict) -> "PolicyItem":
        return PolicyItem(
            id=obj["id"],
            tool=obj["tool"],
            name=obj["name"],
            description=obj["description"],
            references=tuple(obj.get("references", [])),
            compliance_examples=tuple(obj.get("compliance_examples", [])),
            violation_examples=tuple(obj.get("violation_examples", [])),
            status=obj.get("status", "active"),
            archive_reason=obj.get("archive_reason"),
        )


@dataclass(frozen=True)
class PolicyMap:
    doc_fingerprint: str
    items: tuple[PolicyItem, ...] = ()

    def item(self, item_id: str) -> PolicyItem | None:
        for it in self.items:
            if it.id == item_id:
                return it
        return None

    def active_items(self) -> tuple[PolicyItem, ...]:
        return tuple(it for it in self.items if it.active)

    def items_for_tool(self, tool: str, active_only: bool = True):
        return tuple(
            it
            for it in self.items
            if it.tool == tool and (it.active or not active_only)
        )

    def tools(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for it in self.items:
            seen.setdefault(it.tool)
        return tuple(seen)

    def to_json(self) -> dict:
        return {
            "version": MAP_SCHEMA_VERSION,
            "doc_fingerprint": self.doc_fingerprint,
            "items": [it.to_json() for it in self.items],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @staticmethod
    def from_json(obj: dict) -> "PolicyMap":
        version = obj.get("version")
        if version != MAP_SCHEMA_VERSION:
            raise ValidationError(f"unsupported policy map version {version!r}")
        return PolicyMap(
            doc_fingerprint=obj["doc_fingerprint"],
            items=tuple(PolicyItem.from_json(it) for it in obj.get("items", [])),
        )

    @staticmethod
    def from_json_text(text: str) -> "PolicyMap":
        return PolicyMap.from_json(json.loads(text))


def item_problems(
    item: PolicyItem,
    doc: PolicyDocument,
    toolkit: Toolkit,
    require_examples: bool = True,
) -> list[str]:
    """Invariant check for one item; returns human-readable breaches."""
    problems = []
    if not item.id:
        problems.append("item id is empty")
    if toolkit.tool(item.tool) is None:
        problems.append(f"{item.id}: unknown tool {item.tool!r}")
    if item.status == "archived":
        if not item.archive_reason:
            problems.append(f"{item.id}: archived without a reason")
        return problems
    if item.status != "active":
        problems.append(f"{item.id}: unknown status {item.status!r}")
        return problems
    if not item.references:
        problems.append(f"{item.id}: active item has no references")
    for ref in item.references:
        if not is_verbatim(ref, doc.raw_text):
            problems.append(
                f"{item.id}: reference is not a verbatim span of the"
                f" document: {ref[:80]!r}"
            )
    if require_examples:
        if not item.compliance_examples:
            problems.append(f"{item.id}: active item has no compliance examples")
        if not item.violation_examples:
            problems.append(f"{item.id}: active item has no violation examples")
    return problems


def map_problems(
    pmap: PolicyMap,
    doc: PolicyDocument,
    toolkit: Toolkit,
    require_examples: bool = True,
) -> list[str]:
    problems = []
    if pmap.doc_fingerprint != doc.fingerprint:
        problems.append("map fingerprint does not match the document")
    seen: set[str] = set()
    for item in pmap.items:
        if item.id in seen:
            problems.append(f"duplicate item id {item.id!r}")
        seen.add(item.id)
        problems.extend(item_problems(item, doc, toolkit, require_examples))
    return problems


def require_valid_map(
    pmap: PolicyMap,
    doc: PolicyDocument,
    toolkit: Toolkit,
    require_examples: bool = True,
) -> None:
    problems = map_problems(pmap, doc, toolkit, require_examples)
    if problems:
        raise ValidationError("; ".join(problems))
