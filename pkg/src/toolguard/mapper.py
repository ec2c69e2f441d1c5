"""Staged document-to-policy mapping pipeline.

Seven stages run in a fixed order: create_policies, add_policies,
split_and_merge, review, reference_correction, create_examples,
add_examples. The backend proposes; the framework disposes: every stage
output is validated against the map invariants (verbatim references,
monotone growth, reference conservation, archival soundness) and the
backend is re-prompted with the validation error up to a repair budget.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .backends import GenerationBackend, GenerationRequest, register_schema
from .document import PolicyDocument, normalize
from .errors import SchemaViolation, ValidationError
from .policy import PolicyItem, PolicyMap, item_problems
from .toolkit import Toolkit

STAGES = (
    "create_policies",
    "add_policies",
    "split_and_merge",
    "review",
    "reference_correction",
    "create_examples",
    "add_examples",
)

_ITEM_SCHEMA = {
    "type": "object",
    "required": ["id", "tool", "name", "description", "references"],
    "properties": {
        "id": {"type": "string"},
        "tool": {"type": "string"},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "references": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}

_ITEMS_OUT = {
    "type": "object",
    "required": ["items"],
    "properties": {"items": {"type": "array", "items": _ITEM_SCHEMA}},
    "additionalProperties": False,
}

_EXAMPLES_OUT = {
    "type": "object",
    "required": ["examples"],
    "properties": {
        "examples": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "compliance_examples": {"type": "array", "items": {"type": "string"}},
                    "violation_examples": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False,
            },
        }
    },
    "additionalProperties": False,
}

register_schema("stage/create_policies", _ITEMS_OUT)
register_schema("stage/add_policies", _ITEMS_OUT)
register_schema("stage/split_and_merge", _ITEMS_OUT)
register_schema(
    "stage/review",
    {
        "type": "object",
        "required": ["decisions"],
        "properties": {
            "decisions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "status"],
                    "properties": {
                        "id": {"type": "string"},
                        "status": {"enum": ["active", "archived"]},
                        "archive_reason": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
            }
        },
        "additionalProperties": False,
    },
)
register_schema(
    "stage/reference_correction",
    {
        "type": "object",
        "required": ["corrections"],
        "properties": {
            "corrections": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "references"],
                    "properties": {
                        "id": {"type": "string"},
                        "references": {"type": "array", "items": {"type": "string"}},
                    },
                    "additionalProperties": False,
                },
            }
        },
        "additionalProperties": False,
    },
)
register_schema("stage/create_examples", _EXAMPLES_OUT)
register_schema("stage/add_examples", _EXAMPLES_OUT)


@dataclass
class MapperConfig:
    repair_budget: int = 3
    audit_path: Path | None = None
    map_out: Path | None = None
    temperature: float = 0.0


@dataclass
class StageRun:
    stage: str
    map: PolicyMap
    transcript_ids: list[str] = field(default_factory=list)


def _template(name: str) -> str:
    return (
        resources.files("toolguard").joinpath(f"prompts/{name}.txt").read_text()
    )


def render_toolkit(toolkit: Toolkit) -> str:
    lines = []
    for tool in toolkit.tools:
        params = ", ".join(
            f"{p.name}: {p.type.render()}" + ("" if p.required else "?")
            for p in tool.params
        )
        mut = " [mutating]" if tool.mutating else ""
        lines.append(f"- {tool.name}({params}){mut}: {tool.description}")
    return "\n".join(lines)


def _build_request(
    stage: str,
    pmap: PolicyMap,
    doc: PolicyDocument,
    toolkit: Toolkit,
    config: MapperConfig,
    validation_error: str | None,
) -> GenerationRequest:
    error_blurb = ""
    if validation_error:
        error_blurb = (
            "\nYour previous response was rejected:"
            f" {validation_error}\nFix the problem and respond again.\n"
        )
    prompt = _template(stage).format(
        document=doc.raw_text,
        toolkit=render_toolkit(toolkit),
        policy_map=pmap.to_json_text(),
        validation_error=error_blurb,
    )
    return GenerationRequest.make(
        template_id=stage,
        prompt=prompt,
        schema_id=f"stage/{stage}",
        temperature=config.temperature,
    )


def run_stage(
    stage: str,
    pmap: PolicyMap,
    doc: PolicyDocument,
    toolkit: Toolkit,
    backend: GenerationBackend,
    config: MapperConfig | None = None,
) -> PolicyMap:
    return run_stage_with_trail(stage, pmap, doc, toolkit, backend, config).map


def run_stage_with_trail(
    stage: str,
    pmap: PolicyMap,
    doc: PolicyDocument,
    toolkit: Toolkit,
    backend: GenerationBackend,
    config: MapperConfig | None = None,
) -> StageRun:
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    if pmap.doc_fingerprint and pmap.doc_fingerprint != doc.fingerprint:
        raise ValidationError("map fingerprint does not match the document")
    config = config or MapperConfig()
    run = StageRun(stage=stage, map=pmap)
    error: str | None = None
    for _attempt in range(config.repair_budget):
        req = _build_request(stage, pmap, doc, toolkit, config, error)
        try:
            tx = backend.generate(req)
        except SchemaViolation as e:
            error = str(e)
            continue
        run.transcript_ids.append(tx.request_hash)
        try:
            run.map = _apply_stage(stage, pmap, tx.parsed, doc, toolkit)
            return run
        except ValidationError as e:
            error = str(e)
    raise ValidationError(
        f"stage {stage} failed after {config.repair_budget} attempts: {error}"
    )


def _require_items(parsed, pmap, doc, toolkit, require_examples=False):
    items = [
        PolicyItem(
            id=o["id"],
            tool=o["tool"],
            name=o["name"],
            description=o["description"],
            references=tuple(o.get("references", [])),
        )
        for o in parsed["items"]
    ]
    problems: list[str] = []
    seen = set(it.id for it in pmap.items)
    for it in items:
        if it.id in seen:
            problems.append(f"duplicate item id {it.id!r}")
        seen.add(it.id)
        problems.extend(item_problems(it, doc, toolkit, require_examples))
    if problems:
        raise ValidationError("; ".join(problems))
    return items


def _ref_union(items) -> set[str]:
    return {normalize(r) for it in items for r in it.references}


def _apply_stage(stage, pmap: PolicyMap, parsed, doc, toolkit) -> PolicyMap:
    if stage == "create_policies":
        if pmap.items:
            raise ValidationError("create_policies expects an empty map")
        items = _require_items(parsed, pmap, doc, toolkit)
        if not items and toolkit.tools:
            raise ValidationError("no policy items were extracted")
        return PolicyMap(doc.fingerprint, tuple(items))

    if stage == "add_policies":
        items = _require_items(parsed, pmap, doc, toolkit)
        return PolicyMap(doc.fingerprint, pmap.items + tuple(items))

    if stage == "split_and_merge":
        empty = PolicyMap(doc.fingerprint)
        items = _require_items(parsed, empty, doc, toolkit)
        before = _ref_union(pmap.items)
        after = _ref_union(items)
        lost = before - after
        if lost:
            raise ValidationError(
                "reference text lost across split_and_merge: "
                + "; ".join(sorted(r[:60] for r in lost))
            )
        return PolicyMap(doc.fingerprint, tuple(items))

    if stage == "review":
        decisions = {d["id"]: d for d in parsed["decisions"]}
        unknown = set(decisions) - {it.id for it in pmap.items}
        if unknown:
            raise ValidationError(f"decisions for unknown items: {sorted(unknown)}")
        out = []
        for it in pmap.items:
            d = decisions.get(it.id)
            if d is None or d["status"] == it.status:
                out.append(it)
                continue
            if it.status == "archived":
                raise ValidationError(f"{it.id}: archived items cannot be revived")
            reason = d.get("archive_reason", "")
            if not reason:
                raise ValidationError(f"{it.id}: archiving requires a reason")
            out.append(it.archived(reason))
        return PolicyMap(doc.fingerprint, tuple(out))

    if stage == "reference_correction":
        corrections = {c["id"]: c["references"] for c in parsed["corrections"]}
        unknown = set(corrections) - {it.id for it in pmap.items}
        if unknown:
            raise ValidationError(f"corrections for unknown items: {sorted(unknown)}")
        out = []
        problems: list[str] = []
        for it in pmap.items:
            if it.id not in corrections:
                out.append(it)
                continue
            if not it.active:
                problems.append(f"{it.id}: cannot correct an archived item")
                continue
            fixed = replace(it, references=tuple(corrections[it.id]))
            problems.extend(item_problems(fixed, doc, toolkit, False))
            out.append(fixed)
        if problems:
            raise ValidationError("; ".join(problems))
        return PolicyMap(doc.fingerprint, tuple(out))

    if stage in ("create_examples", "add_examples"):
        additions = {e["id"]: e for e in parsed["examples"]}
        unknown = set(additions) - {it.id for it in pmap.items}
        if unknown:
            raise ValidationError(f"examples for unknown items: {sorted(unknown)}")
        out = []
        for it in pmap.items:
            e = additions.get(it.id)
            if e is None:
                out.append(it)
                continue
            if not it.active:
                raise ValidationError(f"{it.id}: examples on an archived item")
            out.append(
                replace(
                    it,
                    compliance_examples=it.compliance_examples
                    + tuple(e.get("compliance_examples", [])),
                    violation_examples=it.violation_examples
                    + tuple(e.get("violation_examples", [])),
                )
            )
        if stage == "create_examples":
            missing = [
                it.id
                for it in out
                if it.active
                and not (it.compliance_examples and it.violation_examples)
            ]
            if missing:
                raise ValidationError(
                    "active items still lack compliance or violation examples: "
                    + ", ".join(missing)
                )
        return PolicyMap(doc.fingerprint, tuple(out))

    raise ValueError(f"unknown stage {stage!r}")


def _map_hash(pmap: PolicyMap) -> str:
    return hashlib.sha256(pmap.to_json_text().encode("utf-8")).hexdigest()


def run_pipeline(
    doc: PolicyDocument,
    toolkit: Toolkit,
    backend: GenerationBackend,
    config: MapperConfig | None = None,
) -> PolicyMap:
    """All seven stages in order, with a stage-by-stage audit trail and
    a map snapshot persisted after every completed stage."""
    config = config or MapperConfig()
    pmap = PolicyMap(doc_fingerprint=doc.fingerprint)
    if not toolkit.tools:
        _persist(pmap, config)
        return pmap
    for stage in STAGES:
        input_hash = _map_hash(pmap)
        run = run_stage_with_trail(stage, pmap, doc, toolkit, backend, config)
        pmap = run.map
        _persist(pmap, config)
        if config.audit_path is not None:
            record = {
                "stage": stage,
                "input_hash": input_hash,
                "output_hash": _map_hash(pmap),
                "transcript_ids": run.transcript_ids,
            }
            with config.audit_path.open("a") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return pmap


def _persist(pmap: PolicyMap, config: MapperConfig) -> None:
    if config.map_out is not None:
        config.map_out.write_text(pmap.to_json_text())
