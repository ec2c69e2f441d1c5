"""Review HTTP API for domain-expert editing of policy maps.

The server is the single authority on coverage: highlight sets derive
from normalized-reference-to-sentence matching computed here, never in a
client. Editing follows last-write-wins with per-item revision counters;
approval locks the map version, after which edits are rejected with a
conflict.
"""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .document import PolicyDocument, reference_spans, segment
from .policy import PolicyItem, PolicyMap, item_problems
from .toolkit import Toolkit


class ReviewStore:
    """File-backed map envelopes: the map plus review metadata."""

    def __init__(self, directory: str | Path, toolkit: Toolkit):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.toolkit = toolkit

    def _path(self, map_id: str) -> Path:
        if not map_id.replace("_", "").replace("-", "").isalnum():
            raise HTTPException(status_code=400, detail="bad map id")
        return self.directory / f"{map_id}.json"

    def create(self, map_id: str, pmap: PolicyMap, doc_text: str) -> None:
        envelope = {
            "map": pmap.to_json(),
            "doc_text": doc_text,
            "approved": False,
            "version": 1,
            "item_revisions": {it.id: 1 for it in pmap.items},
            "audit": [],
        }
        self._path(map_id).write_text(
            json.dumps(envelope, indent=2, ensure_ascii=False) + "\n"
        )

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))

    def load(self, map_id: str) -> dict:
        path = self._path(map_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no map {map_id!r}")
        return json.loads(path.read_text())

    def save(self, map_id: str, envelope: dict) -> None:
        self._path(map_id).write_text(
            json.dumps(envelope, indent=2, ensure_ascii=False) + "\n"
        )


def compute_coverage(pmap: PolicyMap, doc: PolicyDocument) -> dict:
    """Sentence-level highlight sets per tool plus the uncovered rest."""
    per_sentence: list[dict] = [
        {
            "index": s.index,
            "start": s.start,
            "end": s.end,
            "text": s.text,
            "tools": [],
            "item_ids": [],
        }
        for s in doc.sentences
    ]
    per_tool: dict[str, list[int]] = {}
    for item in pmap.items:
        if not item.active:
            continue
        for ref in item.references:
            for start, end in reference_spans(ref, doc.raw_text):
                for s in doc.sentences:
                    if s.start < end and start < s.end:
                        entry = per_sentence[s.index]
                        if item.tool not in entry["tools"]:
                            entry["tools"].append(item.tool)
                        if item.id not in entry["item_ids"]:
                            entry["item_ids"].append(item.id)
                        per_tool.setdefault(item.tool, [])
                        if s.index not in per_tool[item.tool]:
                            per_tool[item.tool].append(s.index)
    uncovered = [e["index"] for e in per_sentence if not e["item_ids"]]
    return {
        "sentences": per_sentence,
        "uncovered": uncovered,
        "per_tool": {k: sorted(v) for k, v in sorted(per_tool.items())},
    }


_EDITABLE = (
    "tool", "name", "description", "references",
    "compliance_examples", "violation_examples", "status", "archive_reason",
)


def create_app(store: ReviewStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="policy map review")

    def _load(map_id: str) -> tuple[dict, PolicyMap, PolicyDocument]:
        env = store.load(map_id)
        pmap = PolicyMap.from_json(env["map"])
        doc = segment(env["doc_text"])
        return env, pmap, doc

    def _require_editable(env: dict) -> None:
        if env.get("approved"):
            raise HTTPException(
                status_code=409,
                detail="map version is approved and locked; fork a new"
                " version to edit",
            )

    def _validate_item(item: PolicyItem, doc: PolicyDocument) -> None:
        problems = item_problems(item, doc, store.toolkit, require_examples=True)
        if problems:
            raise HTTPException(status_code=422, detail="; ".join(problems))

    @app.get("/maps")
    def list_maps():
        return {"maps": store.ids()}

    @app.get("/maps/{map_id}")
    def get_map(map_id: str):
        env, pmap, _doc = _load(map_id)
        return {
            "map_id": map_id,
            "map": pmap.to_json(),
            "approved": env["approved"],
            "version": env["version"],
            "item_revisions": env["item_revisions"],
        }

    @app.get("/maps/{map_id}/coverage")
    def get_coverage(map_id: str):
        env, pmap, doc = _load(map_id)
        coverage = compute_coverage(pmap, doc)
        coverage["map_id"] = map_id
        coverage["approved"] = env["approved"]
        return coverage

    @app.patch("/maps/{map_id}/items/{item_id}")
    def patch_item(map_id: str, item_id: str, patch: dict[str, Any]):
        env, pmap, doc = _load(map_id)
        _require_editable(env)
        item = pmap.item(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail=f"no item {item_id!r}")
        current_rev = env["item_revisions"].get(item_id, 1)
        given_rev = patch.pop("revision", None)
        if given_rev is not None and given_rev != current_rev:
            raise HTTPException(
                status_code=409,
                detail=f"revision conflict: item is at {current_rev}",
            )
        unknown = set(patch) - set(_EDITABLE)
        if unknown:
            raise HTTPException(
                status_code=422, detail=f"uneditable fields: {sorted(unknown)}"
            )
        fields = dict(patch)
        for key in ("references", "compliance_examples", "violation_examples"):
            if key in fields:
                fields[key] = tuple(fields[key])
        updated = replace(item, **fields)
        _validate_item(updated, doc)
        items = tuple(updated if it.id == item_id else it for it in pmap.items)
        env["map"] = PolicyMap(pmap.doc_fingerprint, items).to_json()
        env["item_revisions"][item_id] = current_rev + 1
        env["audit"].append({"op": "patch", "item": item_id})
        store.save(map_id, env)
        out = updated.to_json()
        out["revision"] = current_rev + 1
        return out

    @app.post("/maps/{map_id}/items")
    def post_item(map_id: str, body: dict[str, Any]):
        env, pmap, doc = _load(map_id)
        _require_editable(env)
        item = PolicyItem.from_json(body)
        if pmap.item(item.id) is not None:
            raise HTTPException(
                status_code=409, detail=f"item {item.id!r} already exists"
            )
        _validate_item(item, doc)
        env["map"] = PolicyMap(
            pmap.doc_fingerprint, pmap.items + (item,)
        ).to_json()
        env["item_revisions"][item.id] = 1
        env["audit"].append({"op": "create", "item": item.id})
        store.save(map_id, env)
        out = item.to_json()
        out["revision"] = 1
        return out

    @app.delete("/maps/{map_id}/items/{item_id}")
    def delete_item(map_id: str, item_id: str):
        env, pmap, _doc = _load(map_id)
        _require_editable(env)
        if pmap.item(item_id) is None:
            raise HTTPException(status_code=404, detail=f"no item {item_id!r}")
        items = tuple(it for it in pmap.items if it.id != item_id)
        env["map"] = PolicyMap(pmap.doc_fingerprint, items).to_json()
        env["item_revisions"].pop(item_id, None)
        env["audit"].append({"op": "delete", "item": item_id})
        store.save(map_id, env)
        return {"deleted": item_id}

    @app.post("/maps/{map_id}/approve")
    def approve(map_id: str):
        env, _pmap, _doc = _load(map_id)
        env["approved"] = True
        env["audit"].append({"op": "approve", "version": env["version"]})
        store.save(map_id, env)
        return {"map_id": map_id, "approved": True, "version": env["version"]}

    @app.get("/maps/{map_id}/audit")
    def get_audit(map_id: str):
        env = store.load(map_id)
        return {"map_id": map_id, "audit": env["audit"]}

    if static_dir is not None and Path(static_dir).exists():
        static_path = Path(static_dir)

        @app.get("/")
        def index():
            return FileResponse(static_path / "index.html")

        app.mount("/static", StaticFiles(directory=static_path), name="static")

    return app
