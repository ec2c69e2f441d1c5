#!/usr/bin/env python3
"""Regenerates the committed replay archive for the airline mapping
pipeline. The scripted responses replay the hand-annotated ground-truth
map, so a replay-backend pipeline run reproduces airline_gt_map.json
byte for byte. Rerun whenever the policy document, the stage prompts, or
the GT map change."""
import json
import shutil
from pathlib import Path

from toolguard.backends import RecordingBackend, ScriptedBackend
from toolguard.document import segment
from toolguard.mapper import run_pipeline
from toolguard.openapi import parse_openapi

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "toolguard" / "data"
ARCHIVE = ROOT / "tests" / "data" / "replay_map"


def scripted_responses(gt: dict) -> list:
    items = [
        {k: it[k] for k in ("id", "tool", "name", "description", "references")}
        for it in gt["items"]
    ]
    examples = [
        {
            "id": it["id"],
            "compliance_examples": it["compliance_examples"],
            "violation_examples": it["violation_examples"],
        }
        for it in gt["items"]
    ]
    return [
        {"items": items},
        {"items": []},
        {"items": items},
        {"decisions": [{"id": it["id"], "status": "active"} for it in gt["items"]]},
        {"corrections": []},
        {"examples": examples},
        {"examples": []},
    ]


def main():
    gt_text = (DATA / "airline_gt_map.json").read_text()
    gt = json.loads(gt_text)
    doc = segment((DATA / "airline_policy.md").read_text())
    kit = parse_openapi((DATA / "airline_openapi.json").read_text())
    if ARCHIVE.exists():
        shutil.rmtree(ARCHIVE)
    backend = RecordingBackend(ScriptedBackend(scripted_responses(gt)), ARCHIVE)
    pmap = run_pipeline(doc, kit, backend)
    if pmap.to_json_text() != gt_text:
        raise SystemExit("pipeline replay does not reproduce the GT map")
    print(f"archive written: {len(list(ARCHIVE.glob('*.json')))} transcripts")


if __name__ == "__main__":
    main()
