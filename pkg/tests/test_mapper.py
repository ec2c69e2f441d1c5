"""Stage validation, repair loops, and pipeline determinism."""
import json

import pytest

from toolguard.backends import RecordingBackend, ReplayBackend, ScriptedBackend
from toolguard.document import segment
from toolguard.errors import BackendError, ValidationError
from toolguard.lang import types as T
from toolguard.mapper import (
    STAGES,
    MapperConfig,
    run_pipeline,
    run_stage,
)
from toolguard.policy import PolicyItem, PolicyMap
from toolguard.toolkit import ParamSpec, ToolSpec, Toolkit

DOC_TEXT = """\
# Cancellation Policy

All reservations can be canceled within 24 hours of booking, or if the \
airline canceled the flight. The agent must obtain explicit customer \
confirmation before canceling a reservation. Refunds go back to the \
original payment method.
"""

R1 = (
    "All reservations can be canceled within 24 hours of booking, or if"
    " the airline canceled the flight."
)
R2 = (
    "The agent must obtain explicit customer confirmation before canceling"
    " a reservation."
)


@pytest.fixture()
def doc():
    return segment(DOC_TEXT)


@pytest.fixture()
def kit():
    return Toolkit(
        tools=[
            ToolSpec(
                name="get_reservation_details",
                description="lookup",
                params=(ParamSpec("reservation_id", T.TEXT),),
                returns=T.TEXT,
                mutating=False,
            ),
            ToolSpec(
                name="cancel_reservation",
                description="cancel",
                params=(ParamSpec("reservation_id", T.TEXT),),
                returns=T.TEXT,
                mutating=True,
            ),
        ],
        schemas={},
    )


def item_payload(id="flexible_cancellation", name="Flexible Cancellation Policy",
                 refs=(R1,), tool="cancel_reservation"):
    return {
        "id": id,
        "tool": tool,
        "name": name,
        "description": "Cancellation windows and eligibility.",
        "references": list(refs),
    }


class TestCreatePolicies:
    def test_replayed_mapping_content(self, doc, kit):
        """A scripted backend replaying the known-good cancellation
        mapping yields the expected item, verbatim reference included."""
        backend = ScriptedBackend([{"items": [item_payload()]}])
        pmap = run_stage(
            "create_policies", PolicyMap(doc.fingerprint), doc, kit, backend
        )
        assert len(pmap.items) == 1
        item = pmap.items[0]
        assert item.name == "Flexible Cancellation Policy"
        assert item.tool == "cancel_reservation"
        assert item.references[0].startswith(
            "All reservations can be canceled within 24 hours of booking"
        )

    def test_hallucinated_reference_reprompted(self, doc, kit):
        """A non-verbatim reference is rejected and the backend is
        re-prompted with the validation error."""
        bad = item_payload(refs=("Reservations evaporate after 24 hours.",))
        backend = ScriptedBackend(
            [{"items": [bad]}, {"items": [item_payload()]}]
        )
        pmap = run_stage(
            "create_policies", PolicyMap(doc.fingerprint), doc, kit, backend
        )
        assert len(pmap.items) == 1
        assert len(backend.requests) == 2
        assert "verbatim" in backend.requests[1].prompt

    def test_budget_exhaustion(self, doc, kit):
        bad = item_payload(refs=("not in the document",))
        backend = ScriptedBackend([{"items": [bad]}] * 5)
        with pytest.raises(ValidationError, match="after 3 attempts"):
            run_stage(
                "create_policies", PolicyMap(doc.fingerprint), doc, kit,
                backend, MapperConfig(repair_budget=3),
            )
        assert len(backend.requests) == 3

    def test_unknown_tool_rejected(self, doc, kit):
        backend = ScriptedBackend(
            [{"items": [item_payload(tool="warp_drive")]},
             {"items": [item_payload()]}]
        )
        pmap = run_stage(
            "create_policies", PolicyMap(doc.fingerprint), doc, kit, backend
        )
        assert pmap.items[0].tool == "cancel_reservation"

    def test_schema_violation_consumes_attempt(self, doc, kit):
        backend = ScriptedBackend(
            ["this is not json", {"items": [item_payload()]}]
        )
        pmap = run_stage(
            "create_policies", PolicyMap(doc.fingerprint), doc, kit, backend
        )
        assert len(pmap.items) == 1


class TestStageSemantics:
    def base_map(self, doc):
        return PolicyMap(
            doc.fingerprint,
            (
                PolicyItem.from_json({**item_payload(), "compliance_examples": [],
                                      "violation_examples": [], "status": "active"}),
            ),
        )

    def test_add_policies_appends(self, doc, kit):
        backend = ScriptedBackend(
            [{"items": [item_payload(id="confirm", name="Confirmation", refs=(R2,))]}]
        )
        pmap = run_stage("add_policies", self.base_map(doc), doc, kit, backend)
        assert [it.id for it in pmap.items] == ["flexible_cancellation", "confirm"]

    def test_add_policies_never_removes(self, doc, kit):
        backend = ScriptedBackend(
            [{"items": [item_payload(id="flexible_cancellation")]},
             {"items": []}]
        )
        pmap = run_stage("add_policies", self.base_map(doc), doc, kit, backend)
        assert len(pmap.items) == 1  # duplicate rejected, then empty add

    def test_split_preserves_references(self, doc, kit):
        """An item whose description joins two conditions with "or" is
        split; the union of references must be unchanged."""
        split = [
            item_payload(id="cancel_within_24h", name="24h window", refs=(R1,)),
            item_payload(id="cancel_airline_cancelled", name="Airline cancelled",
                         refs=(R1,)),
        ]
        backend = ScriptedBackend([{"items": split}])
        pmap = run_stage("split_and_merge", self.base_map(doc), doc, kit, backend)
        assert len(pmap.items) == 2
        refs_before = {R1.lower()}
        refs_after = {r.lower() for it in pmap.items for r in it.references}
        assert refs_before <= refs_after

    def test_split_losing_reference_rejected(self, doc, kit):
        lossy = [item_payload(id="other", refs=(R2,))]
        backend = ScriptedBackend([{"items": lossy}] * 3)
        with pytest.raises(ValidationError, match="reference text lost"):
            run_stage("split_and_merge", self.base_map(doc), doc, kit, backend)

    def test_review_archives_with_reason(self, doc, kit):
        backend = ScriptedBackend(
            [{"decisions": [{"id": "flexible_cancellation", "status": "archived",
                             "archive_reason": "needs post-invocation refund data"}]}]
        )
        pmap = run_stage("review", self.base_map(doc), doc, kit, backend)
        assert pmap.items[0].status == "archived"
        assert pmap.items[0].archive_reason

    def test_review_archive_without_reason_rejected(self, doc, kit):
        backend = ScriptedBackend(
            [{"decisions": [{"id": "flexible_cancellation", "status": "archived"}]}] * 3
        )
        with pytest.raises(ValidationError, match="requires a reason"):
            run_stage("review", self.base_map(doc), doc, kit, backend)

    def test_review_cannot_revive(self, doc, kit):
        archived = PolicyMap(
            doc.fingerprint,
            (self.base_map(doc).items[0].archived("cannot check pre-invocation"),),
        )
        backend = ScriptedBackend(
            [{"decisions": [{"id": "flexible_cancellation", "status": "active"}]}] * 3
        )
        with pytest.raises(ValidationError, match="cannot be revived"):
            run_stage("review", archived, doc, kit, backend)

    def test_reference_correction(self, doc, kit):
        backend = ScriptedBackend(
            [{"corrections": [{"id": "flexible_cancellation", "references": [R1, R2]}]}]
        )
        pmap = run_stage("reference_correction", self.base_map(doc), doc, kit, backend)
        assert len(pmap.items[0].references) == 2

    def test_create_examples_requires_full_coverage(self, doc, kit):
        backend = ScriptedBackend(
            [
                {"examples": [{"id": "flexible_cancellation",
                               "compliance_examples": ["booked 18 hours ago"],
                               "violation_examples": []}]},
                {"examples": [{"id": "flexible_cancellation",
                               "compliance_examples": ["booked 18 hours ago"],
                               "violation_examples": ["36 hours, no insurance"]}]},
            ]
        )
        pmap = run_stage("create_examples", self.base_map(doc), doc, kit, backend)
        assert pmap.items[0].compliance_examples
        assert pmap.items[0].violation_examples
        assert len(backend.requests) == 2

    def test_add_examples_is_monotone(self, doc, kit):
        seeded = PolicyMap(
            doc.fingerprint,
            (
                PolicyItem.from_json(
                    {**item_payload(),
                     "compliance_examples": ["within the window"],
                     "violation_examples": ["outside the window"],
                     "status": "active"}
                ),
            ),
        )
        backend = ScriptedBackend(
            [{"examples": [{"id": "flexible_cancellation",
                            "compliance_examples": ["airline cancelled the flight"],
                            "violation_examples": []}]}]
        )
        pmap = run_stage("add_examples", seeded, doc, kit, backend)
        item = pmap.items[0]
        assert item.compliance_examples == (
            "within the window", "airline cancelled the flight",
        )
        assert item.violation_examples == ("outside the window",)


class TestPipeline:
    def scripted_responses(self):
        return [
            {"items": [item_payload()]},
            {"items": [item_payload(id="confirm", name="Confirmation", refs=(R2,))]},
            {"items": [item_payload(),
                       item_payload(id="confirm", name="Confirmation", refs=(R2,))]},
            {"decisions": [{"id": "flexible_cancellation", "status": "active"},
                           {"id": "confirm", "status": "active"}]},
            {"corrections": []},
            {"examples": [
                {"id": "flexible_cancellation",
                 "compliance_examples": ["booked 18 hours ago"],
                 "violation_examples": ["36 hours after booking, no insurance"]},
                {"id": "confirm",
                 "compliance_examples": ["user says yes before the call"],
                 "violation_examples": ["agent cancels without asking"]},
            ]},
            {"examples": []},
        ]

    def test_full_pipeline_and_audit(self, doc, kit, tmp_path):
        audit = tmp_path / "audit.jsonl"
        out = tmp_path / "map.json"
        config = MapperConfig(audit_path=audit, map_out=out)
        backend = ScriptedBackend(self.scripted_responses())
        pmap = run_pipeline(doc, kit, backend, config)
        assert len(pmap.items) == 2
        assert all(
            it.compliance_examples and it.violation_examples
            for it in pmap.items
        )
        records = [json.loads(ln) for ln in audit.read_text().splitlines()]
        assert [r["stage"] for r in records] == list(STAGES)
        assert all(r["transcript_ids"] for r in records)
        assert out.exists()

    def test_replay_reproduces_bytes(self, doc, kit, tmp_path):
        archive = tmp_path / "archive"
        recording = RecordingBackend(ScriptedBackend(self.scripted_responses()), archive)
        first = run_pipeline(doc, kit, recording)
        second = run_pipeline(doc, kit, ReplayBackend(archive))
        third = run_pipeline(doc, kit, ReplayBackend(archive))
        assert first.to_json_text() == second.to_json_text() == third.to_json_text()

    def test_empty_toolkit_short_circuits(self, doc):
        backend = ScriptedBackend([])
        pmap = run_pipeline(doc, Toolkit(), backend)
        assert pmap.items == ()
        assert backend.requests == []

    def test_always_failing_backend(self, doc, kit, tmp_path):
        class Exploding:
            def generate(self, req):
                raise BackendError("backend down")

        audit = tmp_path / "audit.jsonl"
        with pytest.raises(BackendError):
            run_pipeline(doc, kit, Exploding(), MapperConfig(audit_path=audit))
        assert not audit.exists() or audit.read_text() == ""

    def test_partial_results_persisted(self, doc, kit, tmp_path):
        # create_policies succeeds, add_policies exhausts its budget
        out = tmp_path / "map.json"
        responses = [{"items": [item_payload()]}] + [
            {"items": [item_payload()]}  # duplicate id, always rejected
        ] * 3
        backend = ScriptedBackend(responses)
        with pytest.raises(ValidationError):
            run_pipeline(doc, kit, backend, MapperConfig(map_out=out))
        persisted = PolicyMap.from_json_text(out.read_text())
        assert [it.id for it in persisted.items] == ["flexible_cancellation"]
