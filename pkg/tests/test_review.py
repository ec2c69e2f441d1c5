"""Review API: coverage authority, editing invariants, approval locks."""
import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings
from hypothesis import strategies as st

from toolguard.backends import ScriptedBackend
from toolguard.document import segment
from toolguard.forge import synthesize_tests
from toolguard.policy import PolicyMap
from toolguard.review import ReviewStore, compute_coverage, create_app


@pytest.fixture()
def client(tmp_path, toolkit, gt_map, policy_text):
    store = ReviewStore(tmp_path / "maps", toolkit)
    store.create("airline", gt_map, policy_text)
    app = create_app(store)
    return TestClient(app)


class TestLoadAndCoverage:
    def test_get_map(self, client, gt_map):
        r = client.get("/maps/airline")
        assert r.status_code == 200
        body = r.json()
        assert body["approved"] is False
        assert len(body["map"]["items"]) == len(gt_map.items)
        assert body["item_revisions"]["max_passengers"] == 1

    def test_404_for_unknown_map(self, client):
        assert client.get("/maps/nope").status_code == 404

    def test_coverage_matches_server_fixture(self, client, gt_map, policy_doc):
        r = client.get("/maps/airline/coverage")
        assert r.status_code == 200
        body = r.json()
        fixture = compute_coverage(gt_map, policy_doc)
        assert body["sentences"] == fixture["sentences"]
        assert body["uncovered"] == fixture["uncovered"]
        assert body["per_tool"] == fixture["per_tool"]

    def test_uncovered_exactly_unreferenced_sentences(self, client, gt_map, policy_doc):
        """Uncovered = sentences no active item references."""
        from toolguard.document import reference_spans

        covered = set()
        for item in gt_map.items:
            if not item.active:
                continue
            for ref in item.references:
                for start, end in reference_spans(ref, policy_doc.raw_text):
                    for s in policy_doc.sentences:
                        if s.start < end and start < s.end:
                            covered.add(s.index)
        expected = [s.index for s in policy_doc.sentences if s.index not in covered]
        r = client.get("/maps/airline/coverage")
        assert r.json()["uncovered"] == expected
        assert expected  # headers and filler exist, so some are uncovered

    def test_multi_membership_reference_covers_both_items(self, client):
        """The booking-verification sentence grounds two policy items."""
        r = client.get("/maps/airline/coverage")
        shared = [
            s for s in r.json()["sentences"]
            if "flight_available" in s["item_ids"]
            and "seat_availability" in s["item_ids"]
        ]
        assert shared

    def test_empty_map_all_uncovered(self, tmp_path, toolkit, policy_text):
        store = ReviewStore(tmp_path / "maps2", toolkit)
        doc = segment(policy_text)
        store.create("empty", PolicyMap(doc.fingerprint), policy_text)
        client = TestClient(create_app(store))
        body = client.get("/maps/empty/coverage").json()
        assert body["uncovered"] == [s.index for s in doc.sentences]

    def test_archived_items_do_not_cover(self, client):
        before = client.get("/maps/airline/coverage").json()
        r = client.patch(
            "/maps/airline/items/max_passengers",
            json={"status": "archived", "archive_reason": "testing coverage"},
        )
        assert r.status_code == 200
        after = client.get("/maps/airline/coverage").json()
        assert len(after["uncovered"]) > len(before["uncovered"])


class TestEditing:
    def test_add_violation_example_persists(self, client):
        item = client.get("/maps/airline").json()["map"]["items"][0]
        examples = item["violation_examples"] + ["an entirely new violation case"]
        r = client.patch(
            f"/maps/airline/items/{item['id']}",
            json={"violation_examples": examples, "revision": 1},
        )
        assert r.status_code == 200
        reloaded = client.get("/maps/airline").json()["map"]["items"][0]
        assert reloaded["violation_examples"][-1] == "an entirely new violation case"

    def test_non_verbatim_reference_rejected_inline(self, client):
        r = client.patch(
            "/maps/airline/items/max_passengers",
            json={"references": ["this sentence is not in the document"]},
        )
        assert r.status_code == 422
        assert "verbatim" in r.json()["detail"]

    def test_emptying_examples_rejected(self, client):
        r = client.patch(
            "/maps/airline/items/max_passengers",
            json={"compliance_examples": []},
        )
        assert r.status_code == 422

    def test_revision_conflict(self, client):
        ok = client.patch(
            "/maps/airline/items/max_passengers",
            json={"name": "Passenger Cap", "revision": 1},
        )
        assert ok.status_code == 200
        stale = client.patch(
            "/maps/airline/items/max_passengers",
            json={"name": "Racing Edit", "revision": 1},
        )
        assert stale.status_code == 409

    def test_create_and_delete_item(self, client, policy_text):
        new_item = {
            "id": "no_smoking",
            "tool": "book_reservation",
            "name": "No Smoking",
            "description": "x",
            "references": [
                "Each reservation is for a single origin, destination, and cabin class."
            ],
            "compliance_examples": ["c"],
            "violation_examples": ["v"],
            "status": "active",
            "archive_reason": None,
        }
        r = client.post("/maps/airline/items", json=new_item)
        assert r.status_code == 200
        assert client.post("/maps/airline/items", json=new_item).status_code == 409
        r = client.delete("/maps/airline/items/no_smoking")
        assert r.status_code == 200
        ids = [i["id"] for i in client.get("/maps/airline").json()["map"]["items"]]
        assert "no_smoking" not in ids

    def test_audit_trail_records_operations(self, client):
        client.patch(
            "/maps/airline/items/max_passengers",
            json={"name": "Passenger Cap"},
        )
        client.post("/maps/airline/approve")
        audit = client.get("/maps/airline/audit").json()["audit"]
        assert {"op": "patch", "item": "max_passengers"} in audit
        assert any(a["op"] == "approve" for a in audit)


class TestApproval:
    def test_approve_locks_edits(self, client):
        r = client.post("/maps/airline/approve")
        assert r.status_code == 200
        assert r.json()["approved"] is True
        r = client.patch(
            "/maps/airline/items/max_passengers", json={"name": "X"}
        )
        assert r.status_code == 409
        assert client.delete("/maps/airline/items/max_passengers").status_code == 409
        assert (
            client.post("/maps/airline/items", json={"id": "x"}).status_code == 409
        )

    def test_coverage_still_readable_after_approval(self, client):
        client.post("/maps/airline/approve")
        assert client.get("/maps/airline/coverage").status_code == 200


class TestEditAffectsSynthesis:
    def synth_backend(self, items):
        """One response per item, one test per example."""
        def tests_for(item):
            out = []
            for kind, examples in (
                ("compliance", item.compliance_examples),
                ("violation", item.violation_examples),
            ):
                for i, _ in enumerate(examples):
                    out.append(
                        {
                            "id": f"{item.id}_{kind}_{i}",
                            "source_example": {"kind": kind, "index": i},
                            "args": {"reservation_id": "RESX"},
                            "history": [],
                            "mocks": [],
                            "expected": "allow" if kind == "compliance" else "deny",
                        }
                    )
            return {"tests": out}

        return ScriptedBackend([tests_for(it) for it in items])

    def count_tests(self, pmap, toolkit, tool):
        items = list(pmap.items_for_tool(tool))
        backend = self.synth_backend(items)
        total = 0
        for item in items:
            total += len(synthesize_tests(item, toolkit, backend))
        return total

    def test_delete_and_add_change_test_counts(self, client, toolkit):
        """Deleting an item removes its tests; adding one violation
        example adds exactly one test on the next synthesis run."""
        tool = "cancel_reservation"
        before_map = PolicyMap.from_json(
            client.get("/maps/airline").json()["map"]
        )
        before_count = self.count_tests(before_map, toolkit, tool)
        deleted_item = before_map.item("cancellation_confirmation")
        deleted_tests = len(deleted_item.compliance_examples) + len(
            deleted_item.violation_examples
        )

        assert client.delete(
            "/maps/airline/items/cancellation_confirmation"
        ).status_code == 200
        remaining = PolicyMap.from_json(client.get("/maps/airline").json()["map"])
        flex = remaining.item("flexible_cancellation")
        client.patch(
            "/maps/airline/items/flexible_cancellation",
            json={
                "violation_examples": list(flex.violation_examples)
                + ["cancel a basic economy ticket two days after booking"]
            },
        )

        after_map = PolicyMap.from_json(client.get("/maps/airline").json()["map"])
        after_count = self.count_tests(after_map, toolkit, tool)
        assert after_count == before_count - deleted_tests + 1


class TestLosslessEditing:
    @settings(max_examples=25, deadline=None)
    @given(data=st.data())
    def test_random_edit_sequences_keep_invariants(
        self, data, toolkit, gt_map, policy_text, tmp_path_factory
    ):
        """Whatever a client sends, the stored map either keeps all item
        invariants or the request is rejected; the store never holds a
        corrupt map."""
        from toolguard.policy import map_problems

        store = ReviewStore(
            tmp_path_factory.mktemp("maps"), toolkit
        )
        store.create("m", gt_map, policy_text)
        client = TestClient(create_app(store))
        doc = segment(policy_text)

        sentences = [s.text for s in doc.sentences]
        ids = [it.id for it in gt_map.items]
        for _ in range(data.draw(st.integers(1, 6))):
            op = data.draw(st.sampled_from(["patch", "post", "delete"]))
            if op == "patch":
                item_id = data.draw(st.sampled_from(ids))
                field = data.draw(
                    st.sampled_from(
                        ["name", "references", "violation_examples", "status"]
                    )
                )
                if field == "name":
                    patch = {"name": data.draw(st.text(max_size=20))}
                elif field == "references":
                    good = data.draw(st.booleans())
                    ref = (
                        data.draw(st.sampled_from(sentences))
                        if good
                        else "hallucinated span " + data.draw(st.text("xyz", max_size=8))
                    )
                    patch = {"references": [ref]}
                elif field == "violation_examples":
                    patch = {
                        "violation_examples": data.draw(
                            st.lists(st.text(min_size=1, max_size=10), max_size=2)
                        )
                    }
                else:
                    patch = {"status": "archived"}
                    if data.draw(st.booleans()):
                        patch["archive_reason"] = "edited away"
                client.patch(f"/maps/m/items/{item_id}", json=patch)
            elif op == "post":
                client.post(
                    "/maps/m/items",
                    json={
                        "id": "gen_" + data.draw(st.text("abc", min_size=1, max_size=5)),
                        "tool": data.draw(
                            st.sampled_from(["cancel_reservation", "warp_drive"])
                        ),
                        "name": "gen",
                        "description": "",
                        "references": [data.draw(st.sampled_from(sentences))],
                        "compliance_examples": ["c"],
                        "violation_examples": ["v"],
                        "status": "active",
                    },
                )
            else:
                client.delete(f"/maps/m/items/{data.draw(st.sampled_from(ids))}")

            stored = PolicyMap.from_json(client.get("/maps/m").json()["map"])
            assert map_problems(stored, doc, toolkit, require_examples=True) == []
