"""Acceptance criteria, one test per criterion.

Each criterion prints a single PASS/FAIL line (run with ``pytest -s`` to
see them on success; failures surface the line in the captured output).
Tolerances are pinned here, not deferred.
"""
import itertools
import time

import pytest

from toolguard.airline.bench import pass_hat_k, run_benchmark
from toolguard.airline.tasks import load_corpus
from toolguard.backends import ScriptedBackend
from toolguard.document import is_verbatim, perturb_document, segment
from toolguard.events import GuardAlert, ToolCall, ToolResult
from toolguard.forge import evaluate_tpr, forge_guard
from toolguard.lang import parse
from toolguard.mapeval import ReferenceSet, fuzzy_rand_index, reference_prf
from toolguard.runtime import EnforcementStrategy

from test_cli import REPLAY_DIR
from test_forge import (
    BROKEN_MAX_PAX,
    GOOD_MAX_PAX,
    MAX_PAX_ITEM,
    max_pax_tests,
)
from test_mapeval import classic_rand_index, partition_of, set_partitions

TOL = 1e-9


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{status}  {name}{suffix}")
    assert ok, f"{name}{suffix}"


class TestMetricOracles:
    def test_reference_prf_hand_fixture(self):
        gt = ReferenceSet.build("t", [
            "the quick brown fox jumps",
            "over the lazy dog today",
            "completely different reference text",
        ])
        pred = ReferenceSet.build("t", [
            "the quick brown fox jumps",
            "unrelated words entirely here",
        ])
        p, r, f1 = reference_prf(pred, gt, 0.6)
        ok = (
            abs(p - 0.5) <= TOL
            and abs(r - 1 / 3) <= TOL
            and abs(f1 - 0.4) <= TOL
        )
        report(
            "reference_prf hand fixture (0.5, 0.3333, 0.4) within 1e-9",
            ok,
            f"got ({p:.10f}, {r:.10f}, {f1:.10f})",
        )

    def test_fri_classic_reduction_exhaustive(self):
        mismatches = 0
        checked = 0
        for n in range(1, 7):
            elems = [f"e{i}" for i in range(n)]
            parts = list(set_partitions(elems))
            for pa, pb in itertools.product(parts, parts):
                la = {e: i for i, c in enumerate(pa) for e in c}
                lb = {e: i for i, c in enumerate(pb) for e in c}
                expected = classic_rand_index(la, lb)
                got = fuzzy_rand_index(partition_of(pa), partition_of(pb))
                checked += 1
                if got != pytest.approx(expected, abs=1e-12):
                    mismatches += 1
        report(
            "fuzzy RandIndex equals classic RandIndex, exhaustive n<=6",
            mismatches == 0,
            f"{checked} partition pairs compared",
        )

    def test_fri_multimembership_fixture(self):
        gt = partition_of([["r one", "r two"], ["r three"]])
        pred = partition_of([["r one"], ["r two", "r three"]])
        got = fuzzy_rand_index(pred, gt)
        report(
            "3-element multi-membership FRI fixture = 1/3 within 1e-9",
            abs(got - 1 / 3) <= TOL,
            f"got {got:.10f}",
        )

    def test_pass_hat_k_values_and_monotonicity(self):
        k1 = pass_hat_k([5], 10, 1)
        k2 = pass_hat_k([5], 10, 2)
        values_ok = abs(k1 - 0.5) <= TOL and abs(k2 - 10 / 45) <= TOL
        monotone = True
        for c in range(11):
            series = [pass_hat_k([c], 10, k) for k in range(1, 11)]
            if any(series[i + 1] > series[i] + 1e-12 for i in range(9)):
                monotone = False
        report(
            "pass^k: c=5,n=10 -> k1=0.5, k2=10/45; monotone over all c in 0..10",
            values_ok and monotone,
            f"k1={k1:.10f}, k2={k2:.10f}",
        )


class TestGuardSemantics:
    def test_reference_guards_on_heldout_suite(self, gt_module, heldout_suite, toolkit):
        per_tool_kinds = {}
        for t in heldout_suite:
            kinds = per_tool_kinds.setdefault(t.tool, {"allow": 0, "deny": 0})
            kinds[t.expected] += 1
        shape_ok = (
            len(heldout_suite) >= 24
            and len(per_tool_kinds) == 6
            and all(k["allow"] >= 2 and k["deny"] >= 2 for k in per_tool_kinds.values())
        )
        started = time.monotonic()
        rep = evaluate_tpr(gt_module, heldout_suite, toolkit)
        elapsed = time.monotonic() - started
        report(
            "reference guards: held-out suite TPR 1.0 in under 1 second",
            shape_ok and rep.tpr == 1.0 and elapsed < 1.0,
            f"{len(heldout_suite)} tests, TPR {rep.tpr:.3f}, {elapsed:.3f}s",
        )

    def test_constant_allow_breakdown(self, skeleton, toolkit, heldout_suite):
        guards = []
        for tool in toolkit.mutating_tools():
            guards.append(
                f"fun guard_{tool.name}(args: {tool.args_type_name},"
                " ctx: context) -> verdict { allow }"
            )
        module = parse(
            skeleton.type_decls + "\n" + skeleton.signatures + "\n"
            + "\n".join(guards),
            "allow_all.guard",
        )
        rep = evaluate_tpr(module, heldout_suite, toolkit)
        violations = sum(1 for t in heldout_suite if t.expected == "deny")
        ok = (
            rep.breakdown["violation_failure"] == violations
            and rep.breakdown["compliance_failure"] == 0
            and rep.breakdown["other"] == 0
        )
        report(
            "constant-allow guard fails exactly the violation tests",
            ok,
            f"breakdown {rep.breakdown}",
        )

    def test_stub_skeleton_scores_zero_all_other(self, skeleton, toolkit, heldout_suite):
        module = parse(skeleton.text, "skeleton.guard")
        rep = evaluate_tpr(module, heldout_suite, toolkit)
        ok = rep.tpr == 0.0 and rep.breakdown["other"] == len(heldout_suite)
        report(
            "stub skeleton scores TPR 0 with every failure classified other",
            ok,
            f"TPR {rep.tpr}, breakdown {rep.breakdown}",
        )


class TestTddLoop:
    def test_two_step_green_at_iteration_two(self, skeleton, toolkit):
        backend = ScriptedBackend(
            [{"source": BROKEN_MAX_PAX}, {"source": GOOD_MAX_PAX}]
        )
        tests = max_pax_tests()
        run = forge_guard(
            "book_reservation", [MAX_PAX_ITEM], tests, skeleton, backend,
            budget=8, toolkit=toolkit,
        )
        iter1_failures = [
            r for r in run.iterations[0].test_results if not r.passed
        ]
        green_sound = (
            run.status == "green"
            and evaluate_tpr(run.final_module, tests, toolkit).tpr == 1.0
        )
        ok = (
            run.status == "green"
            and len(run.iterations) == 2
            and bool(iter1_failures)
            and green_sound
        )
        report(
            "two-step backend: green at iteration 2, iteration-1 failures"
            " recorded, green implies forging TPR 1.0",
            ok,
            f"status {run.status}, iterations {len(run.iterations)}",
        )

    def test_always_broken_budget_three(self, skeleton, toolkit):
        backend = ScriptedBackend([{"source": "fun policy_max_passengers(("}] * 10)
        run = forge_guard(
            "book_reservation", [MAX_PAX_ITEM], max_pax_tests(), skeleton,
            backend, budget=3, toolkit=toolkit,
        )
        ok = run.status == "budget_exhausted" and len(run.iterations) == 3
        diag_ok = all(it.diagnostics for it in run.iterations)
        report(
            "always-broken backend with budget 3: exhausted after exactly"
            " 3 iterations, diagnostics recorded",
            ok and diag_ok,
            f"status {run.status}, iterations {len(run.iterations)}",
        )


@pytest.fixture(scope="module")
def benchmark_results(tasks_dir, gt_module):
    tasks = [t for t in load_corpus(tasks_dir) if t.violating]
    assert len(tasks) == 22
    started = time.monotonic()
    results = {}
    for kind in ("none", "toolguards", "reflect_full_doc", "reflect_policy_map"):
        guards = gt_module if kind != "none" else None
        strategy = EnforcementStrategy(kind=kind, advisory_text="Policy reminder.")
        results[kind] = run_benchmark(
            tasks, strategy, guards, trials=10, ks=(1, 2, 10), seed=0
        )
    results["elapsed"] = time.monotonic() - started
    results["tasks"] = tasks
    return results


class TestEndToEndEnforcement:
    def test_guards_beat_baseline_by_twenty_points(self, benchmark_results):
        none_p1 = benchmark_results["none"].report.value(1)
        tg_p1 = benchmark_results["toolguards"].report.value(1)
        flips = sum(
            1
            for (tid, c_none), (_tid2, c_tg) in zip(
                benchmark_results["none"].report.per_task,
                benchmark_results["toolguards"].report.per_task,
            )
            if c_none == 0 and c_tg == 10
        )
        elapsed = benchmark_results["elapsed"]
        ok = (tg_p1 - none_p1 >= 0.20) and flips >= 5 and elapsed < 30.0
        report(
            "22 tasks x 10 trials: toolguards pass^1 exceeds none by >= 0.20,"
            " >= 5 tasks flipped, under 30 seconds",
            ok,
            f"none {none_p1:.3f}, toolguards {tg_p1:.3f}, flips {flips},"
            f" {elapsed:.1f}s",
        )

    def test_reflection_is_advisory_only(self, benchmark_results):
        def executed_sequences(result):
            sequences = {}
            for task_type, instance, traj in result.trajectories:
                if instance == 0:
                    sequences[task_type] = [
                        (c.name, tuple(sorted((k, str(v)) for k, v in c.args.items())))
                        for c in traj.executed_calls()
                    ]
            return sequences

        base = executed_sequences(benchmark_results["none"])
        ok = all(
            executed_sequences(benchmark_results[kind]) == base
            for kind in ("reflect_full_doc", "reflect_policy_map")
        )
        report(
            "reflect strategies execute exactly the tool sequences of"
            " strategy none (advisory-only)",
            ok,
        )


class TestBlockingSoundness:
    def test_no_execution_follows_a_deny(self, benchmark_results, gt_map):
        """Replay audit over every benchmark trajectory of every strategy."""
        deployed = {it.id for it in gt_map.items} | {"guard_fault"}
        violations = []
        trajectories = 0
        for kind in ("none", "toolguards", "reflect_full_doc", "reflect_policy_map"):
            for task_type, instance, traj in benchmark_results[kind].trajectories:
                trajectories += 1
                events = traj.events
                for i, ev in enumerate(events):
                    if isinstance(ev, GuardAlert) and ev.blocking:
                        nxt = events[i + 1] if i + 1 < len(events) else None
                        if not (isinstance(nxt, ToolCall) and not nxt.allowed):
                            violations.append((kind, task_type, instance, i))
                        after = events[i + 2] if i + 2 < len(events) else None
                        if isinstance(after, ToolResult):
                            violations.append((kind, task_type, instance, i))
                    if isinstance(ev, GuardAlert) and ev.policy_id not in deployed:
                        violations.append(
                            (kind, task_type, instance, ev.policy_id)
                        )
        report(
            "zero mutating-tool executions follow a deny; every alert's"
            " policy id resolves in the deployed map",
            not violations,
            f"{trajectories} trajectories audited",
        )

    def test_blocked_tasks_left_environment_untouched(self, benchmark_results):
        """Any trajectory whose mutating calls were all blocked must have
        scored as goal == initial on the violating corpus."""
        tg = benchmark_results["toolguards"]
        tasks = {t.task_type: t for t in benchmark_results["tasks"]}
        ok = True
        for task_type, _instance, traj in tg.trajectories:
            task = tasks[task_type]
            mutated = [
                c for c in traj.executed_calls()
                if c.name in {
                    "book_reservation", "cancel_reservation",
                    "update_reservation_flights",
                    "update_reservation_passengers",
                    "update_reservation_baggages", "send_certificate",
                }
            ]
            succeeded = dict(tg.report.per_task)[task.id] == 10
            if not mutated and not succeeded:
                ok = False
        report(
            "fully blocked violating trajectories always score success"
            " (goal = untouched state)",
            ok,
        )


class TestPipelineDeterminism:
    def test_cmd_map_replay_three_runs_byte_identical(self, tmp_path, capsys):
        from toolguard.cli import main

        outs = []
        for i in range(3):
            out = tmp_path / f"m{i}.json"
            rc = main(
                ["map", "--backend", "replay", "--replay-dir", str(REPLAY_DIR),
                 "--out", str(out)]
            )
            assert rc == 0
            outs.append(out.read_bytes())
        capsys.readouterr()
        report(
            "cmd map with the replay backend: byte-identical map across 3 runs",
            outs[0] == outs[1] == outs[2],
            f"{len(outs[0])} bytes",
        )

    def test_verbatim_invariant_all_active_items(self, tmp_path, capsys):
        from toolguard.cli import main
        from toolguard.policy import PolicyMap

        out = tmp_path / "m.json"
        main(
            ["map", "--backend", "replay", "--replay-dir", str(REPLAY_DIR),
             "--out", str(out)]
        )
        capsys.readouterr()
        pmap = PolicyMap.from_json_text(out.read_text())
        doc_text = (
            __import__("pathlib").Path("src/toolguard/data/airline_policy.md")
            .read_text()
        )
        active = pmap.active_items()
        bad = [
            item.id
            for item in active
            for ref in item.references
            if not is_verbatim(ref, doc_text)
        ]
        report(
            "verbatim-reference invariant holds for 100% of active items",
            bool(active) and not bad,
            f"{len(active)} active items",
        )

    def test_perturbation_conditions_structural(self, policy_doc):
        from collections import Counter
        from importlib import resources

        ok = True
        for noise_kind in ("ood", "iid"):
            noise_text = (
                resources.files("toolguard")
                .joinpath(f"data/noise_{noise_kind}.md")
                .read_text()
            )
            noise = segment(noise_text)
            first = perturb_document(policy_doc, noise, "relevant_first")
            rev = perturb_document(policy_doc, noise, "relevant_last")
            if Counter(s.text for s in first.sentences) != Counter(
                s.text for s in rev.sentences
            ):
                ok = False
            if not first.raw_text.startswith(policy_doc.raw_text):
                ok = False
            if not rev.raw_text.endswith(policy_doc.raw_text):
                ok = False
        report(
            "perturbed documents: four input conditions, identical sentence"
            " multisets across orderings",
            ok,
        )
