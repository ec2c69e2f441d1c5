"""Test-driven guard synthesis.

Policy examples become isolated guard test cases (with mocked data-api
responses); each policy function is then forged red-to-green against its
own tests, with parse/typecheck diagnostics and failing-test reports fed
back to the backend every iteration. The per-tool guard entry point is
assembled mechanically afterwards to call every policy function, and a
run only counts as green when the assembled guard passes the full
forging suite end to end.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

from . import lang
from .backends import GenerationBackend, GenerationRequest, register_schema
from .errors import (
    BackendError,
    BudgetExceeded,
    GuardNotImplemented,
    RuntimeFault,
    SchemaViolation,
    ValidationError,
)
from .events import Event, event_from_json, event_to_json
from .lang import GuardContext, MockDataApi, MockRule
from .lang import types as T
from .policy import PolicyItem
from .skeleton import SkeletonModule
from .toolkit import Toolkit

DEFAULT_FORGE_BUDGET = 8

register_schema(
    "forge/tests",
    {
        "type": "object",
        "required": ["tests"],
        "properties": {
            "tests": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "args", "expected"],
                    "properties": {
                        "id": {"type": "string"},
                        "source_example": {
                            "type": "object",
                            "required": ["kind", "index"],
                            "properties": {
                                "kind": {"enum": ["compliance", "violation"]},
                                "index": {"type": "integer"},
                            },
                        },
                        "args": {"type": "object"},
                        "now": {"type": "string"},
                        "history": {"type": "array", "items": {"type": "object"}},
                        "mocks": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["tool", "response"],
                                "properties": {
                                    "tool": {"type": "string"},
                                    "args": {"type": ["object", "null"]},
                                    "response": {},
                                },
                            },
                        },
                        "expected": {"enum": ["allow", "deny"]},
                    },
                    "additionalProperties": False,
                },
            }
        },
        "additionalProperties": False,
    },
)

register_schema(
    "forge/policy_source",
    {
        "type": "object",
        "required": ["source"],
        "properties": {"source": {"type": "string"}},
        "additionalProperties": False,
    },
)

_DEFAULT_NOW = datetime(2024, 5, 1, 10, 0, 0)


@dataclass(frozen=True)
class GuardTestCase:
    """One isolated-policy scenario with everything evaluation needs."""

    id: str
    tool: str
    policy_id: str
    args: dict
    expected: str  # "allow" | "deny"
    history: tuple[Event, ...] = ()
    mocks: tuple[MockRule, ...] = ()
    now: datetime = _DEFAULT_NOW
    source_example: tuple[str, int] | None = None

    @property
    def expected_policy_id(self) -> str | None:
        # a deny expectation always points at the targeted policy
        return self.policy_id if self.expected == "deny" else None

    def context(self) -> GuardContext:
        return GuardContext(
            now=self.now,
            history=list(self.history),
            data_api=MockDataApi(list(self.mocks)),
        )

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "tool": self.tool,
            "policy_id": self.policy_id,
            "args": self.args,
            "expected": self.expected,
            "now": self.now.isoformat(),
            "history": [event_to_json(e) for e in self.history],
            "mocks": [
                {"tool": m.tool, "args": m.args, "response": m.response}
                for m in self.mocks
            ],
        }
        if self.source_example:
            out["source_example"] = {
                "kind": self.source_example[0],
                "index": self.source_example[1],
            }
        return out

    @staticmethod
    def from_json(obj: dict) -> "GuardTestCase":
        src = obj.get("source_example")
        return GuardTestCase(
            id=obj["id"],
            tool=obj["tool"],
            policy_id=obj["policy_id"],
            args=obj["args"],
            expected=obj["expected"],
            history=tuple(event_from_json(e) for e in obj.get("history", [])),
            mocks=tuple(
                MockRule(m["tool"], m.get("args"), m["response"])
                for m in obj.get("mocks", [])
            ),
            now=datetime.fromisoformat(obj.get("now", _DEFAULT_NOW.isoformat())),
            source_example=(src["kind"], src["index"]) if src else None,
        )


def load_suite(path: str | Path) -> list[GuardTestCase]:
    obj = json.loads(Path(path).read_text())
    return [GuardTestCase.from_json(t) for t in obj["tests"]]


def dump_suite(tests, path: str | Path) -> None:
    obj = {"version": 1, "tests": [t.to_json() for t in tests]}
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# --- test synthesis ---

def _validate_test_payload(raw: dict, item: PolicyItem, toolkit: Toolkit) -> GuardTestCase:
    tool = toolkit.tool(item.tool)
    table = toolkit.schema_table()
    src = raw.get("source_example")
    test = GuardTestCase(
        id=raw["id"],
        tool=item.tool,
        policy_id=item.id,
        args=raw["args"],
        expected=raw["expected"],
        history=tuple(event_from_json(e) for e in raw.get("history", [])),
        mocks=tuple(
            MockRule(m["tool"], m.get("args"), m["response"])
            for m in raw.get("mocks", [])
        ),
        now=datetime.fromisoformat(raw["now"]) if raw.get("now") else _DEFAULT_NOW,
        source_example=(src["kind"], src["index"]) if src else None,
    )
    # dry-run the schemas: bad args or mock payloads fail here, not at
    # guard runtime
    lang.marshal(
        test.args, T.NamedType(tool.args_type_name), table, f"{test.id} args"
    )
    for m in test.mocks:
        mocked = toolkit.tool(m.tool)
        if mocked is None:
            raise ValidationError(f"{test.id}: mock for unknown tool {m.tool!r}")
        if mocked.mutating:
            raise ValidationError(
                f"{test.id}: mock for mutating tool {m.tool!r};"
                " guards may only consult read-only tools"
            )
        if mocked.returns is None:
            raise ValidationError(f"{test.id}: tool {m.tool!r} has no response")
        lang.marshal(
            m.response, mocked.returns, table, f"{test.id} mock {m.tool}"
        )
    return test


def synthesize_tests(
    item: PolicyItem,
    toolkit: Toolkit,
    backend: GenerationBackend,
    repair_budget: int = 3,
) -> list[GuardTestCase]:
    """Turn one item's compliance/violation examples into isolated guard
    tests, one or more per example, validated before use."""
    if not item.active:
        raise ValidationError(f"{item.id}: cannot synthesize tests for an archived item")
    if not item.compliance_examples or not item.violation_examples:
        raise ValidationError(
            f"{item.id}: active item must carry compliance and violation examples"
        )
    if toolkit.tool(item.tool) is None:
        raise ValidationError(f"{item.id}: unknown tool {item.tool!r}")

    from .mapper import render_toolkit

    template = resources.files("toolguard").joinpath(
        "prompts/synthesize_tests.txt"
    ).read_text()
    error: str | None = None
    for _attempt in range(repair_budget):
        blurb = ""
        if error:
            blurb = (
                f"\nYour previous response was rejected: {error}\n"
                "Fix the problem and respond again.\n"
            )
        prompt = template.format(
            tool=item.tool,
            policy_item=json.dumps(item.to_json(), indent=2),
            toolkit=render_toolkit(toolkit),
            validation_error=blurb,
        )
        req = GenerationRequest.make(
            template_id="synthesize_tests",
            prompt=prompt,
            schema_id="forge/tests",
            temperature=0.0,
        )
        try:
            tx = backend.generate(req)
        except SchemaViolation as e:
            error = str(e)
            continue
        try:
            tests = [
                _validate_test_payload(t, item, toolkit)
                for t in tx.parsed["tests"]
            ]
            _check_example_coverage(tests, item)
            return tests
        except (ValidationError, RuntimeFault, ValueError, KeyError) as e:
            error = str(e)
    raise ValidationError(
        f"test synthesis for {item.id} failed after {repair_budget} attempts: {error}"
    )


def _check_example_coverage(tests: list[GuardTestCase], item: PolicyItem) -> None:
    problems = []
    covered = {("compliance", i): False for i in range(len(item.compliance_examples))}
    covered.update(
        {("violation", i): False for i in range(len(item.violation_examples))}
    )
    for t in tests:
        if t.source_example is None:
            continue
        kind, idx = t.source_example
        expected = "allow" if kind == "compliance" else "deny"
        if t.expected != expected:
            problems.append(
                f"{t.id}: a {kind} example must expect {expected}"
            )
        if (kind, idx) in covered:
            covered[(kind, idx)] = True
        else:
            problems.append(f"{t.id}: source example {kind}[{idx}] does not exist")
    missing = [f"{k}[{i}]" for (k, i), ok in covered.items() if not ok]
    if missing:
        problems.append("examples without tests: " + ", ".join(missing))
    if problems:
        raise ValidationError("; ".join(problems))


# --- the red-green-refactor loop ---

@dataclass
class TestOutcome:
    test_id: str
    expected: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "test_id": self.test_id,
            "expected": self.expected,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class IterationRecord:
    index: int
    policy_id: str
    source: str
    diagnostics: list[str] = field(default_factory=list)
    test_results: list[TestOutcome] = field(default_factory=list)

    @property
    def green(self) -> bool:
        return not self.diagnostics and self.test_results and all(
            r.passed for r in self.test_results
        )

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "policy_id": self.policy_id,
            "source": self.source,
            "diagnostics": self.diagnostics,
            "test_results": [r.to_json() for r in self.test_results],
        }


@dataclass
class ForgeRun:
    tool: str
    iterations: list[IterationRecord] = field(default_factory=list)
    status: str = "budget_exhausted"  # "green" | "budget_exhausted"
    final_source: str = ""
    final_module: lang.Module | None = None
    suite_results: list[TestOutcome] = field(default_factory=list)
    policy_sources: dict[str, str] = field(default_factory=dict)
    args_type: str = ""

    def persist(self, directory: str | Path) -> None:
        """Snapshot per iteration plus the assembled module, for audit."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for it in self.iterations:
            stem = f"iter_{it.index:02d}_{it.policy_id}"
            (directory / f"{stem}.guard").write_text(it.source)
            (directory / f"{stem}_diagnostics.json").write_text(
                json.dumps(it.diagnostics, indent=2) + "\n"
            )
            (directory / f"{stem}_tests.json").write_text(
                json.dumps([r.to_json() for r in it.test_results], indent=2)
                + "\n"
            )
        (directory / "final.guard").write_text(self.final_source)
        (directory / "run.json").write_text(
            json.dumps(
                {
                    "tool": self.tool,
                    "status": self.status,
                    "iterations": len(self.iterations),
                    "suite_results": [r.to_json() for r in self.suite_results],
                },
                indent=2,
            )
            + "\n"
        )


def _policy_feedback(record: IterationRecord | None) -> str:
    if record is None:
        return ""
    parts = []
    if record.diagnostics:
        parts.append("The previous attempt failed to check:")
        parts.extend(record.diagnostics)
    failing = [r for r in record.test_results if not r.passed]
    if failing:
        parts.append("The previous attempt failed these tests:")
        for r in failing:
            parts.append(f"- {r.test_id} (expected {r.expected}): {r.detail}")
    if not parts:
        return ""
    return "Feedback from the previous iteration:\n" + "\n".join(parts) + "\n"


def run_policy_tests(
    module: lang.Module, policy_id: str, tests: list[GuardTestCase]
) -> list[TestOutcome]:
    """Run a policy function in isolation against its tests."""
    out = []
    for t in tests:
        out.append(
            _score_verdict(
                t,
                lambda: lang.evaluate_function(
                    module, f"policy_{policy_id}", t.args, t.context()
                ),
            )
        )
    return out


def _score_verdict(t: GuardTestCase, runner) -> TestOutcome:
    try:
        verdict = runner()
    except (GuardNotImplemented, BudgetExceeded, RuntimeFault) as e:
        return TestOutcome(t.id, t.expected, False, f"{type(e).__name__}: {e}")
    if t.expected == "allow":
        if verdict.allowed:
            return TestOutcome(t.id, t.expected, True)
        return TestOutcome(
            t.id, t.expected, False,
            f"denied by {verdict.policy_id}: {verdict.explanation}",
        )
    if verdict.allowed:
        return TestOutcome(t.id, t.expected, False, "allowed")
    if t.expected_policy_id and verdict.policy_id != t.expected_policy_id:
        return TestOutcome(
            t.id, t.expected, False,
            f"denied by {verdict.policy_id}, expected {t.expected_policy_id}",
        )
    return TestOutcome(t.id, t.expected, True)


def assemble_guard_source(
    skeleton: SkeletonModule,
    tool: str,
    policy_sources: dict[str, str],
    args_type: str,
) -> str:
    """Skeleton + policy functions + a mechanical guard entry point that
    checks every policy in order. Policies that never forged cleanly get
    an explicit stub so the module still parses."""
    parts = [skeleton.type_decls, skeleton.signatures]
    for policy_id, source in policy_sources.items():
        if source:
            parts.append(source.strip() + "\n")
        else:
            parts.append(
                f"fun policy_{policy_id}(args: {args_type}, ctx: context)"
                " -> verdict {\n  not_implemented\n}\n"
            )
    lines = [
        f"fun guard_{tool}(args: {args_type}, ctx: context) -> verdict {{"
    ]
    for policy_id in policy_sources:
        lines.append(f"  check policy_{policy_id}(args, ctx)")
    lines.append("  allow")
    lines.append("}")
    parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


def forge_guard(
    tool: str,
    items: list[PolicyItem],
    tests: list[GuardTestCase],
    skeleton: SkeletonModule,
    backend: GenerationBackend,
    budget: int = DEFAULT_FORGE_BUDGET,
    toolkit: Toolkit | None = None,
) -> ForgeRun:
    """Forge every policy function of one tool, then assemble its guard.

    The iteration budget applies per policy. A BackendError aborts the
    run, keeping the partial trail.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if not tests:
        raise ValidationError("forging needs a non-empty test suite")
    skeleton_module = lang.parse(skeleton.text, f"{tool}_skeleton.guard")
    if lang.typecheck(skeleton_module, toolkit):
        raise ValidationError("skeleton does not typecheck")
    spec = None
    if toolkit is not None:
        spec = toolkit.tool(tool)
    args_type = spec.args_type_name if spec else f"{tool}_args"

    template = resources.files("toolguard").joinpath(
        "prompts/forge_policy.txt"
    ).read_text()
    run = ForgeRun(tool=tool)
    policy_sources: dict[str, str] = {}
    greens: dict[str, bool] = {}
    aborted = False
    for item in items:
        my_tests = [t for t in tests if t.policy_id == item.id]
        prior: IterationRecord | None = None
        best: str = ""
        green = False
        for index in range(1, budget + 1):
            prompt = template.format(
                policy_id=item.id,
                args_type=args_type,
                policy_item=json.dumps(item.to_json(), indent=2),
                skeleton=skeleton.text,
                feedback=_policy_feedback(prior),
            )
            req = GenerationRequest.make(
                template_id="forge_policy",
                prompt=prompt,
                schema_id="forge/policy_source",
                temperature=0.0,
            )
            record = IterationRecord(index=index, policy_id=item.id, source="")
            try:
                tx = backend.generate(req)
            except SchemaViolation as e:
                record.diagnostics.append(str(e))
                run.iterations.append(record)
                prior = record
                continue
            except BackendError as e:
                record.diagnostics.append(f"backend error: {e}")
                run.iterations.append(record)
                aborted = True
                break
            source = tx.parsed["source"]
            record.source = source
            candidate_text = (
                skeleton.type_decls + "\n" + skeleton.signatures + "\n" + source
            )
            try:
                module = lang.parse(candidate_text, f"{tool}_{item.id}.guard")
            except lang.GuardSyntaxError as e:
                record.diagnostics.append(str(e))
                run.iterations.append(record)
                prior = record
                continue
            diags = lang.typecheck(module, toolkit)
            record.diagnostics = [d.format() for d in diags]
            if record.diagnostics:
                run.iterations.append(record)
                prior = record
                continue
            if module.function(f"policy_{item.id}") is None:
                record.diagnostics.append(
                    f"response does not define policy_{item.id}"
                )
                run.iterations.append(record)
                prior = record
                continue
            record.test_results = run_policy_tests(module, item.id, my_tests)
            run.iterations.append(record)
            prior = record
            best = source
            if record.green:
                green = True
                break
        policy_sources[item.id] = best
        greens[item.id] = green
        if aborted or not green:
            break

    # assemble whatever forged, stubbing the rest, so the final module
    # always parses
    for item in items:
        policy_sources.setdefault(item.id, "")
    run.policy_sources = dict(policy_sources)
    run.args_type = args_type
    run.final_source = assemble_guard_source(
        skeleton, tool, policy_sources, args_type
    )
    run.final_module = lang.parse(run.final_source, f"{tool}.guard")
    all_green = not aborted and all(greens.get(it.id) for it in items)
    if all_green:
        run.suite_results = [
            _score_verdict(
                t,
                lambda t=t: lang.evaluate(
                    run.final_module, t.tool, t.args, t.context()
                ),
            )
            for t in tests
        ]
        if all(r.passed for r in run.suite_results):
            run.status = "green"
    return run


def combine_guard_sources(skeleton: SkeletonModule, runs: list[ForgeRun]) -> str:
    """One module carrying the assembled guards of several tools."""
    parts = [skeleton.type_decls, skeleton.signatures]
    for run in runs:
        for policy_id, source in run.policy_sources.items():
            if source:
                parts.append(source.strip() + "\n")
            else:
                parts.append(
                    f"fun policy_{policy_id}(args: {run.args_type},"
                    " ctx: context) -> verdict {\n  not_implemented\n}\n"
                )
        lines = [
            f"fun guard_{run.tool}(args: {run.args_type}, ctx: context)"
            " -> verdict {"
        ]
        for policy_id in run.policy_sources:
            lines.append(f"  check policy_{policy_id}(args, ctx)")
        lines.append("  allow")
        lines.append("}")
        parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


# --- TPR scoring over a held-out suite ---

@dataclass(frozen=True)
class ToolTpr:
    tool: str
    passed: int
    total: int

    @property
    def tpr(self) -> float:
        return self.passed / self.total if self.total else 1.0

    def to_json(self) -> dict:
        return {
            "tool": self.tool,
            "passed": self.passed,
            "total": self.total,
            "tpr": self.tpr,
        }


@dataclass
class TprReport:
    per_tool: tuple[ToolTpr, ...]
    breakdown: dict[str, int]
    results: list[TestOutcome] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(t.total for t in self.per_tool)

    @property
    def passed(self) -> int:
        return sum(t.passed for t in self.per_tool)

    @property
    def tpr(self) -> float:
        return self.passed / self.total if self.total else 1.0

    @property
    def min(self) -> float:
        return min((t.tpr for t in self.per_tool), default=1.0)

    @property
    def max(self) -> float:
        return max((t.tpr for t in self.per_tool), default=1.0)

    @property
    def mean(self) -> float:
        tprs = [t.tpr for t in self.per_tool]
        return sum(tprs) / len(tprs) if tprs else 1.0

    def to_json(self) -> dict:
        return {
            "per_tool": [t.to_json() for t in self.per_tool],
            "aggregate": {"min": self.min, "max": self.max, "mean": self.mean},
            "tpr": self.tpr,
            "breakdown": dict(self.breakdown),
            "results": [r.to_json() for r in self.results],
        }

    def render_table(self) -> str:
        header = f"{'tool':34} {'passed':>7} {'total':>6} {'TPR':>6}"
        lines = [header, "-" * len(header)]
        for t in self.per_tool:
            lines.append(f"{t.tool:34} {t.passed:7d} {t.total:6d} {t.tpr:6.3f}")
        lines.append("-" * len(header))
        lines.append(
            f"mean {self.mean:.3f}  min {self.min:.3f}  max {self.max:.3f}"
            f"  overall {self.tpr:.3f}"
        )
        b = self.breakdown
        lines.append(
            f"failures: compliance {b.get('compliance_failure', 0)},"
            f" violation {b.get('violation_failure', 0)},"
            f" other {b.get('other', 0)}"
        )
        return "\n".join(lines)


def evaluate_tpr(
    module: lang.Module,
    suite: list[GuardTestCase],
    toolkit: Toolkit | None = None,
) -> TprReport:
    """Score a guard module on a test suite.

    A module that fails typechecking still gets a report: every test
    counts as an "other" failure, mirroring how a syntactically broken
    generation attempt scores.
    """
    diags = lang.typecheck(module, toolkit)
    breakdown = {"compliance_failure": 0, "violation_failure": 0, "other": 0}
    results: list[TestOutcome] = []
    per_tool: dict[str, list[TestOutcome]] = {}
    for t in suite:
        if diags:
            outcome = TestOutcome(
                t.id, t.expected, False,
                f"module does not typecheck ({len(diags)} diagnostics)",
            )
            kind = "other"
        else:
            outcome, kind = _classified(module, t)
        results.append(outcome)
        per_tool.setdefault(t.tool, []).append(outcome)
        if kind:
            breakdown[kind] += 1
    tools = tuple(
        ToolTpr(tool, sum(1 for r in rs if r.passed), len(rs))
        for tool, rs in sorted(per_tool.items())
    )
    return TprReport(per_tool=tools, breakdown=breakdown, results=results)


def _classified(module, t: GuardTestCase) -> tuple[TestOutcome, str | None]:
    try:
        verdict = lang.evaluate(module, t.tool, t.args, t.context())
    except (GuardNotImplemented, BudgetExceeded, RuntimeFault) as e:
        return (
            TestOutcome(t.id, t.expected, False, f"{type(e).__name__}: {e}"),
            "other",
        )
    if t.expected == "allow":
        if verdict.allowed:
            return TestOutcome(t.id, t.expected, True), None
        return (
            TestOutcome(
                t.id, t.expected, False,
                f"denied by {verdict.policy_id}: {verdict.explanation}",
            ),
            "compliance_failure",
        )
    if verdict.allowed:
        return (
            TestOutcome(t.id, t.expected, False, "allowed"),
            "violation_failure",
        )
    if t.expected_policy_id and verdict.policy_id != t.expected_policy_id:
        return (
            TestOutcome(
                t.id, t.expected, False,
                f"denied by {verdict.policy_id}, expected {t.expected_policy_id}",
            ),
            "violation_failure",
        )
    return TestOutcome(t.id, t.expected, True), None
