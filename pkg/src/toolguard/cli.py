"""Operator entry points: one multi-command binary tying the pipeline
together, buildtime to runtime.

Exit codes: 0 success, 1 operational failure, 2 usage error.
Every command is idempotent given identical inputs and a replay backend.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .airline.bench import run_benchmark
from .airline.tasks import load_corpus
from .backends import make_backend
from .document import perturb_document, segment
from .errors import ToolguardError, UsageError
from .forge import (
    combine_guard_sources,
    evaluate_tpr,
    forge_guard,
    load_suite,
    synthesize_tests,
)
from .lang import parse, typecheck
from .mapeval import evaluate_maps
from .mapper import MapperConfig, run_pipeline
from .openapi import parse_openapi
from .policy import PolicyMap
from .runtime import EnforcementStrategy
from .skeleton import generate_skeleton

_STRATEGIES = {
    "none": "none",
    "reflect-doc": "reflect_full_doc",
    "reflect-map": "reflect_policy_map",
    "toolguards": "toolguards",
}


def _packaged(name: str) -> str:
    return resources.files("toolguard").joinpath(f"data/{name}").read_text()


def _read(path: str | None, packaged_default: str | None = None) -> str:
    if path:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"no such file: {path}")
        return p.read_text()
    if packaged_default is not None:
        return _packaged(packaged_default)
    raise UsageError("a required input path is missing")


def _load_toolkit(args):
    return parse_openapi(
        _read(args.openapi, "airline_openapi.json"),
        "yaml" if (args.openapi or "").endswith((".yml", ".yaml")) else "json",
    )


def _load_backend(args):
    responses = None
    if args.backend == "scripted":
        if not args.script:
            raise ToolguardError("--backend scripted requires --script")
        responses = json.loads(Path(args.script).read_text())
    return make_backend(
        args.backend,
        responses=responses,
        replay_dir=args.replay_dir,
        endpoint=args.endpoint,
        model=args.model,
        api_key=os.environ.get("TOOLGUARD_API_KEY"),
    )


def _load_doc(args):
    doc = segment(_read(args.doc, "airline_policy.md"))
    if args.perturb:
        noise = segment(_packaged(f"noise_{args.perturb}.md"))
        doc = perturb_document(doc, noise, args.order)
    return doc


def cmd_map(args) -> int:
    toolkit = _load_toolkit(args)
    doc = _load_doc(args)
    backend = _load_backend(args)
    config = MapperConfig(
        repair_budget=args.budget,
        audit_path=Path(args.audit) if args.audit else None,
        map_out=Path(args.out),
    )
    pmap = run_pipeline(doc, toolkit, backend, config)
    Path(args.out).write_text(pmap.to_json_text())
    print(f"policy map written to {args.out} ({len(pmap.items)} items)")
    return 0


def cmd_eval_map(args) -> int:
    pred = PolicyMap.from_json_text(_read(args.map))
    gt = PolicyMap.from_json_text(_read(args.gt, "airline_gt_map.json"))
    score = evaluate_maps(pred, gt, threshold=args.threshold)
    if args.out:
        Path(args.out).write_text(score.to_json_text())
    print(score.render_table())
    return 0


def cmd_genguards(args) -> int:
    toolkit = _load_toolkit(args)
    pmap = PolicyMap.from_json_text(_read(args.map, "airline_gt_map.json"))
    backend = _load_backend(args)
    skeleton = generate_skeleton(toolkit)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def forge_one(tool):
        items = list(pmap.items_for_tool(tool.name))
        if not items:
            return None
        tests = []
        for item in items:
            tests.extend(synthesize_tests(item, toolkit, backend, args.budget))
        run = forge_guard(
            tool.name, items, tests, skeleton, backend,
            budget=args.budget, toolkit=toolkit,
        )
        run.persist(out_dir / tool.name)
        return run

    tools = toolkit.mutating_tools()
    # parallel forging needs an order-independent backend (replay/http);
    # a scripted backend's cursor would interleave across tools
    if args.jobs > 1 and args.backend != "scripted":
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            runs = [r for r in pool.map(forge_one, tools) if r is not None]
    else:
        runs = [r for r in map(forge_one, tools) if r is not None]
    for run in runs:
        print(f"{run.tool}: {run.status} after {len(run.iterations)} iterations")
    combined = combine_guard_sources(skeleton, runs)
    guards_path = out_dir / "guards.guard"
    guards_path.write_text(combined)
    module = parse(combined, guards_path.name)
    diags = typecheck(module, toolkit)
    for d in diags:
        print(d.format(), file=sys.stderr)
    print(f"assembled guard module written to {guards_path}")
    return 0 if all(r.status == "green" for r in runs) and not diags else 1


def cmd_eval_guards(args) -> int:
    toolkit = _load_toolkit(args)
    source = _read(args.guards, "airline_gt.guard")
    suite = load_suite(args.tests) if args.tests else _packaged_suite()
    module = parse(source, Path(args.guards).name if args.guards else "guards")
    report = evaluate_tpr(module, suite, toolkit)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    print(report.render_table())
    return 0


def _packaged_suite():
    from .forge import GuardTestCase

    obj = json.loads(_packaged("heldout_tests.json"))
    return [GuardTestCase.from_json(t) for t in obj["tests"]]


def cmd_run_bench(args) -> int:
    tasks = load_corpus(args.tasks or _packaged_tasks_dir())
    if not args.include_compliant:
        tasks = [t for t in tasks if t.violating]
    guards = None
    strategy_kind = _STRATEGIES[args.strategy]
    if strategy_kind != "none":
        guards = parse(_read(args.guards, "airline_gt.guard"), "guards")
    advisory = ""
    if strategy_kind == "reflect_full_doc":
        advisory = "Policy reminder:\n" + _read(args.doc, "airline_policy.md")
    elif strategy_kind == "reflect_policy_map":
        pmap = PolicyMap.from_json_text(_read(args.map, "airline_gt_map.json"))
        advisory = "Policy reminder (mapped):\n" + _render_compact_map(pmap)
    strategy = EnforcementStrategy(
        kind=strategy_kind,
        deny_retry_budget=args.deny_budget,
        advisory_text=advisory,
    )
    result = run_benchmark(
        tasks,
        strategy,
        guards,
        trials=args.trials,
        ks=args.k,
        seed=args.seed,
        jobs=args.jobs,
        out_dir=args.out_dir,
    )
    print(result.report.render_table())
    a = result.alerts
    print(
        f"alerts: {a.task_types_triggered} task types,"
        f" {a.task_instances_flagged} instances, {a.total_violations} total"
    )
    return 0


def _render_compact_map(pmap: PolicyMap) -> str:
    lines = []
    for tool in pmap.tools():
        lines.append(f"{tool}:")
        for item in pmap.items_for_tool(tool):
            lines.append(f"  - {item.name}: {item.description}")
    return "\n".join(lines)


def _packaged_tasks_dir() -> str:
    return str(resources.files("toolguard").joinpath("data/tasks"))


def cmd_serve_review(args) -> int:
    import uvicorn

    from .review import ReviewStore, create_app

    toolkit = _load_toolkit(args)
    store = ReviewStore(args.maps_dir, toolkit)
    if args.map and args.map_id:
        pmap = PolicyMap.from_json_text(_read(args.map))
        store.create(args.map_id, pmap, _read(args.doc, "airline_policy.md"))
    app = create_app(store, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_skeleton(args) -> int:
    toolkit = _load_toolkit(args)
    text = generate_skeleton(toolkit).text
    if args.out:
        Path(args.out).write_text(text)
        print(f"skeleton written to {args.out}")
    else:
        print(text)
    return 0


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Config file values fill in flags the user did not pass."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        parser.error(f"config file not found: {args.config}")
    overrides = json.loads(path.read_text())
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        if parser.get_default(attr) == getattr(args, attr):
            setattr(args, attr, value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toolguard",
        description="compile policy documents into tool guards and"
        " enforce them at agent runtime",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--openapi", help="OpenAPI document (default: packaged airline toolkit)")

    def backendish(p):
        p.add_argument("--backend", choices=["http", "scripted", "replay"], default="replay")
        p.add_argument("--replay-dir", help="replay archive directory")
        p.add_argument("--script", help="JSON file with scripted responses")
        p.add_argument("--endpoint", help="chat-completions endpoint URL")
        p.add_argument("--model", help="model name for the http backend")
        p.add_argument("--budget", type=int, default=3, help="repair/iteration budget")

    p = sub.add_parser("map", help="compile a policy document into a policy map")
    common(p)
    backendish(p)
    p.add_argument("--doc", help="policy document (default: packaged airline policy)")
    p.add_argument("--out", default="policy_map.json")
    p.add_argument("--audit", help="stage audit trail JSONL path")
    p.add_argument("--perturb", choices=["ood", "iid"], help="append noise policies")
    p.add_argument(
        "--order",
        choices=["relevant_first", "relevant_last"],
        default="relevant_first",
    )
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("eval-map", help="score a policy map against ground truth")
    common(p)
    p.add_argument("--map", required=True)
    p.add_argument("--gt", help="ground-truth map (default: packaged airline GT)")
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_map)

    p = sub.add_parser("genguards", help="forge guards from a policy map")
    common(p)
    backendish(p)
    p.add_argument("--map", help="policy map (default: packaged airline GT)")
    p.add_argument("--out-dir", default="forge_out")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel per-tool forging (replay/http backends)")
    p.set_defaults(func=cmd_genguards)

    p = sub.add_parser("eval-guards", help="score a guard module on a test suite")
    common(p)
    p.add_argument("--guards", help="guard module (default: packaged reference guards)")
    p.add_argument("--tests", help="test suite JSON (default: packaged held-out suite)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_guards)

    p = sub.add_parser("run-bench", help="run the scripted benchmark")
    common(p)
    p.add_argument("--tasks", help="task corpus directory (default: packaged)")
    p.add_argument("--guards", help="guard module (default: packaged reference guards)")
    p.add_argument("--doc", help="policy document for reflect-doc")
    p.add_argument("--map", help="policy map for reflect-map")
    p.add_argument(
        "--strategy", choices=sorted(_STRATEGIES), default="toolguards"
    )
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--k", type=int, nargs="+", default=[1])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--deny-budget", type=int, default=3)
    p.add_argument("--out-dir")
    p.add_argument("--include-compliant", action="store_true")
    p.set_defaults(func=cmd_run_bench)

    p = sub.add_parser("serve-review", help="serve the review API and UI")
    common(p)
    p.add_argument("--maps-dir", default="review_maps")
    p.add_argument("--map", help="seed the store with this map file")
    p.add_argument("--map-id", help="id for the seeded map")
    p.add_argument("--doc", help="policy document for the seeded map")
    p.add_argument("--static-dir", help="built review UI assets")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(func=cmd_serve_review)

    p = sub.add_parser("skeleton", help="emit the guard skeleton for a toolkit")
    common(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_skeleton)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(args, parser)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except ToolguardError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
