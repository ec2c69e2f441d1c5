"""Deterministic guard interpreter.

Evaluation is pure: given the same module, arguments, history, mock
table and clock, the verdict is always the same. Mutating tools are
unreachable from guard code; the type checker rejects them statically
and the interpreter enforces the same rule again at runtime.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from typing import Callable, Optional, Sequence

from ..errors import BudgetExceeded, GuardNotImplemented, RuntimeFault
from ..events import AssistantMessage, Event, ToolCall, UserMessage
from . import ast as A
from . import types as T
from .typecheck import ModuleEnv, build_env
from .values import MISSING, Verdict, marshal


@dataclass(frozen=True)
class Budgets:
    max_steps: int = 10_000
    max_tool_calls: int = 32


class DataApi:
    """Read-only access to other tools during guard evaluation."""

    def call(self, tool: str, args: dict):
        raise NotImplementedError


@dataclass(frozen=True)
class MockRule:
    tool: str
    args: Optional[dict]  # subset match; None matches any call
    response: object


class MockDataApi(DataApi):
    """Replays canned responses; unmocked calls fail loudly."""

    def __init__(self, rules: Sequence[MockRule]):
        self.rules = list(rules)

    def call(self, tool: str, args: dict):
        for rule in self.rules:
            if rule.tool != tool:
                continue
            if rule.args is None or all(
                args.get(k) == v for k, v in rule.args.items()
            ):
                return rule.response
        raise RuntimeFault(f"no mocked response for {tool}({args!r})")


_AFFIRMATIVE = (
    "yes", "confirm", "confirmed", "sure", "ok", "okay", "proceed",
    "go ahead", "please do", "do it", "correct", "sounds good",
)
_NEGATIVE = ("no", "not", "don't", "dont", "never", "stop", "wait")


def default_confirmation_matcher(events: Sequence[Event], topic: str) -> bool:
    """Deterministic confirmation rule: an assistant message mentioning
    every topic word, followed by a user message that affirms without
    negating."""
    topic_words = re.findall(r"[a-z0-9']+", topic.lower())
    mentioned = False
    for ev in events:
        if isinstance(ev, AssistantMessage):
            text = ev.text.lower()
            if topic_words and all(w in text for w in topic_words):
                mentioned = True
        elif isinstance(ev, UserMessage) and mentioned:
            words = set(re.findall(r"[a-z0-9']+", ev.text.lower()))
            text = ev.text.lower()
            if any(w in words for w in _NEGATIVE):
                continue
            if any(
                (a in words) if " " not in a else (a in text)
                for a in _AFFIRMATIVE
            ):
                return True
    return False


@dataclass
class GuardContext:
    now: datetime
    history: Sequence[Event] = field(default_factory=list)
    data_api: DataApi = field(default_factory=lambda: MockDataApi([]))
    budgets: Budgets = field(default_factory=Budgets)
    confirmation_matcher: Callable[[Sequence[Event], str], bool] = (
        default_confirmation_matcher
    )


class _CheckFailed(Exception):
    def __init__(self, verdict: Verdict):
        self.verdict = verdict


class _Eval:
    def __init__(self, module: A.Module, env: ModuleEnv, ctx: GuardContext):
        self.module = module
        self.env = env
        self.ctx = ctx
        self.steps = 0
        self.tool_calls = 0

    def bump(self):
        self.steps += 1
        if self.steps > self.ctx.budgets.max_steps:
            raise BudgetExceeded(
                f"step budget of {self.ctx.budgets.max_steps} exceeded"
            )

    def call_function(self, fn: A.FunDecl, argvals: list) -> Verdict:
        scope = {p.name: v for p, v in zip(fn.params, argvals)}
        try:
            result = self.eval_block(fn.body, scope)
        except _CheckFailed as cf:
            return cf.verdict
        if not isinstance(result, Verdict):
            raise RuntimeFault(
                f"{fn.name} returned a non-verdict value {result!r}"
            )
        return result

    def eval_block(self, block: A.Block, scope: dict):
        scope = dict(scope)
        for stmt in block.stmts:
            self.bump()
            if isinstance(stmt, A.LetStmt):
                scope[stmt.name] = self.eval(stmt.value, scope)
            else:
                v = self.eval(stmt.value, scope)
                if isinstance(v, Verdict) and not v.allowed:
                    raise _CheckFailed(v)
        return self.eval(block.result, scope)

    def eval(self, e: A.Expr, scope: dict):
        self.bump()
        m = getattr(self, f"_e_{type(e).__name__}")
        return m(e, scope)

    def _e_Lit(self, e: A.Lit, scope):
        return e.value

    def _e_AllowLit(self, e, scope):
        return Verdict.allow()

    def _e_NotImplementedLit(self, e, scope):
        raise GuardNotImplemented(
            f"guard stub reached at {e.pos.line}:{e.pos.col}"
        )

    def _e_Deny(self, e: A.Deny, scope):
        policy_id = self.eval(e.policy_id, scope)
        explanation = self.eval(e.explanation, scope)
        return Verdict.deny(str(policy_id), str(explanation))

    def _e_Name(self, e: A.Name, scope):
        if e.id not in scope:
            raise RuntimeFault(f"unbound name {e.id!r}")
        return scope[e.id]

    def _e_FieldAccess(self, e: A.FieldAccess, scope):
        obj = self.eval(e.obj, scope)
        if obj is MISSING:
            raise RuntimeFault(
                f"missing value dereferenced at {e.pos.line}:{e.pos.col}"
            )
        if not isinstance(obj, dict):
            raise RuntimeFault(f"{type(obj).__name__} has no fields")
        return obj.get(e.field, MISSING)

    def _e_Index(self, e: A.Index, scope):
        obj = self.eval(e.obj, scope)
        idx = self.eval(e.index, scope)
        if not isinstance(obj, list):
            raise RuntimeFault("indexing a non-list value")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise RuntimeFault("list index must be an int")
        if idx < 0 or idx >= len(obj):
            raise RuntimeFault(f"index {idx} out of range (len {len(obj)})")
        return obj[idx]

    def _e_ListLit(self, e: A.ListLit, scope):
        return [self.eval(item, scope) for item in e.items]

    def _e_RecordLit(self, e: A.RecordLit, scope):
        return {name: self.eval(value, scope) for name, value in e.fields}

    def _e_Unary(self, e: A.Unary, scope):
        v = self.eval(e.operand, scope)
        if e.op == "not":
            if not isinstance(v, bool):
                raise RuntimeFault("'not' applied to a non-bool")
            return not v
        if isinstance(v, bool) or not isinstance(v, (int, Decimal)):
            raise RuntimeFault("unary '-' applied to a non-number")
        return -v

    def _e_Binary(self, e: A.Binary, scope):
        op = e.op
        if op in ("and", "or"):
            left = self.eval(e.left, scope)
            if not isinstance(left, bool):
                raise RuntimeFault(f"'{op}' applied to a non-bool")
            if op == "and" and not left:
                return False
            if op == "or" and left:
                return True
            right = self.eval(e.right, scope)
            if not isinstance(right, bool):
                raise RuntimeFault(f"'{op}' applied to a non-bool")
            return right
        left = self.eval(e.left, scope)
        right = self.eval(e.right, scope)
        if left is MISSING or right is MISSING:
            raise RuntimeFault(
                f"missing value in '{op}' at {e.pos.line}:{e.pos.col}"
            )
        try:
            if op == "==":
                return left == right
            if op == "!=":
                return left != right
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            if op == ">=":
                return left >= right
            if op == "+":
                return left + right
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if op == "/":
                return Decimal(left) / Decimal(right)
        except (TypeError, ZeroDivisionError, ArithmeticError) as exc:
            raise RuntimeFault(f"'{op}' failed: {exc}") from exc
        raise AssertionError(op)

    def _e_If(self, e: A.If, scope):
        cond = self.eval(e.cond, scope)
        if not isinstance(cond, bool):
            raise RuntimeFault("if condition is not a bool")
        return self.eval_block(e.then if cond else e.els, scope)

    def _e_Call(self, e: A.Call, scope):
        fn = self.module.function(e.name)
        if fn is None:
            raise RuntimeFault(f"unknown function {e.name!r}")
        argvals = [self.eval(a, scope) for a in e.args]
        # a called policy's deny is a value for the caller, not an early
        # return; `check` decides control flow
        return self.call_function(fn, argvals)

    def _e_Exists(self, e: A.Exists, scope):
        return self.eval(e.value, scope) is not MISSING

    def _e_Default(self, e: A.Default, scope):
        v = self.eval(e.value, scope)
        if v is MISSING:
            return self.eval(e.fallback, scope)
        return v

    def _e_Quantifier(self, e: A.Quantifier, scope):
        source = self.eval(e.source, scope)
        if not isinstance(source, list):
            raise RuntimeFault(f"{e.kind} over a non-list value")
        if e.binder is None:
            if e.kind == "count":
                return len(source)
            total = 0
            for item in source:
                if isinstance(item, bool) or not isinstance(item, (int, Decimal)):
                    raise RuntimeFault("sum over non-numeric items")
                total = total + item
            return total
        out_filter = []
        count = 0
        total = 0
        for item in source:
            self.bump()
            inner = dict(scope)
            inner[e.binder] = item
            v = self.eval(e.body, inner)
            if e.kind == "sum":
                if isinstance(v, bool) or not isinstance(v, (int, Decimal)):
                    raise RuntimeFault("sum over non-numeric items")
                total = total + v
                continue
            if not isinstance(v, bool):
                raise RuntimeFault(f"{e.kind} predicate returned a non-bool")
            if e.kind == "all" and not v:
                return False
            if e.kind == "any" and v:
                return True
            if e.kind == "filter" and v:
                out_filter.append(item)
            if e.kind == "count" and v:
                count += 1
        if e.kind == "all":
            return True
        if e.kind == "any":
            return False
        if e.kind == "filter":
            return out_filter
        if e.kind == "count":
            return count
        return total

    def _e_CtxNow(self, e, scope):
        return self.ctx.now

    def _e_CtxCall(self, e: A.CtxCall, scope):
        sig = self.env.tools.get(e.tool)
        if sig is None:
            raise RuntimeFault(f"call to undeclared tool {e.tool!r}")
        if sig.mutating:
            # defense in depth: the type checker already rejects this
            raise RuntimeFault(
                f"sandbox violation: mutating tool {e.tool!r} invoked"
                " during guard evaluation"
            )
        self.tool_calls += 1
        if self.tool_calls > self.ctx.budgets.max_tool_calls:
            raise BudgetExceeded(
                f"tool-call budget of {self.ctx.budgets.max_tool_calls} exceeded"
            )
        args = {
            name: _unmarshal(self.eval(value, scope))
            for name, value in e.args.fields
        }
        payload = self.ctx.data_api.call(e.tool, args)
        if sig.returns is None:
            raise RuntimeFault(f"tool {e.tool!r} declares no result")
        return marshal(payload, sig.returns, self.env.table, f"{e.tool} response")

    def _e_HistoryToolCalled(self, e: A.HistoryToolCalled, scope):
        sig = self.env.tools.get(e.tool)
        if sig is None:
            raise RuntimeFault(f"history lookup for undeclared tool {e.tool!r}")
        args_schema = self.env.table.record(sig.args_type_name)
        for ev in self.ctx.history:
            if not isinstance(ev, ToolCall) or ev.name != e.tool or not ev.allowed:
                continue
            if e.binder is None:
                return True
            self.bump()
            argval = marshal(
                ev.args, T.NamedType(sig.args_type_name), self.env.table,
                f"history {e.tool} args",
            ) if args_schema else dict(ev.args)
            inner = dict(scope)
            inner[e.binder] = argval
            v = self.eval(e.pred, inner)
            if not isinstance(v, bool):
                raise RuntimeFault("history predicate returned a non-bool")
            if v:
                return True
        return False

    def _e_HistoryUserConfirmed(self, e: A.HistoryUserConfirmed, scope):
        topic = self.eval(e.topic, scope)
        if not isinstance(topic, str):
            raise RuntimeFault("confirmation topic must be text")
        return bool(self.ctx.confirmation_matcher(self.ctx.history, topic))


def _unmarshal(value):
    """Guard value -> JSON-ish payload for a data-api call."""
    if isinstance(value, dict):
        return {k: _unmarshal(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_unmarshal(v) for v in value]
    if isinstance(value, Decimal):
        return int(value) if value == value.to_integral_value() else float(value)
    if isinstance(value, datetime):
        return value.isoformat()
    return value


def evaluate_function(
    module: A.Module, name: str, args: dict, ctx: GuardContext
) -> Verdict:
    """Run one policy or guard function against marshalled tool args."""
    fn = module.function(name)
    if fn is None:
        raise RuntimeFault(f"module has no function {name!r}")
    env = build_env(module, diags=[])
    first = fn.params[0] if fn.params else None
    if first is None or not isinstance(first.type, A.TypeName):
        raise RuntimeFault(f"{name} does not take an args record")
    args_type = T.NamedType(first.type.name)
    argval = marshal(args, args_type, env.table, f"{name} args")
    ev = _Eval(module, env, ctx)
    return ev.call_function(fn, [argval, ctx])


def evaluate(module: A.Module, tool: str, args: dict, ctx: GuardContext) -> Verdict:
    """Evaluate the guard entry point for ``tool``.

    Raises GuardNotImplemented for stubs, BudgetExceeded past budgets,
    RuntimeFault on dynamic faults. These classify as "other" failures.
    """
    if module.guard_for(tool) is None:
        raise RuntimeFault(f"no guard entry point for tool {tool!r}")
    return evaluate_function(module, f"guard_{tool}", args, ctx)
