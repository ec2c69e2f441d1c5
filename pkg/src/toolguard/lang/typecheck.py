"""Static checks for guard modules.

An empty diagnostic list means the module is well-typed: every field
access resolves, guard entry points return verdicts, the call graph is
acyclic, and data-access calls only reach declared non-mutating tools.
Diagnostics are results, not exceptions; they feed the synthesis loop's
syntactic-feedback channel.
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field

from . import ast as A
from . import types as T


@dataclass(frozen=True)
class Diagnostic:
    message: str
    pos: A.Pos
    source_name: str = "<guard>"
    severity: str = "error"

    def format(self) -> str:
        return (
            f"{self.source_name}:{self.pos.line}:{self.pos.col}: "
            f"{self.severity}: {self.message}"
        )


@dataclass(frozen=True)
class ToolSig:
    name: str
    mutating: bool
    params: tuple[T.FieldDef, ...]
    returns: T.Type | None

    @property
    def args_type_name(self) -> str:
        return f"{self.name}_args"


@dataclass
class ModuleEnv:
    """Types and tool signatures declared by a module."""

    table: T.SchemaTable = field(default_factory=T.SchemaTable)
    tools: dict[str, ToolSig] = field(default_factory=dict)


def build_env(module: A.Module, diags: list[Diagnostic] | None = None) -> ModuleEnv:
    """Lower a module's declarations. Args records are synthesized from
    tool declarations, never declared explicitly."""
    diags = diags if diags is not None else []
    src = module.source_name
    env = ModuleEnv()

    def diag(msg: str, pos: A.Pos):
        diags.append(Diagnostic(msg, pos, src))

    declared: dict[str, A.Pos] = {}

    def claim(name: str, pos: A.Pos) -> bool:
        if name in T.RESERVED_WORDS:
            diag(f"{name!r} is a reserved word", pos)
            return False
        if name in declared:
            diag(f"duplicate type name {name!r}", pos)
            return False
        declared[name] = pos
        return True

    for e in module.enums:
        if claim(e.name, e.pos):
            env.table.defs[e.name] = T.EnumSchema(e.name, tuple(e.members))
    # two passes so record fields can reference any declared name
    pending: list[A.RecordDecl] = []
    for r in module.records:
        if claim(r.name, r.pos):
            pending.append(r)
            env.table.defs[r.name] = T.RecordSchema(r.name, ())
    for tool in module.tools:
        args_name = f"{tool.name}_args"
        if claim(args_name, tool.pos):
            env.table.defs[args_name] = T.RecordSchema(args_name, ())

    for r in pending:
        fields = []
        seen: set[str] = set()
        for f in r.fields:
            if f.name in seen:
                diag(f"duplicate field {f.name!r} in {r.name!r}", f.pos)
                continue
            seen.add(f.name)
            lowered, optional = lower_type(f.type, env.table, diags, src)
            fields.append(T.FieldDef(f.name, lowered, optional))
        env.table.defs[r.name] = T.RecordSchema(r.name, tuple(fields))

    for tool in module.tools:
        if tool.name in env.tools:
            diag(f"duplicate tool declaration {tool.name!r}", tool.pos)
            continue
        params = []
        seen = set()
        for p in tool.params:
            if p.name in seen:
                diag(f"duplicate parameter {p.name!r}", p.pos)
                continue
            seen.add(p.name)
            lowered, optional = lower_type(p.type, env.table, diags, src)
            params.append(T.FieldDef(p.name, lowered, optional))
        returns = None
        if tool.returns is not None:
            returns, _ = lower_type(tool.returns, env.table, diags, src)
        sig = ToolSig(tool.name, tool.mutating, tuple(params), returns)
        env.tools[tool.name] = sig
        args_name = sig.args_type_name
        if args_name in env.table.defs:
            env.table.defs[args_name] = T.RecordSchema(
                args_name,
                tuple(
                    T.FieldDef(p.name, p.type, p.optional) for p in params
                ),
            )
    return env


def lower_type(
    texpr: A.TypeExpr,
    table: T.SchemaTable,
    diags: list[Diagnostic],
    src: str,
) -> tuple[T.Type, bool]:
    """Returns (type, optional_marker)."""
    if isinstance(texpr, A.TypeOptional):
        inner, _ = lower_type(texpr.elem, table, diags, src)
        return inner, True
    if isinstance(texpr, A.TypeList):
        inner, inner_opt = lower_type(texpr.elem, table, diags, src)
        if inner_opt:
            inner = T.OptionalType(inner)
        return T.ListType(inner), False
    name = texpr.name
    if name in T.PRIMITIVES:
        return T.PRIMITIVES[name], False
    if table.resolve(name) is None:
        diags.append(Diagnostic(f"unknown type {name!r}", texpr.pos, src))
        return T.BOTTOM, False
    return T.NamedType(name), False


# --- assignability ---

def assignable(actual: T.Type, expected: T.Type, table: T.SchemaTable) -> bool:
    if isinstance(actual, T.Bottom) or isinstance(expected, T.Bottom):
        return True
    if actual == expected:
        return True
    if isinstance(expected, T.OptionalType):
        return assignable(actual, expected.elem, table)
    if isinstance(actual, T.ListType) and isinstance(expected, T.ListType):
        return assignable(actual.elem, expected.elem, table)
    if isinstance(actual, T.RecordShape):
        expected_rec = None
        if isinstance(expected, T.NamedType):
            expected_rec = table.record(expected.name)
        if expected_rec is not None:
            shape = dict(actual.fields)
            for f in expected_rec.fields:
                if f.name in shape:
                    target = (
                        T.OptionalType(f.type) if f.optional else f.type
                    )
                    if not assignable(shape.pop(f.name), target, table):
                        return False
                elif not f.optional:
                    return False
            return not shape  # no unknown fields
    return False


def _is_numeric(t: T.Type) -> bool:
    return t in (T.INT, T.DECIMAL)


def _numeric_join(a: T.Type, b: T.Type) -> T.Type:
    return T.DECIMAL if T.DECIMAL in (a, b) else T.INT


def _comparable_ordered(a: T.Type, b: T.Type) -> bool:
    if _is_numeric(a) and _is_numeric(b):
        return True
    return a == b and a in (T.TIMESTAMP, T.DURATION)


# --- module checking ---

def typecheck(module: A.Module, toolkit=None) -> list[Diagnostic]:
    """Full static check. ``toolkit`` (a toolguard.toolkit.Toolkit), when
    given, is cross-validated against the module's own declarations."""
    diags: list[Diagnostic] = []
    src = module.source_name
    env = build_env(module, diags)

    def diag(msg: str, pos: A.Pos):
        diags.append(Diagnostic(msg, pos, src))

    if toolkit is not None:
        _cross_check(module, env, toolkit, diags)

    seen_funs: dict[str, A.FunDecl] = {}
    for fn in module.functions:
        if fn.name in seen_funs:
            diag(f"duplicate function {fn.name!r}", fn.pos)
            continue
        seen_funs[fn.name] = fn

    for fn in seen_funs.values():
        _check_signature(fn, env, diags, src, toolkit)

    checker = _FnChecker(module, env, diags)
    for fn in seen_funs.values():
        checker.check_function(fn)

    _check_call_graph(list(seen_funs.values()), diags, src)
    return diags


def _cross_check(module, env: ModuleEnv, toolkit, diags) -> None:
    src = module.source_name
    kit_table = toolkit.schema_table()
    for decl in module.tools:
        spec = toolkit.tool(decl.name)
        if spec is None:
            diags.append(
                Diagnostic(
                    f"tool {decl.name!r} is not in the toolkit", decl.pos, src
                )
            )
            continue
        sig = env.tools.get(decl.name)
        if sig is None:
            continue
        if sig.mutating != spec.mutating:
            diags.append(
                Diagnostic(
                    f"tool {decl.name!r}: mutating flag disagrees with toolkit",
                    decl.pos,
                    src,
                )
            )
        declared = {(p.name, p.type, p.optional) for p in sig.params}
        expected = {
            (p.name, p.type, not p.required) for p in spec.params
        }
        if declared != expected:
            diags.append(
                Diagnostic(
                    f"tool {decl.name!r}: parameters disagree with toolkit",
                    decl.pos,
                    src,
                )
            )
        if sig.returns != spec.returns:
            diags.append(
                Diagnostic(
                    f"tool {decl.name!r}: result type disagrees with toolkit",
                    decl.pos,
                    src,
                )
            )
    for decl in module.records + module.enums:
        ours = env.table.resolve(decl.name)
        theirs = kit_table.resolve(decl.name)
        if theirs is not None and ours is not None and ours != theirs:
            diags.append(
                Diagnostic(
                    f"type {decl.name!r} disagrees with the toolkit schema",
                    decl.pos,
                    src,
                )
            )


def _check_signature(fn: A.FunDecl, env: ModuleEnv, diags, src, toolkit) -> None:
    def diag(msg, pos=None):
        diags.append(Diagnostic(msg, pos or fn.pos, src))

    if not (fn.name.startswith("policy_") or fn.name.startswith("guard_")):
        diag(
            f"function {fn.name!r} must be named policy_<name> or guard_<tool>"
        )
        return
    if fn.name.startswith("guard_"):
        tool = fn.name[len("guard_"):]
        sig = env.tools.get(tool)
        known_mutating = None
        if toolkit is not None and toolkit.tool(tool) is not None:
            known_mutating = toolkit.tool(tool).mutating
        elif sig is not None:
            known_mutating = sig.mutating
        if sig is None and (toolkit is None or toolkit.tool(tool) is None):
            diag(f"guard for unknown tool {tool!r}")
        elif known_mutating is False:
            diag(f"guard for non-mutating tool {tool!r}")

    if len(fn.params) != 2:
        diag("guard and policy functions take (args, ctx) exactly")
        return
    first, second = fn.params
    ftype, fopt = lower_type(first.type, env.table, diags, src)
    if fopt or not (
        isinstance(ftype, T.NamedType) and env.table.record(ftype.name)
    ):
        diag("first parameter must be a declared args record", first.pos)
    if fn.name.startswith("guard_"):
        tool = fn.name[len("guard_"):]
        want = f"{tool}_args"
        if not (isinstance(ftype, T.NamedType) and ftype.name == want):
            diag(f"first parameter of {fn.name} must have type {want}", first.pos)
    if second.name != "ctx":
        diag("second parameter must be named ctx", second.pos)
    stype, _ = lower_type(second.type, env.table, diags, src)
    if stype != T.CONTEXT:
        diag("second parameter must have type context", second.pos)
    rtype, _ = lower_type(fn.return_type, env.table, diags, src)
    if rtype != T.VERDICT:
        diag("guard and policy functions must return verdict")


def _check_call_graph(functions: list[A.FunDecl], diags, src) -> None:
    edges: dict[str, list[tuple[str, A.Pos]]] = {f.name: [] for f in functions}

    def collect(e, out):
        if isinstance(e, A.Call):
            out.append((e.name, e.pos))
        for child in _children(e):
            collect(child, out)

    for fn in functions:
        collect(fn.body, edges[fn.name])

    state: dict[str, int] = {}

    def visit(name: str, trail: list[str]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = " -> ".join(trail + [name])
            diags.append(
                Diagnostic(
                    f"recursion is not allowed (call cycle: {cycle})",
                    A.Pos(1, 1),
                    src,
                )
            )
            return
        state[name] = 1
        for callee, _pos in edges.get(name, []):
            if callee in edges:
                visit(callee, trail + [name])
        state[name] = 2

    for fn in functions:
        visit(fn.name, [])


def _children(node):
    import dataclasses

    if isinstance(node, A.Node):
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if isinstance(v, A.Node):
                yield v
            elif isinstance(v, list):
                for x in v:
                    if isinstance(x, A.Node):
                        yield x
                    elif isinstance(x, tuple):
                        for y in x:
                            if isinstance(y, A.Node):
                                yield y


class _FnChecker:
    def __init__(self, module: A.Module, env: ModuleEnv, diags: list[Diagnostic]):
        self.module = module
        self.env = env
        self.diags = diags
        self.src = module.source_name
        self.fn: A.FunDecl | None = None
        self.scope: list[dict[str, T.Type]] = []

    def diag(self, msg: str, pos: A.Pos) -> T.Type:
        self.diags.append(Diagnostic(msg, pos, self.src))
        return T.BOTTOM

    def lookup(self, name: str) -> T.Type | None:
        for frame in reversed(self.scope):
            if name in frame:
                return frame[name]
        return None

    def check_function(self, fn: A.FunDecl) -> None:
        if not (fn.name.startswith("policy_") or fn.name.startswith("guard_")):
            return
        self.fn = fn
        frame: dict[str, T.Type] = {}
        for p in fn.params:
            t, opt = lower_type(p.type, self.env.table, [], self.src)
            frame[p.name] = T.OptionalType(t) if opt else t
        self.scope = [frame]
        rtype, _ = lower_type(fn.return_type, self.env.table, [], self.src)
        got = self.check_block(fn.body)
        if not assignable(got, rtype, self.env.table):
            self.diag(
                f"function body has type {got.render()}, expected {rtype.render()}",
                fn.body.result.pos,
            )

    def check_block(self, block: A.Block) -> T.Type:
        self.scope.append({})
        for stmt in block.stmts:
            if isinstance(stmt, A.LetStmt):
                if self.lookup(stmt.name) is not None:
                    self.diag(f"{stmt.name!r} is already bound", stmt.pos)
                self.scope[-1][stmt.name] = self.check_expr(stmt.value)
            else:
                t = self.check_expr(stmt.value)
                if not assignable(t, T.VERDICT, self.env.table):
                    self.diag(
                        f"check needs a verdict, got {t.render()}", stmt.pos
                    )
        t = self.check_expr(block.result)
        self.scope.pop()
        return t

    # expression typing

    def check_expr(self, e: A.Expr) -> T.Type:
        method = getattr(self, f"_t_{type(e).__name__}")
        return method(e)

    def _t_Lit(self, e: A.Lit) -> T.Type:
        return {
            "bool": T.BOOL,
            "int": T.INT,
            "decimal": T.DECIMAL,
            "text": T.TEXT,
            "timestamp": T.TIMESTAMP,
            "duration": T.DURATION,
        }[e.kind]

    def _t_AllowLit(self, e) -> T.Type:
        return T.VERDICT

    def _t_NotImplementedLit(self, e) -> T.Type:
        return T.BOTTOM

    def _t_Deny(self, e: A.Deny) -> T.Type:
        for part, label in ((e.policy_id, "policy id"), (e.explanation, "explanation")):
            t = self.check_expr(part)
            if not assignable(t, T.TEXT, self.env.table):
                self.diag(f"deny {label} must be text, got {t.render()}", part.pos)
        return T.VERDICT

    def _t_Name(self, e: A.Name) -> T.Type:
        t = self.lookup(e.id)
        if t is None:
            return self.diag(f"unknown name {e.id!r}", e.pos)
        return t

    def _t_FieldAccess(self, e: A.FieldAccess) -> T.Type:
        obj = self.check_expr(e.obj)
        if isinstance(obj, T.Bottom):
            return T.BOTTOM
        if isinstance(obj, T.OptionalType):
            return self.diag(
                "value may be missing; use exists(...) or default(...) first",
                e.pos,
            )
        fields: tuple[tuple[str, T.Type, bool], ...] | None = None
        if isinstance(obj, T.NamedType):
            rec = self.env.table.record(obj.name)
            if rec is not None:
                fields = tuple((f.name, f.type, f.optional) for f in rec.fields)
        elif isinstance(obj, T.RecordShape):
            fields = tuple((n, t, False) for n, t in obj.fields)
        if fields is None:
            return self.diag(
                f"{obj.render()} has no fields", e.pos
            )
        for name, t, optional in fields:
            if name == e.field:
                return T.OptionalType(t) if optional else t
        names = [n for n, _, _ in fields]
        hint = difflib.get_close_matches(e.field, names, n=1)
        extra = f"; did you mean {hint[0]!r}?" if hint else ""
        return self.diag(
            f"{obj.render()} has no field {e.field!r}{extra}", e.pos
        )

    def _t_Index(self, e: A.Index) -> T.Type:
        obj = self.check_expr(e.obj)
        idx = self.check_expr(e.index)
        if not assignable(idx, T.INT, self.env.table):
            self.diag(f"index must be int, got {idx.render()}", e.index.pos)
        if isinstance(obj, T.ListType):
            return obj.elem
        if isinstance(obj, T.Bottom):
            return T.BOTTOM
        return self.diag(f"cannot index {obj.render()}", e.pos)

    def _t_ListLit(self, e: A.ListLit) -> T.Type:
        elem: T.Type = T.BOTTOM
        for item in e.items:
            t = self.check_expr(item)
            if isinstance(elem, T.Bottom):
                elem = t
            elif not (
                assignable(t, elem, self.env.table)
                or assignable(elem, t, self.env.table)
            ):
                self.diag(
                    f"list items disagree: {elem.render()} vs {t.render()}",
                    item.pos,
                )
        return T.ListType(elem)

    def _t_RecordLit(self, e: A.RecordLit) -> T.Type:
        seen = set()
        fields = []
        for name, value in e.fields:
            if name in seen:
                self.diag(f"duplicate field {name!r}", e.pos)
                continue
            seen.add(name)
            fields.append((name, self.check_expr(value)))
        return T.RecordShape(tuple(fields))

    def _t_Unary(self, e: A.Unary) -> T.Type:
        t = self.check_expr(e.operand)
        if e.op == "not":
            if not assignable(t, T.BOOL, self.env.table):
                self.diag(f"'not' needs bool, got {t.render()}", e.pos)
            return T.BOOL
        if not _is_numeric(t) and not isinstance(t, T.Bottom):
            self.diag(f"unary '-' needs a number, got {t.render()}", e.pos)
        return t if _is_numeric(t) else T.INT

    def _t_Binary(self, e: A.Binary) -> T.Type:
        lt = self.check_expr(e.left)
        rt = self.check_expr(e.right)
        op = e.op
        table = self.env.table
        if op in ("and", "or"):
            for t, side in ((lt, e.left), (rt, e.right)):
                if not assignable(t, T.BOOL, table):
                    self.diag(f"'{op}' needs bool, got {t.render()}", side.pos)
            return T.BOOL
        if op in ("==", "!="):
            self._check_equatable(e, lt, rt)
            return T.BOOL
        if op in ("<", "<=", ">", ">="):
            if isinstance(lt, T.Bottom) or isinstance(rt, T.Bottom):
                return T.BOOL
            if not _comparable_ordered(lt, rt):
                self.diag(
                    f"cannot order {lt.render()} against {rt.render()}", e.pos
                )
            return T.BOOL
        if op in ("+", "-"):
            if lt == T.TIMESTAMP and rt == T.DURATION:
                return T.TIMESTAMP
            if lt == T.DURATION and rt == T.DURATION:
                return T.DURATION
            if op == "+" and lt == T.TEXT and rt == T.TEXT:
                return T.TEXT
            if _is_numeric(lt) and _is_numeric(rt):
                return _numeric_join(lt, rt)
            if isinstance(lt, T.Bottom) or isinstance(rt, T.Bottom):
                return T.BOTTOM
            return self.diag(
                f"cannot apply '{op}' to {lt.render()} and {rt.render()}", e.pos
            )
        if op == "*":
            if _is_numeric(lt) and _is_numeric(rt):
                return _numeric_join(lt, rt)
            if isinstance(lt, T.Bottom) or isinstance(rt, T.Bottom):
                return T.BOTTOM
            return self.diag(
                f"cannot multiply {lt.render()} and {rt.render()}", e.pos
            )
        if op == "/":
            if _is_numeric(lt) and _is_numeric(rt):
                return T.DECIMAL
            if isinstance(lt, T.Bottom) or isinstance(rt, T.Bottom):
                return T.DECIMAL
            return self.diag(
                f"cannot divide {lt.render()} by {rt.render()}", e.pos
            )
        raise AssertionError(op)

    def _check_equatable(self, e: A.Binary, lt: T.Type, rt: T.Type) -> None:
        table = self.env.table
        for t, side in ((lt, e.left), (rt, e.right)):
            if isinstance(t, T.OptionalType):
                self.diag(
                    "value may be missing; use exists(...) or default(...)"
                    " before comparing",
                    side.pos,
                )
                return
        if _is_numeric(lt) and _is_numeric(rt):
            return
        for a, b, lit in ((lt, rt, e.right), (rt, lt, e.left)):
            if isinstance(a, T.NamedType) and table.enum(a.name) and b == T.TEXT:
                members = table.enum(a.name).members
                if isinstance(lit, A.Lit) and lit.kind == "text":
                    if lit.value not in members:
                        self.diag(
                            f"{lit.value!r} is not a member of enum {a.name!r}"
                            f" (members: {', '.join(members)})",
                            lit.pos,
                        )
                    return
                self.diag(
                    f"compare enum {a.name!r} against one of its literal"
                    " members",
                    e.pos,
                )
                return
        if not (
            assignable(lt, rt, table) or assignable(rt, lt, table)
        ):
            self.diag(
                f"cannot compare {lt.render()} with {rt.render()}", e.pos
            )

    def _t_If(self, e: A.If) -> T.Type:
        cond = self.check_expr(e.cond)
        if not assignable(cond, T.BOOL, self.env.table):
            self.diag(f"if condition must be bool, got {cond.render()}", e.cond.pos)
        then = self.check_block(e.then)
        els = self.check_block(e.els)
        if isinstance(then, T.Bottom):
            return els
        if isinstance(els, T.Bottom):
            return then
        if assignable(els, then, self.env.table):
            return then
        if assignable(then, els, self.env.table):
            return els
        return self.diag(
            f"if branches disagree: {then.render()} vs {els.render()}", e.pos
        )

    def _t_Call(self, e: A.Call) -> T.Type:
        target = self.module.function(e.name)
        if target is None:
            return self.diag(f"unknown function {e.name!r}", e.pos)
        if not e.name.startswith("policy_"):
            # guards are entry points; policies are the only callees
            self.diag("only policy functions may be called", e.pos)
        params = target.params
        if len(e.args) != len(params):
            return self.diag(
                f"{e.name} takes {len(params)} arguments, got {len(e.args)}",
                e.pos,
            )
        for arg, p in zip(e.args, params):
            at = self.check_expr(arg)
            pt, popt = lower_type(p.type, self.env.table, [], self.src)
            if popt:
                pt = T.OptionalType(pt)
            if not assignable(at, pt, self.env.table):
                self.diag(
                    f"argument {p.name!r} expects {pt.render()}, got {at.render()}",
                    arg.pos,
                )
        rt, _ = lower_type(target.return_type, self.env.table, [], self.src)
        return rt

    def _t_Exists(self, e: A.Exists) -> T.Type:
        t = self.check_expr(e.value)
        if not isinstance(t, (T.OptionalType, T.Bottom)):
            self.diag(
                f"exists(...) needs an optional value, got {t.render()}", e.pos
            )
        return T.BOOL

    def _t_Default(self, e: A.Default) -> T.Type:
        t = self.check_expr(e.value)
        fb = self.check_expr(e.fallback)
        if isinstance(t, T.OptionalType):
            if not assignable(fb, t.elem, self.env.table):
                self.diag(
                    f"default fallback must be {t.elem.render()}, got {fb.render()}",
                    e.fallback.pos,
                )
            return t.elem
        if not isinstance(t, T.Bottom):
            self.diag(
                f"default(...) needs an optional value, got {t.render()}", e.pos
            )
        return fb

    def _t_Quantifier(self, e: A.Quantifier) -> T.Type:
        src_t = self.check_expr(e.source)
        elem: T.Type = T.BOTTOM
        if isinstance(src_t, T.ListType):
            elem = src_t.elem
        elif not isinstance(src_t, T.Bottom):
            self.diag(
                f"{e.kind}(...) needs a list, got {src_t.render()}", e.source.pos
            )
        if e.binder is None:
            if e.kind == "count":
                return T.INT
            # bare sum
            if isinstance(elem, T.Bottom) or _is_numeric(elem):
                return elem if _is_numeric(elem) else T.INT
            self.diag(f"sum needs numeric items, got {elem.render()}", e.pos)
            return T.INT
        self.scope.append({e.binder: elem})
        body_t = self.check_expr(e.body)
        self.scope.pop()
        if e.kind in ("all", "any", "filter", "count"):
            if not assignable(body_t, T.BOOL, self.env.table):
                self.diag(
                    f"{e.kind} predicate must be bool, got {body_t.render()}",
                    e.body.pos,
                )
            if e.kind == "filter":
                return T.ListType(elem)
            return T.BOOL if e.kind in ("all", "any") else T.INT
        # sum with binder
        if not (_is_numeric(body_t) or isinstance(body_t, T.Bottom)):
            self.diag(
                f"sum expression must be numeric, got {body_t.render()}",
                e.body.pos,
            )
        return body_t if _is_numeric(body_t) else T.INT

    def _require_ctx(self, e) -> None:
        if self.lookup("ctx") != T.CONTEXT:
            self.diag("no context parameter in scope", e.pos)

    def _t_CtxNow(self, e) -> T.Type:
        self._require_ctx(e)
        return T.TIMESTAMP

    def _t_CtxCall(self, e: A.CtxCall) -> T.Type:
        self._require_ctx(e)
        sig = self.env.tools.get(e.tool)
        if sig is None:
            return self.diag(f"call to undeclared tool {e.tool!r}", e.pos)
        if sig.mutating:
            return self.diag(
                f"mutating tool in guard context: {e.tool!r} cannot be"
                " called from a guard",
                e.pos,
            )
        given = {name: value for name, value in e.args.fields}
        for p in sig.params:
            if p.name in given:
                at = self.check_expr(given.pop(p.name))
                target = T.OptionalType(p.type) if p.optional else p.type
                if not self._arg_assignable(e.args, p.name, at, target):
                    self.diag(
                        f"tool argument {p.name!r} expects {p.type.render()},"
                        f" got {at.render()}",
                        e.pos,
                    )
            elif not p.optional:
                self.diag(
                    f"missing required tool argument {p.name!r}", e.pos
                )
        for name in given:
            self.diag(f"unknown tool argument {name!r}", e.pos)
        if sig.returns is None:
            return self.diag(
                f"tool {e.tool!r} declares no result and cannot be used"
                " in an expression",
                e.pos,
            )
        return sig.returns

    def _arg_assignable(self, args: A.RecordLit, name: str, actual, expected) -> bool:
        if assignable(actual, expected, self.env.table):
            return True
        # text literal against an enum-typed argument
        target = T.strip_optional(expected)
        if isinstance(target, T.NamedType) and actual == T.TEXT:
            enum = self.env.table.enum(target.name)
            if enum:
                for fname, fvalue in args.fields:
                    if fname == name and isinstance(fvalue, A.Lit):
                        if fvalue.value in enum.members:
                            return True
        return False

    def _t_HistoryToolCalled(self, e: A.HistoryToolCalled) -> T.Type:
        self._require_ctx(e)
        sig = self.env.tools.get(e.tool)
        if sig is None:
            return self.diag(
                f"history lookup for undeclared tool {e.tool!r}", e.pos
            )
        if e.binder is not None:
            self.scope.append({e.binder: T.NamedType(sig.args_type_name)})
            pt = self.check_expr(e.pred)
            self.scope.pop()
            if not assignable(pt, T.BOOL, self.env.table):
                self.diag(
                    f"history predicate must be bool, got {pt.render()}",
                    e.pred.pos,
                )
        return T.BOOL

    def _t_HistoryUserConfirmed(self, e: A.HistoryUserConfirmed) -> T.Type:
        self._require_ctx(e)
        t = self.check_expr(e.topic)
        if not assignable(t, T.TEXT, self.env.table):
            self.diag(f"confirmation topic must be text, got {t.render()}", e.pos)
        return T.BOOL
