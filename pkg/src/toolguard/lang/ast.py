"""AST for the guard DSL. Every node carries its source position."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from decimal import Decimal
from typing import Optional


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass
class Node:
    pos: Pos = field(kw_only=True)


# --- type expressions (surface syntax) ---

@dataclass
class TypeName(Node):
    name: str


@dataclass
class TypeList(Node):
    elem: "TypeExpr"


@dataclass
class TypeOptional(Node):
    elem: "TypeExpr"


TypeExpr = TypeName | TypeList | TypeOptional


# --- declarations ---

@dataclass
class FieldDecl(Node):
    name: str
    type: TypeExpr


@dataclass
class RecordDecl(Node):
    name: str
    fields: list[FieldDecl]


@dataclass
class EnumDecl(Node):
    name: str
    members: list[str]


@dataclass
class ParamDecl(Node):
    name: str
    type: TypeExpr


@dataclass
class ToolDecl(Node):
    name: str
    mutating: bool
    params: list[ParamDecl]
    returns: Optional[TypeExpr]


@dataclass
class FunDecl(Node):
    name: str
    params: list[ParamDecl]
    return_type: TypeExpr
    body: "Block"


@dataclass
class Module(Node):
    source_name: str
    records: list[RecordDecl] = field(default_factory=list)
    enums: list[EnumDecl] = field(default_factory=list)
    tools: list[ToolDecl] = field(default_factory=list)
    functions: list[FunDecl] = field(default_factory=list)

    def function(self, name: str) -> Optional[FunDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def guard_for(self, tool: str) -> Optional[FunDecl]:
        return self.function(f"guard_{tool}")

    def guard_tools(self) -> list[str]:
        return [
            f.name[len("guard_"):]
            for f in self.functions
            if f.name.startswith("guard_")
        ]


# --- statements and expressions ---

@dataclass
class LetStmt(Node):
    name: str
    value: "Expr"


@dataclass
class CheckStmt(Node):
    value: "Expr"


Stmt = LetStmt | CheckStmt


@dataclass
class Block(Node):
    stmts: list[Stmt]
    result: "Expr"


@dataclass
class Lit(Node):
    # kind: bool | int | decimal | text | timestamp | duration
    kind: str
    value: bool | int | Decimal | str | datetime | object


@dataclass
class AllowLit(Node):
    pass


@dataclass
class NotImplementedLit(Node):
    pass


@dataclass
class Deny(Node):
    policy_id: "Expr"
    explanation: "Expr"


@dataclass
class Name(Node):
    id: str


@dataclass
class FieldAccess(Node):
    obj: "Expr"
    field: str


@dataclass
class Index(Node):
    obj: "Expr"
    index: "Expr"


@dataclass
class ListLit(Node):
    items: list["Expr"]


@dataclass
class RecordLit(Node):
    fields: list[tuple[str, "Expr"]]


@dataclass
class Unary(Node):
    op: str  # "not" | "-"
    operand: "Expr"


@dataclass
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class If(Node):
    cond: "Expr"
    then: Block
    els: Block


@dataclass
class Call(Node):
    name: str
    args: list["Expr"]


@dataclass
class Exists(Node):
    value: "Expr"


@dataclass
class Default(Node):
    value: "Expr"
    fallback: "Expr"


@dataclass
class Quantifier(Node):
    # kind: all | any | filter | count | sum; binder is None for the
    # plain count/sum forms.
    kind: str
    binder: Optional[str]
    source: "Expr"
    body: Optional["Expr"]


@dataclass
class CtxNow(Node):
    pass


@dataclass
class CtxCall(Node):
    tool: str
    args: RecordLit


@dataclass
class HistoryToolCalled(Node):
    tool: str
    binder: Optional[str]
    pred: Optional["Expr"]


@dataclass
class HistoryUserConfirmed(Node):
    topic: "Expr"


Expr = (
    Lit | AllowLit | NotImplementedLit | Deny | Name | FieldAccess | Index
    | ListLit | RecordLit | Unary | Binary | If | Call | Exists | Default
    | Quantifier | CtxNow | CtxCall | HistoryToolCalled | HistoryUserConfirmed
)


def to_dict(node):
    """Stable dict dump of an AST, used for golden tests."""
    if isinstance(node, Node):
        out = {"node": type(node).__name__}
        for f in dataclasses.fields(node):
            if f.name == "pos":
                out["pos"] = [node.pos.line, node.pos.col]
            else:
                out[f.name] = to_dict(getattr(node, f.name))
        return out
    if isinstance(node, list):
        return [to_dict(x) for x in node]
    if isinstance(node, tuple):
        return [to_dict(x) for x in node]
    if isinstance(node, Decimal):
        return {"decimal": str(node)}
    if isinstance(node, datetime):
        return {"timestamp": node.isoformat()}
    if isinstance(node, timedelta):
        return {"duration_hours": node.total_seconds() / 3600}
    return node
