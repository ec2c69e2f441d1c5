"""Toolkit model: the agent's tools plus the record types they exchange."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ToolguardError
from .lang import types as T


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: T.Type
    required: bool = True
    description: str = ""


@dataclass(frozen=True)
class ToolSpec:
    """One callable tool. ``mutating`` is an explicit annotation, never
    inferred from prose."""

    name: str
    description: str
    params: tuple[ParamSpec, ...]
    returns: T.Type | None
    mutating: bool

    def __post_init__(self):
        # Required params always precede optional ones; ordering within
        # each group follows the declaration.
        ordered = tuple(
            sorted(self.params, key=lambda p: (0 if p.required else 1))
        )
        object.__setattr__(self, "params", ordered)

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    @property
    def args_type_name(self) -> str:
        return f"{self.name}_args"


@dataclass
class Toolkit:
    tools: list[ToolSpec] = field(default_factory=list)
    schemas: dict[str, T.SchemaDef] = field(default_factory=dict)

    def tool(self, name: str) -> ToolSpec | None:
        for t in self.tools:
            if t.name == name:
                return t
        return None

    def mutating_tools(self) -> list[ToolSpec]:
        return [t for t in self.tools if t.mutating]

    def schema_table(self) -> T.SchemaTable:
        table = dict(self.schemas)
        for tool in self.tools:
            table[tool.args_type_name] = T.RecordSchema(
                name=tool.args_type_name,
                fields=tuple(
                    T.FieldDef(p.name, p.type, optional=not p.required)
                    for p in tool.params
                ),
            )
        return T.SchemaTable(table)

    def validate(self) -> None:
        """Check internal consistency; raises ToolguardError on breach."""
        seen: set[str] = set()
        for tool in self.tools:
            if tool.name in seen:
                raise ToolguardError(f"duplicate tool name: {tool.name}")
            seen.add(tool.name)
        table = self.schema_table()
        for tool in self.tools:
            for p in tool.params:
                _check_resolvable(p.type, table, f"{tool.name}.{p.name}")
            if tool.returns is not None:
                _check_resolvable(tool.returns, table, f"{tool.name} return")
        for schema in self.schemas.values():
            if isinstance(schema, T.RecordSchema):
                for f in schema.fields:
                    _check_resolvable(f.type, table, f"{schema.name}.{f.name}")


def _check_resolvable(t: T.Type, table: T.SchemaTable, where: str) -> None:
    if isinstance(t, T.NamedType):
        if table.resolve(t.name) is None:
            raise ToolguardError(f"{where}: unresolved type {t.name!r}")
    elif isinstance(t, (T.ListType, T.OptionalType)):
        _check_resolvable(t.elem, table, where)
