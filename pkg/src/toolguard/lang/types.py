"""Type model for the guard DSL.

Types are immutable values. Named record and enum types are nominal and
resolve through a schema table (the toolkit's ``schemas`` mapping); list
and optional types are structural wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class Type:
    def render(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Primitive(Type):
    name: str

    def render(self) -> str:
        return self.name


BOOL = Primitive("bool")
INT = Primitive("int")
DECIMAL = Primitive("decimal")
TEXT = Primitive("text")
TIMESTAMP = Primitive("timestamp")
DURATION = Primitive("duration")
VERDICT = Primitive("verdict")
CONTEXT = Primitive("context")

PRIMITIVES = {
    t.name: t
    for t in (BOOL, INT, DECIMAL, TEXT, TIMESTAMP, DURATION, VERDICT, CONTEXT)
}


@dataclass(frozen=True)
class ListType(Type):
    elem: Type

    def render(self) -> str:
        return f"list<{self.elem.render()}>"


@dataclass(frozen=True)
class OptionalType(Type):
    elem: Type

    def render(self) -> str:
        return f"{self.elem.render()}?"


@dataclass(frozen=True)
class NamedType(Type):
    """Reference to a record or enum declared in the schema table."""

    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class RecordShape(Type):
    """Structural type inferred for an anonymous record literal."""

    fields: tuple[tuple[str, Type], ...]

    def render(self) -> str:
        inner = ", ".join(f"{n}: {t.render()}" for n, t in self.fields)
        return "{" + inner + "}"


@dataclass(frozen=True)
class Bottom(Type):
    """Type of ``not_implemented``; unifies with anything."""

    def render(self) -> str:
        return "<never>"


BOTTOM = Bottom()


@dataclass(frozen=True)
class FieldDef:
    name: str
    type: Type
    optional: bool = False


@dataclass(frozen=True)
class RecordSchema:
    name: str
    fields: tuple[FieldDef, ...]

    def field(self, name: str) -> FieldDef | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class EnumSchema:
    name: str
    members: tuple[str, ...]


SchemaDef = RecordSchema | EnumSchema


# Words that cannot be used as schema, tool, field or function names.
RESERVED_WORDS = frozenset(
    {
        "type", "enum", "tool", "mutating", "fun", "let", "check", "if",
        "else", "in", "exists", "default", "allow", "deny",
        "not_implemented", "true", "false", "and", "or", "not", "all",
        "any", "filter", "count", "sum", "ctx", "list",
    }
    | set(PRIMITIVES)
)


def strip_optional(t: Type) -> Type:
    return t.elem if isinstance(t, OptionalType) else t


def types_equal(a: Type, b: Type) -> bool:
    return a == b


@dataclass
class SchemaTable:
    """Resolves named types against a set of schema definitions."""

    defs: dict[str, SchemaDef] = field(default_factory=dict)

    def resolve(self, name: str) -> SchemaDef | None:
        return self.defs.get(name)

    def record(self, name: str) -> RecordSchema | None:
        d = self.defs.get(name)
        return d if isinstance(d, RecordSchema) else None

    def enum(self, name: str) -> EnumSchema | None:
        d = self.defs.get(name)
        return d if isinstance(d, EnumSchema) else None
