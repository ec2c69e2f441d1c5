"""Policy-independent guard-module skeleton generation.

The skeleton carries everything a guard author (human or generator)
needs before any policy is known: the toolkit's type declarations, tool
signatures, and one stub per mutating tool. Stubs evaluate to a
not-implemented fault so a fresh synthesis loop always starts red.
Output is byte-identical for identical toolkits.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NameCollision
from .lang import types as T
from .toolkit import Toolkit


@dataclass(frozen=True)
class SkeletonModule:
    type_decls: str
    signatures: str
    stubs: str

    @property
    def text(self) -> str:
        parts = [s for s in (self.type_decls, self.signatures, self.stubs) if s]
        return "\n".join(parts)


def _check_name(name: str, what: str) -> None:
    if name in T.RESERVED_WORDS:
        raise NameCollision(f"{what} {name!r} collides with a reserved DSL word")


def _render_field_type(t: T.Type, optional: bool) -> str:
    return f"{t.render()}?" if optional else t.render()


def generate_skeleton(toolkit: Toolkit) -> SkeletonModule:
    names_in_use: set[str] = set()

    def claim(name: str, what: str) -> None:
        _check_name(name, what)
        if name in names_in_use:
            raise NameCollision(f"{what} {name!r} is declared twice")
        names_in_use.add(name)

    type_lines: list[str] = ["# types"]
    for name, schema in toolkit.schemas.items():
        claim(name, "schema")
        if isinstance(schema, T.EnumSchema):
            members = ", ".join(f'"{m}"' for m in schema.members)
            type_lines.append(f"type {name} = enum({members})")
        else:
            type_lines.append(f"type {name} {{")
            for f in schema.fields:
                type_lines.append(
                    f"  {f.name}: {_render_field_type(f.type, f.optional)},"
                )
            type_lines.append("}")
    type_lines.append("")

    sig_lines: list[str] = ["# tool signatures"]
    for tool in toolkit.tools:
        claim(tool.name, "tool")
        claim(tool.args_type_name, "tool args record")
        mut = "mutating " if tool.mutating else ""
        params = ", ".join(
            f"{p.name}: {_render_field_type(p.type, not p.required)}"
            for p in tool.params
        )
        ret = f" -> {tool.returns.render()}" if tool.returns else ""
        sig_lines.append(f"tool {mut}{tool.name}({params}){ret}")
    sig_lines.append("")

    stub_lines: list[str] = []
    mutating = toolkit.mutating_tools()
    if mutating:
        stub_lines.append("# guard stubs")
        for tool in mutating:
            stub_lines.append(
                f"fun guard_{tool.name}(args: {tool.args_type_name},"
                " ctx: context) -> verdict {"
            )
            stub_lines.append("  not_implemented")
            stub_lines.append("}")
        stub_lines.append("")

    return SkeletonModule(
        type_decls="\n".join(type_lines),
        signatures="\n".join(sig_lines),
        stubs="\n".join(stub_lines),
    )
