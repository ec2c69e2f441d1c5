"""OpenAPI 3.x ingestion.

Maps a tool-calling OpenAPI document onto a :class:`Toolkit`. The
supported schema subset is deliberately small so the guard DSL's type
system stays total and decidable:

* component schemas: objects with typed properties, string enums
* property types: string (plus ``date-time`` format), number, integer,
  boolean, array, ``$ref``, ``nullable``
* rejected, never silently dropped: ``oneOf``/``anyOf``/``allOf``/``not``,
  inline objects and enums, untyped free-form objects, recursive schemas

Whether a tool mutates system state cannot be derived from an OpenAPI
document, so it is read from the ``x-mutating`` vendor extension on the
operation.
"""
from __future__ import annotations

import json
import re

import yaml

from .errors import OpenApiParseError, UnsupportedSchema
from .lang import types as T
from .toolkit import ParamSpec, ToolSpec, Toolkit

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_METHODS = ("get", "post", "put", "patch", "delete")
_COMPOSITES = ("oneOf", "anyOf", "allOf", "not")


def parse_openapi(document: str, format: str = "json") -> Toolkit:
    """Parse an OpenAPI 3.x document into a Toolkit.

    One ToolSpec per operation; component schemas are lifted into named
    record/enum types.
    """
    raw = _load(document, format)
    if not isinstance(raw, dict):
        raise OpenApiParseError("document root must be a mapping")
    version = str(raw.get("openapi", ""))
    if not version.startswith("3."):
        raise OpenApiParseError(f"unsupported openapi version: {version!r}")

    components = raw.get("components", {}).get("schemas", {}) or {}
    schemas: dict[str, T.SchemaDef] = {}
    for name, node in components.items():
        path = f"components/schemas/{name}"
        _require_ident(name, path)
        schemas[name] = _component(name, node, path)
    _reject_recursion(schemas)

    tools: list[ToolSpec] = []
    for route, path_item in (raw.get("paths", {}) or {}).items():
        if not isinstance(path_item, dict):
            raise OpenApiParseError(f"paths{route}: expected a mapping")
        for method in _METHODS:
            op = path_item.get(method)
            if op is None:
                continue
            tools.append(_operation(route, method, op, components))

    kit = Toolkit(tools=tools, schemas=schemas)
    kit.validate()
    return kit


def _load(document: str, format: str):
    if format == "json":
        try:
            return json.loads(document)
        except json.JSONDecodeError as e:
            raise OpenApiParseError(f"malformed JSON: {e}") from e
    if format == "yaml":
        try:
            return yaml.safe_load(document)
        except yaml.YAMLError as e:
            raise OpenApiParseError(f"malformed YAML: {e}") from e
    raise OpenApiParseError(f"unknown format: {format!r}")


def _require_ident(name: str, path: str) -> None:
    if not _IDENT.match(name):
        raise OpenApiParseError(f"{path}: {name!r} is not a valid identifier")


def _component(name: str, node, path: str) -> T.SchemaDef:
    if not isinstance(node, dict):
        raise UnsupportedSchema("schema must be a mapping", path)
    _reject_composites(node, path)
    if node.get("enum") is not None:
        if node.get("type") != "string":
            raise UnsupportedSchema("only string enums are supported", path)
        members = node["enum"]
        if not members or not all(isinstance(m, str) for m in members):
            raise UnsupportedSchema("enum members must be strings", path)
        return T.EnumSchema(name=name, members=tuple(members))
    if node.get("type") == "object":
        props = node.get("properties")
        if not isinstance(props, dict) or not props:
            raise UnsupportedSchema(
                "untyped free-form object (no properties)", path
            )
        if node.get("additionalProperties"):
            raise UnsupportedSchema("additionalProperties not supported", path)
        required = set(node.get("required", []) or [])
        fields = []
        for pname, pnode in props.items():
            ppath = f"{path}/properties/{pname}"
            _require_ident(pname, ppath)
            ptype, nullable = _type_of(pnode, ppath)
            fields.append(
                T.FieldDef(
                    pname, ptype, optional=(pname not in required) or nullable
                )
            )
        return T.RecordSchema(name=name, fields=tuple(fields))
    raise UnsupportedSchema(
        f"component must be an object or string enum, got {node.get('type')!r}",
        path,
    )


def _type_of(node, path: str) -> tuple[T.Type, bool]:
    """Convert a property/parameter schema node. Returns (type, nullable)."""
    if not isinstance(node, dict):
        raise UnsupportedSchema("schema must be a mapping", path)
    _reject_composites(node, path)
    if "$ref" in node:
        ref = node["$ref"]
        prefix = "#/components/schemas/"
        if not isinstance(ref, str) or not ref.startswith(prefix):
            raise UnsupportedSchema(f"unsupported $ref target {ref!r}", path)
        return T.NamedType(ref[len(prefix):]), bool(node.get("nullable"))
    nullable = bool(node.get("nullable"))
    if node.get("enum") is not None:
        raise UnsupportedSchema(
            "inline enum; define it as a named component schema", path
        )
    kind = node.get("type")
    if kind == "string":
        if node.get("format") == "date-time":
            return T.TIMESTAMP, nullable
        return T.TEXT, nullable
    if kind == "number":
        return T.DECIMAL, nullable
    if kind == "integer":
        return T.INT, nullable
    if kind == "boolean":
        return T.BOOL, nullable
    if kind == "array":
        items = node.get("items")
        if items is None:
            raise UnsupportedSchema("array without items", path)
        elem, _ = _type_of(items, f"{path}/items")
        return T.ListType(elem), nullable
    if kind == "object":
        raise UnsupportedSchema(
            "inline object; define it as a named component schema", path
        )
    raise UnsupportedSchema(f"untyped or unknown type {kind!r}", path)


def _reject_composites(node: dict, path: str) -> None:
    for key in _COMPOSITES:
        if key in node:
            raise UnsupportedSchema(f"{key} is not supported", path)


def _reject_recursion(schemas: dict[str, T.SchemaDef]) -> None:
    """Reject $ref cycles; the DSL has no recursive values."""

    def refs(name: str) -> list[str]:
        d = schemas.get(name)
        if not isinstance(d, T.RecordSchema):
            return []
        out = []
        for f in d.fields:
            t = f.type
            while isinstance(t, (T.ListType, T.OptionalType)):
                t = t.elem
            if isinstance(t, T.NamedType):
                out.append(t.name)
        return out

    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(name: str, trail: list[str]) -> None:
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = " -> ".join(trail + [name])
            raise UnsupportedSchema(
                f"recursive schema ({cycle})", f"components/schemas/{name}"
            )
        state[name] = 1
        for dep in refs(name):
            if dep in schemas:
                visit(dep, trail + [name])
        state[name] = 2

    for name in schemas:
        visit(name, [])


def _operation(route: str, method: str, op, components: dict) -> ToolSpec:
    path = f"paths{route}/{method}"
    if not isinstance(op, dict):
        raise OpenApiParseError(f"{path}: expected a mapping")
    name = op.get("operationId")
    if not name:
        raise OpenApiParseError(f"{path}: operationId is required")
    _require_ident(name, path)

    params: list[ParamSpec] = []
    for i, p in enumerate(op.get("parameters", []) or []):
        ppath = f"{path}/parameters/{i}"
        if not isinstance(p, dict) or "name" not in p or "schema" not in p:
            raise OpenApiParseError(f"{ppath}: parameter needs name and schema")
        _require_ident(p["name"], ppath)
        ptype, nullable = _type_of(p["schema"], f"{ppath}/schema")
        params.append(
            ParamSpec(
                name=p["name"],
                type=ptype,
                required=bool(p.get("required")) and not nullable,
                description=p.get("description", ""),
            )
        )

    body = op.get("requestBody")
    if body is not None:
        bpath = f"{path}/requestBody"
        schema = (
            body.get("content", {})
            .get("application/json", {})
            .get("schema")
        )
        if schema is None:
            raise OpenApiParseError(f"{bpath}: missing application/json schema")
        if schema.get("type") != "object" or "properties" not in schema:
            raise UnsupportedSchema(
                "request body must be an inline object with properties", bpath
            )
        required = set(schema.get("required", []) or [])
        for pname, pnode in schema["properties"].items():
            ppath = f"{bpath}/properties/{pname}"
            _require_ident(pname, ppath)
            ptype, nullable = _type_of(pnode, ppath)
            params.append(
                ParamSpec(
                    name=pname,
                    type=ptype,
                    required=(pname in required) and not nullable,
                    description=pnode.get("description", ""),
                )
            )

    returns: T.Type | None = None
    ok = (op.get("responses", {}) or {}).get("200")
    if ok is not None:
        schema = (
            ok.get("content", {}).get("application/json", {}).get("schema")
        )
        if schema is not None:
            returns, _ = _type_of(schema, f"{path}/responses/200")

    return ToolSpec(
        name=name,
        description=op.get("description") or op.get("summary", ""),
        params=tuple(params),
        returns=returns,
        mutating=bool(op.get("x-mutating", False)),
    )
