"""OpenAPI ingestion tests."""
import json

import pytest

from toolguard.errors import NameCollision, OpenApiParseError, UnsupportedSchema
from toolguard.lang import types as T
from toolguard.openapi import parse_openapi
from toolguard.skeleton import generate_skeleton


def minimal_doc(paths=None, schemas=None):
    return json.dumps(
        {
            "openapi": "3.0.3",
            "info": {"title": "t", "version": "1"},
            "components": {"schemas": schemas or {}},
            "paths": paths or {},
        }
    )


ONE_TOOL = {
    "/book_reservation": {
        "post": {
            "operationId": "book_reservation",
            "description": "Book a flight.",
            "x-mutating": True,
            "requestBody": {
                "content": {
                    "application/json": {
                        "schema": {
                            "type": "object",
                            "required": ["flight_id", "cabin", "passengers"],
                            "properties": {
                                "flight_id": {"type": "string"},
                                "cabin": {"type": "string"},
                                "passengers": {"type": "integer"},
                            },
                        }
                    }
                }
            },
            "responses": {},
        }
    }
}


class TestParse:
    def test_airline_toolkit_shape(self, toolkit):
        assert len(toolkit.tools) == 14
        assert len(toolkit.mutating_tools()) == 6
        assert {t.name for t in toolkit.mutating_tools()} == {
            "book_reservation",
            "cancel_reservation",
            "update_reservation_flights",
            "update_reservation_passengers",
            "update_reservation_baggages",
            "send_certificate",
        }

    def test_empty_paths_yields_zero_tools(self):
        kit = parse_openapi(minimal_doc())
        assert kit.tools == []

    def test_single_tool_field_by_field(self):
        kit = parse_openapi(minimal_doc(paths=ONE_TOOL))
        assert len(kit.tools) == 1
        tool = kit.tools[0]
        assert tool.name == "book_reservation"
        assert tool.description == "Book a flight."
        assert tool.mutating is True
        assert tool.returns is None
        assert [p.name for p in tool.params] == ["flight_id", "cabin", "passengers"]
        assert [p.type for p in tool.params] == [T.TEXT, T.TEXT, T.INT]
        assert all(p.required for p in tool.params)

    def test_required_params_precede_optional(self):
        paths = {
            "/f": {
                "post": {
                    "operationId": "f",
                    "requestBody": {
                        "content": {
                            "application/json": {
                                "schema": {
                                    "type": "object",
                                    "required": ["b"],
                                    "properties": {
                                        "a": {"type": "string"},
                                        "b": {"type": "string"},
                                    },
                                }
                            }
                        }
                    },
                    "responses": {},
                }
            }
        }
        kit = parse_openapi(minimal_doc(paths=paths))
        assert [(p.name, p.required) for p in kit.tools[0].params] == [
            ("b", True),
            ("a", False),
        ]

    def test_date_time_format_becomes_timestamp(self, toolkit):
        res = toolkit.schemas["reservation"]
        field = res.field("created_at")
        assert field.type == T.TIMESTAMP

    def test_yaml_input(self):
        import yaml

        doc = yaml.safe_dump(json.loads(minimal_doc(paths=ONE_TOOL)))
        kit = parse_openapi(doc, "yaml")
        assert kit.tools[0].name == "book_reservation"

    def test_malformed_document(self):
        with pytest.raises(OpenApiParseError):
            parse_openapi("{not json", "json")

    def test_wrong_version(self):
        with pytest.raises(OpenApiParseError, match="version"):
            parse_openapi(json.dumps({"openapi": "2.0", "paths": {}}))


class TestUnsupportedSchemas:
    def test_one_of_rejected_with_path(self):
        schemas = {"bad": {"oneOf": [{"type": "string"}, {"type": "integer"}]}}
        with pytest.raises(UnsupportedSchema) as exc:
            parse_openapi(minimal_doc(schemas=schemas))
        assert exc.value.path == "components/schemas/bad"

    def test_recursive_schema_rejected(self):
        schemas = {
            "node": {
                "type": "object",
                "properties": {
                    "children": {
                        "type": "array",
                        "items": {"$ref": "#/components/schemas/node"},
                    }
                },
            }
        }
        with pytest.raises(UnsupportedSchema, match="recursive"):
            parse_openapi(minimal_doc(schemas=schemas))

    def test_mutually_recursive_schemas_rejected(self):
        schemas = {
            "a": {
                "type": "object",
                "properties": {"b": {"$ref": "#/components/schemas/b"}},
            },
            "b": {
                "type": "object",
                "properties": {"a": {"$ref": "#/components/schemas/a"}},
            },
        }
        with pytest.raises(UnsupportedSchema, match="recursive"):
            parse_openapi(minimal_doc(schemas=schemas))

    def test_free_form_object_rejected(self):
        schemas = {"blob": {"type": "object"}}
        with pytest.raises(UnsupportedSchema, match="free-form"):
            parse_openapi(minimal_doc(schemas=schemas))

    def test_inline_object_property_rejected(self):
        schemas = {
            "outer": {
                "type": "object",
                "properties": {
                    "inner": {
                        "type": "object",
                        "properties": {"x": {"type": "integer"}},
                    }
                },
            }
        }
        with pytest.raises(UnsupportedSchema, match="inline object"):
            parse_openapi(minimal_doc(schemas=schemas))

    def test_untyped_property_rejected(self):
        schemas = {
            "outer": {"type": "object", "properties": {"x": {}}}
        }
        with pytest.raises(UnsupportedSchema, match="untyped"):
            parse_openapi(minimal_doc(schemas=schemas))

    def test_nullable_maps_to_optional(self):
        schemas = {
            "rec": {
                "type": "object",
                "required": ["x"],
                "properties": {"x": {"type": "string", "nullable": True}},
            }
        }
        kit = parse_openapi(minimal_doc(schemas=schemas))
        assert kit.schemas["rec"].field("x").optional


class TestNameCollisions:
    def test_reserved_schema_name(self):
        schemas = {
            "verdict": {
                "type": "object",
                "properties": {"x": {"type": "string"}},
            }
        }
        kit = parse_openapi(minimal_doc(schemas=schemas))
        with pytest.raises(NameCollision):
            generate_skeleton(kit)

    def test_reserved_tool_name(self):
        paths = {
            "/filter": {
                "post": {"operationId": "filter", "responses": {}}
            }
        }
        kit = parse_openapi(minimal_doc(paths=paths))
        with pytest.raises(NameCollision):
            generate_skeleton(kit)
