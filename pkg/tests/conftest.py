import json
from pathlib import Path

import pytest

from toolguard.document import segment
from toolguard.forge import load_suite
from toolguard.lang import parse
from toolguard.openapi import parse_openapi
from toolguard.policy import PolicyMap
from toolguard.skeleton import generate_skeleton

DATA = Path(__file__).resolve().parents[1] / "src" / "toolguard" / "data"
TESTDATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def openapi_text():
    return (DATA / "airline_openapi.json").read_text()


@pytest.fixture(scope="session")
def toolkit(openapi_text):
    return parse_openapi(openapi_text, "json")


@pytest.fixture(scope="session")
def skeleton(toolkit):
    return generate_skeleton(toolkit)


@pytest.fixture(scope="session")
def gt_guard_source():
    return (DATA / "airline_gt.guard").read_text()


@pytest.fixture(scope="session")
def gt_module(gt_guard_source):
    return parse(gt_guard_source, "airline_gt.guard")


@pytest.fixture(scope="session")
def policy_text():
    return (DATA / "airline_policy.md").read_text()


@pytest.fixture(scope="session")
def policy_doc(policy_text):
    return segment(policy_text)


@pytest.fixture(scope="session")
def gt_map():
    return PolicyMap.from_json_text((DATA / "airline_gt_map.json").read_text())


@pytest.fixture(scope="session")
def heldout_suite():
    return load_suite(DATA / "heldout_tests.json")


@pytest.fixture(scope="session")
def tasks_dir():
    return DATA / "tasks"


@pytest.fixture(scope="session")
def gt_map_json():
    return json.loads((DATA / "airline_gt_map.json").read_text())
