"""Parser behavior: positions, determinism, golden AST."""
import json
from pathlib import Path

import pytest

from toolguard.lang import GuardSyntaxError, parse, to_dict

GOLDEN = Path(__file__).parent / "data" / "cancellation_guard_ast.json"

CANCELLATION_FIXTURE = """\
type reservation {
  reservation_id: text,
  cabin: text,
  created_at: timestamp,
  insurance: bool,
}

tool get_reservation_details(reservation_id: text) -> reservation
tool mutating cancel_reservation(reservation_id: text) -> reservation

fun policy_cancel_window(args: cancel_reservation_args, ctx: context) -> verdict {
  let res = ctx.call(get_reservation_details, { reservation_id: args.reservation_id })
  if ctx.now() <= res.created_at + 24h {
    allow
  } else {
    deny("cancel_window", "Cancellation is only free within 24 hours of booking.")
  }
}

fun guard_cancel_reservation(args: cancel_reservation_args, ctx: context) -> verdict {
  check policy_cancel_window(args, ctx)
  allow
}
"""


def test_cancellation_fixture_golden_ast():
    module = parse(CANCELLATION_FIXTURE, "cancel.guard")
    dump = to_dict(module)
    golden = json.loads(GOLDEN.read_text())
    assert dump == golden


def test_parse_is_deterministic():
    a = to_dict(parse(CANCELLATION_FIXTURE, "x.guard"))
    b = to_dict(parse(CANCELLATION_FIXTURE, "x.guard"))
    assert a == b


def test_positions_present():
    module = parse("fun policy_x(a: t, ctx: context) -> verdict { allow }", "p.guard")
    fn = module.functions[0]
    assert (fn.pos.line, fn.pos.col) == (1, 1)
    assert fn.body.result.pos.col > 1


def test_unbalanced_paren_position():
    src = "fun policy_x(a: t, ctx: context) -> verdict {\n  (1 + 2\n}"
    with pytest.raises(GuardSyntaxError) as exc:
        parse(src, "bad.guard")
    assert exc.value.pos.line == 3
    assert "bad.guard:3:" in str(exc.value)


def test_unterminated_string():
    with pytest.raises(GuardSyntaxError, match="unterminated"):
        parse('fun policy_x(a: t, ctx: context) -> verdict { deny("x, "y") }')


def test_keyword_as_name_rejected():
    with pytest.raises(GuardSyntaxError):
        parse("fun filter(a: t, ctx: context) -> verdict { allow }")


def test_duration_and_timestamp_literals():
    src = (
        "fun policy_t(a: t, ctx: context) -> verdict {\n"
        "  let x = @2024-05-01T10:00:00 + 2d\n"
        "  let y = 36h\n"
        "  allow\n"
        "}"
    )
    module = parse(src)
    stmts = module.functions[0].body.stmts
    assert stmts[0].value.op == "+"
    assert stmts[1].value.kind == "duration"


def test_skeleton_parses(skeleton):
    module = parse(skeleton.text, "skeleton.guard")
    assert len(module.tools) == 14
    assert len(module.records) == 10
    assert len(module.enums) == 5
