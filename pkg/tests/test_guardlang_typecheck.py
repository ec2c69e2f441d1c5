"""Static checks: sandbox rules, suggestions, recursion, signatures."""
from toolguard.lang import parse, typecheck

HEADER = """\
type seat_map { economy: int, business: int }
type booking { booking_id: text, seats: seat_map, note: text? }
tool get_booking(booking_id: text) -> booking
tool mutating change_booking(booking_id: text, seats: int) -> booking
"""


def check(body: str, toolkit=None):
    module = parse(HEADER + body, "t.guard")
    return [d.format() for d in typecheck(module, toolkit)]


def test_clean_module():
    assert check(
        "fun policy_ok(args: change_booking_args, ctx: context) -> verdict {"
        " allow }\n"
        "fun guard_change_booking(args: change_booking_args, ctx: context)"
        " -> verdict { check policy_ok(args, ctx) allow }\n"
    ) == []


def test_skeleton_clean(skeleton, toolkit):
    module = parse(skeleton.text, "skeleton.guard")
    assert typecheck(module, toolkit) == []


def test_gt_guards_clean(gt_module, toolkit):
    assert typecheck(gt_module, toolkit) == []


def test_mutating_tool_in_guard_context():
    diags = check(
        "fun policy_bad(args: change_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(change_booking, { booking_id: \"b\", seats: 1 })\n"
        "  allow\n"
        "}\n"
    )
    assert any("mutating tool in guard context" in d for d in diags)


def test_misspelled_field_suggestion():
    diags = check(
        "fun policy_bad(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { booking_id: args.booking_id })\n"
        "  if b.seats.economyy > 0 { allow } else { allow }\n"
        "}\n"
    )
    assert any("economyy" in d and "did you mean 'economy'" in d for d in diags)


def test_recursion_rejected():
    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {"
        " policy_b(args, ctx) }\n"
        "fun policy_b(args: get_booking_args, ctx: context) -> verdict {"
        " policy_a(args, ctx) }\n"
    )
    assert any("recursion" in d for d in diags)


def test_self_recursion_rejected():
    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {"
        " policy_a(args, ctx) }\n"
    )
    assert any("recursion" in d for d in diags)


def test_unknown_name():
    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  if nonsense > 1 { allow } else { allow }\n"
        "}\n"
    )
    assert any("unknown name 'nonsense'" in d for d in diags)


def test_guard_must_return_verdict():
    diags = check(
        "fun guard_change_booking(args: change_booking_args, ctx: context)"
        " -> bool { true }\n"
    )
    assert any("must return verdict" in d for d in diags)


def test_guard_for_non_mutating_tool():
    diags = check(
        "fun guard_get_booking(args: get_booking_args, ctx: context)"
        " -> verdict { allow }\n"
    )
    assert any("non-mutating" in d for d in diags)


def test_guard_args_type_enforced():
    diags = check(
        "fun guard_change_booking(args: get_booking_args, ctx: context)"
        " -> verdict { allow }\n"
    )
    assert any("change_booking_args" in d for d in diags)


def test_function_naming_enforced():
    diags = check(
        "fun helper_x(args: get_booking_args, ctx: context) -> verdict"
        " { allow }\n"
    )
    assert any("policy_<name> or guard_<tool>" in d for d in diags)


def test_ctx_call_arg_checking():
    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { booking_id: 7 })\n"
        "  allow\n"
        "}\n"
    )
    assert any("expects text" in d for d in diags)

    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { })\n"
        "  allow\n"
        "}\n"
    )
    assert any("missing required tool argument" in d for d in diags)

    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { booking_id: \"x\", extra: 1 })\n"
        "  allow\n"
        "}\n"
    )
    assert any("unknown tool argument" in d for d in diags)


def test_optional_access_requires_unwrap():
    diags = check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { booking_id: \"x\" })\n"
        "  if b.note == \"vip\" { allow } else { allow }\n"
        "}\n"
    )
    assert any("may be missing" in d or "cannot compare" in d for d in diags)

    assert check(
        "fun policy_a(args: get_booking_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_booking, { booking_id: \"x\" })\n"
        "  if exists(b.note) and default(b.note, \"\") == \"vip\" {"
        " allow } else { allow }\n"
        "}\n"
    ) == []


def test_enum_member_comparison(toolkit):
    src = (
        "type cabin = enum(\"economy\", \"business\")\n"
        "type booking2 { cabin: cabin }\n"
        "tool get_b2(booking_id: text) -> booking2\n"
        "fun policy_a(args: get_b2_args, ctx: context) -> verdict {\n"
        "  let b = ctx.call(get_b2, { booking_id: \"x\" })\n"
        "  if b.cabin == \"first\" { allow } else { allow }\n"
        "}\n"
    )
    diags = [d.format() for d in typecheck(parse(src, "t.guard"))]
    assert any("not a member of enum" in d for d in diags)


def test_cross_check_against_toolkit(toolkit):
    # a module whose tool declaration disagrees with the real toolkit
    src = (
        "tool mutating cancel_reservation(wrong_param: int) -> text\n"
        "fun guard_cancel_reservation(args: cancel_reservation_args,"
        " ctx: context) -> verdict { allow }\n"
    )
    diags = [d.format() for d in typecheck(parse(src, "t.guard"), toolkit)]
    assert any("parameters disagree" in d for d in diags)
    assert any("result type disagrees" in d for d in diags)


def test_diagnostic_format():
    module = parse("fun policy_a(args: nope, ctx: context) -> verdict { allow }", "f.guard")
    diags = typecheck(module)
    assert diags
    formatted = diags[0].format()
    assert formatted.startswith("f.guard:")
    parts = formatted.split(":")
    assert parts[1].isdigit() and parts[2].isdigit()
    assert "error" in formatted
