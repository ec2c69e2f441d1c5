#!/usr/bin/env python3
"""Regenerates the committed held-out guard test suite.

The suite is hand-designed, disjoint from any forging suite, and covers
every mutating tool with at least two compliance and two violation
scenarios. Each case targets one policy; histories and mocks are set up
so no other policy interferes with the targeted verdict."""
from datetime import datetime, timedelta
from pathlib import Path

from toolguard.events import AssistantMessage, UserMessage
from toolguard.forge import GuardTestCase, dump_suite
from toolguard.lang import MockRule

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "src" / "toolguard" / "data" / "heldout_tests.json"

NOW = datetime(2024, 5, 1, 10, 0, 0)


def hours_ago(h: float) -> str:
    return (NOW - timedelta(hours=h)).isoformat()


def confirm(topic_msg: str, reply: str = "Yes, please."):
    return (AssistantMessage(topic_msg), UserMessage(reply))


CONFIRM_BOOK = confirm("Shall I book this reservation for you?", "Yes, go ahead.")
CONFIRM_CANCEL = confirm(
    "Do you want me to cancel this reservation?", "Yes, please cancel."
)
CONFIRM_UPDATE = confirm(
    "Shall I update the flights on your reservation?", "Yes, please update."
)
CONFIRM_CERT = confirm(
    "I can send you a compensation certificate. Would you like that?",
    "Yes, please.",
)


def flight(econ=5, basic=4, business=4, status="available"):
    return {
        "flight_id": "HAT100", "date": "2024-05-20",
        "origin": "JFK", "destination": "SFO", "status": status,
        "available_seats": {
            "basic_economy": basic, "economy": econ, "business": business,
        },
        "prices": {"basic_economy": 80, "economy": 120, "business": 400},
    }


def user_payload(pm_ids=("card_main",)):
    return {
        "user_id": "user_1", "name": "Test User", "membership": "regular",
        "payment_methods": [
            {"payment_id": pid, "kind": "credit_card", "balance": 9000}
            for pid in pm_ids
        ],
    }


def reservation(created_hours, cabin="economy", insurance=False, pax=2,
                bags=2, nonfree=1):
    passengers = [
        {"first_name": f"P{i}", "last_name": "Test"} for i in range(pax)
    ]
    return {
        "reservation_id": "RESX", "user_id": "user_1",
        "origin": "JFK", "destination": "SFO",
        "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-20"}],
        "cabin": cabin, "passengers": passengers,
        "payment_method_id": "card_main", "insurance": insurance,
        "created_at": hours_ago(created_hours),
        "total_baggages": bags, "nonfree_baggages": nonfree,
        "status": "active", "total_price": 240,
    }


def book_args(pax=2, cabin="economy", pm="card_main"):
    return {
        "user_id": "user_1", "origin": "JFK", "destination": "SFO",
        "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-20"}],
        "cabin": cabin,
        "passengers": [
            {"first_name": f"P{i}", "last_name": "Test"} for i in range(pax)
        ],
        "payment_method_id": pm, "insurance": False,
        "total_baggages": 0, "nonfree_baggages": 0,
    }


def case(id, tool, policy, args, expected, history=(), mocks=()):
    return GuardTestCase(
        id=id, tool=tool, policy_id=policy, args=args, expected=expected,
        history=tuple(history), mocks=tuple(mocks), now=NOW,
    )


BOOK_MOCKS = (
    MockRule("get_flight_instance", None, flight()),
    MockRule("get_user_details", None, user_payload()),
)

TESTS = [
    # book_reservation
    case("book_c1_two_economy", "book_reservation", "max_passengers",
         book_args(pax=2), "allow", CONFIRM_BOOK, BOOK_MOCKS),
    case("book_c2_five_business_boundary", "book_reservation", "max_passengers",
         book_args(pax=4, cabin="business"), "allow", CONFIRM_BOOK, BOOK_MOCKS),
    case("book_c3_exact_seats", "book_reservation", "seat_availability",
         book_args(pax=5), "allow", CONFIRM_BOOK,
         (MockRule("get_flight_instance", None, flight(econ=5)),
          MockRule("get_user_details", None, user_payload()))),
    case("book_v1_six_passengers", "book_reservation", "max_passengers",
         book_args(pax=6), "deny", CONFIRM_BOOK, BOOK_MOCKS),
    case("book_v2_seat_scarcity", "book_reservation", "seat_availability",
         book_args(pax=3), "deny", CONFIRM_BOOK,
         (MockRule("get_flight_instance", None, flight(econ=2)),
          MockRule("get_user_details", None, user_payload()))),
    case("book_v3_cancelled_flight", "book_reservation", "flight_available",
         book_args(pax=1), "deny", CONFIRM_BOOK,
         (MockRule("get_flight_instance", None, flight(status="cancelled")),
          MockRule("get_user_details", None, user_payload()))),
    case("book_v4_foreign_card", "book_reservation", "payment_method_registered",
         book_args(pax=1, pm="card_unknown"), "deny", CONFIRM_BOOK, BOOK_MOCKS),
    case("book_v5_unconfirmed", "book_reservation", "booking_confirmation",
         book_args(pax=1), "deny", (), BOOK_MOCKS),
    # cancel_reservation
    case("cancel_c1_inside_window", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "allow", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(18)),
          MockRule("get_flight_instance", None, flight()))),
    case("cancel_c2_business_late", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "allow", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(100, cabin="business")),
          MockRule("get_flight_instance", None, flight()))),
    case("cancel_c3_insured_late", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "allow", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(40, insurance=True)),
          MockRule("get_flight_instance", None, flight()))),
    case("cancel_c4_airline_cancelled", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "allow", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(80)),
          MockRule("get_flight_instance", None, flight(status="cancelled")))),
    case("cancel_v1_late_uninsured", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "deny", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(36)),
          MockRule("get_flight_instance", None, flight()))),
    case("cancel_v2_basic_late", "cancel_reservation", "flexible_cancellation",
         {"reservation_id": "RESX"}, "deny", CONFIRM_CANCEL,
         (MockRule("get_reservation_details", None, reservation(30, cabin="basic_economy")),
          MockRule("get_flight_instance", None, flight()))),
    case("cancel_v3_unconfirmed", "cancel_reservation", "cancellation_confirmation",
         {"reservation_id": "RESX"}, "deny", (),
         (MockRule("get_reservation_details", None, reservation(18)),
          MockRule("get_flight_instance", None, flight()))),
    # update_reservation_flights
    case("uflights_c1_economy", "update_reservation_flights",
         "no_basic_economy_changes",
         {"reservation_id": "RESX",
          "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-21"}],
          "cabin": "economy", "payment_method_id": "card_main"},
         "allow", CONFIRM_UPDATE,
         (MockRule("get_reservation_details", None, reservation(30)),)),
    case("uflights_c2_business", "update_reservation_flights",
         "no_basic_economy_changes",
         {"reservation_id": "RESX",
          "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-21"}],
          "cabin": "business", "payment_method_id": "card_main"},
         "allow", CONFIRM_UPDATE,
         (MockRule("get_reservation_details", None, reservation(30, cabin="business")),)),
    case("uflights_v1_basic_economy", "update_reservation_flights",
         "no_basic_economy_changes",
         {"reservation_id": "RESX",
          "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-21"}],
          "cabin": "basic_economy", "payment_method_id": "card_main"},
         "deny", CONFIRM_UPDATE,
         (MockRule("get_reservation_details", None, reservation(30, cabin="basic_economy")),)),
    case("uflights_v2_unconfirmed", "update_reservation_flights",
         "update_flights_confirmation",
         {"reservation_id": "RESX",
          "flight_segments": [{"flight_id": "HAT100", "date": "2024-05-21"}],
          "cabin": "economy", "payment_method_id": "card_main"},
         "deny", (),
         (MockRule("get_reservation_details", None, reservation(30)),)),
    # update_reservation_passengers
    case("upax_c1_rename_two", "update_reservation_passengers",
         "passenger_count_unchanged",
         {"reservation_id": "RESX",
          "passengers": [{"first_name": "Ann", "last_name": "Lee"},
                         {"first_name": "Bob", "last_name": "Lee"}]},
         "allow", (),
         (MockRule("get_reservation_details", None, reservation(30, pax=2)),)),
    case("upax_c2_rename_one", "update_reservation_passengers",
         "passenger_count_unchanged",
         {"reservation_id": "RESX",
          "passengers": [{"first_name": "Ann", "last_name": "Lee"}]},
         "allow", (),
         (MockRule("get_reservation_details", None, reservation(30, pax=1)),)),
    case("upax_v1_add_third", "update_reservation_passengers",
         "passenger_count_unchanged",
         {"reservation_id": "RESX",
          "passengers": [{"first_name": "Ann", "last_name": "Lee"},
                         {"first_name": "Bob", "last_name": "Lee"},
                         {"first_name": "Cal", "last_name": "Lee"}]},
         "deny", (),
         (MockRule("get_reservation_details", None, reservation(30, pax=2)),)),
    case("upax_v2_drop_to_one", "update_reservation_passengers",
         "passenger_count_unchanged",
         {"reservation_id": "RESX",
          "passengers": [{"first_name": "Ann", "last_name": "Lee"}]},
         "deny", (),
         (MockRule("get_reservation_details", None, reservation(30, pax=2)),)),
    # update_reservation_baggages
    case("ubags_c1_add_bag", "update_reservation_baggages", "no_baggage_removal",
         {"reservation_id": "RESX", "total_baggages": 3, "nonfree_baggages": 2,
          "payment_method_id": "card_main"},
         "allow", (),
         (MockRule("get_reservation_details", None, reservation(30, bags=2)),)),
    case("ubags_c2_unchanged", "update_reservation_baggages", "no_baggage_removal",
         {"reservation_id": "RESX", "total_baggages": 2, "nonfree_baggages": 1,
          "payment_method_id": "card_main"},
         "allow", (),
         (MockRule("get_reservation_details", None, reservation(30, bags=2)),)),
    case("ubags_v1_remove_one", "update_reservation_baggages", "no_baggage_removal",
         {"reservation_id": "RESX", "total_baggages": 1, "nonfree_baggages": 0,
          "payment_method_id": "card_main"},
         "deny", (),
         (MockRule("get_reservation_details", None, reservation(30, bags=2)),)),
    case("ubags_v2_remove_last", "update_reservation_baggages", "no_baggage_removal",
         {"reservation_id": "RESX", "total_baggages": 0, "nonfree_baggages": 0,
          "payment_method_id": "card_main"},
         "deny", (),
         (MockRule("get_reservation_details", None, reservation(30, bags=1, nonfree=0)),)),
    # send_certificate
    case("cert_c1_requested_150", "send_certificate", "certificate_requested",
         {"user_id": "user_1", "amount": 150}, "allow", CONFIRM_CERT, ()),
    case("cert_c2_cap_boundary", "send_certificate", "certificate_cap",
         {"user_id": "user_1", "amount": 500}, "allow", CONFIRM_CERT, ()),
    case("cert_v1_over_cap", "send_certificate", "certificate_cap",
         {"user_id": "user_1", "amount": 800}, "deny", CONFIRM_CERT, ()),
    case("cert_v2_unrequested", "send_certificate", "certificate_requested",
         {"user_id": "user_1", "amount": 100}, "deny", (), ()),
]


def main():
    dump_suite(TESTS, OUT)
    compliance = sum(1 for t in TESTS if t.expected == "allow")
    print(
        f"wrote {len(TESTS)} tests ({compliance} compliance,"
        f" {len(TESTS) - compliance} violation) to {OUT}"
    )


if __name__ == "__main__":
    main()
