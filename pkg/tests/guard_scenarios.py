"""Per-policy forging scenarios for integration tests.

One allow and one deny template per policy of the airline toolkit,
deliberately disjoint from the committed held-out suite (different ids,
users, flights and boundary values). Each template satisfies every
*other* policy of its tool so the scenario isolates the targeted one,
both through the policy function and through the assembled guard.
"""
from datetime import datetime, timedelta

NOW = datetime(2024, 6, 2, 12, 0, 0)


def _iso_hours_ago(h):
    return (NOW - timedelta(hours=h)).isoformat()


def _flight(seats_economy=9, seats_basic=6, seats_business=5, status="available"):
    return {
        "flight_id": "HAT200", "date": "2024-06-15",
        "origin": "BOS", "destination": "ATL", "status": status,
        "available_seats": {
            "basic_economy": seats_basic,
            "economy": seats_economy,
            "business": seats_business,
        },
        "prices": {"basic_economy": 70, "economy": 110, "business": 380},
    }


def _user(pm="card_z"):
    return {
        "user_id": "u9", "name": "Forge User", "membership": "silver",
        "payment_methods": [
            {"payment_id": pm, "kind": "credit_card", "balance": 7000}
        ],
    }


def _reservation(hours_ago=20, cabin="economy", insurance=False, pax=2, bags=2):
    return {
        "reservation_id": "RESZ", "user_id": "u9",
        "origin": "BOS", "destination": "ATL",
        "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-15"}],
        "cabin": cabin,
        "passengers": [
            {"first_name": f"F{i}", "last_name": "User"} for i in range(pax)
        ],
        "payment_method_id": "card_z", "insurance": insurance,
        "created_at": _iso_hours_ago(hours_ago),
        "total_baggages": bags, "nonfree_baggages": 0,
        "status": "active", "total_price": 220,
    }


def _book_args(pax=2, pm="card_z"):
    return {
        "user_id": "u9", "origin": "BOS", "destination": "ATL",
        "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-15"}],
        "cabin": "economy",
        "passengers": [
            {"first_name": f"F{i}", "last_name": "User"} for i in range(pax)
        ],
        "payment_method_id": pm, "insurance": False,
        "total_baggages": 0, "nonfree_baggages": 0,
    }


def _confirm(mention, reply="Yes, please do."):
    return [
        {"kind": "assistant_message", "text": mention},
        {"kind": "user_message", "text": reply},
    ]


CONFIRM_BOOK = _confirm("Shall I book this trip for you?")
CONFIRM_CANCEL = _confirm("Should I cancel this reservation now?")
CONFIRM_UPDATE = _confirm("Shall I update the flights as discussed?")
CONFIRM_CERT = _confirm("I can offer a compensation certificate, okay?")

BOOK_MOCKS = [
    {"tool": "get_flight_instance", "args": None, "response": _flight()},
    {"tool": "get_user_details", "args": None, "response": _user()},
]


def _res_mocks(**kw):
    return [
        {"tool": "get_reservation_details", "args": None, "response": _reservation(**kw)},
        {"tool": "get_flight_instance", "args": None, "response": _flight()},
    ]


# policy id -> {"allow": scenario, "deny": scenario}
# scenario = {"args", "history", "mocks"}
SCENARIOS = {
    "max_passengers": {
        "allow": {"args": _book_args(pax=3), "history": CONFIRM_BOOK,
                  "mocks": BOOK_MOCKS},
        "deny": {"args": _book_args(pax=6), "history": CONFIRM_BOOK,
                 "mocks": BOOK_MOCKS},
    },
    "flight_available": {
        "allow": {"args": _book_args(), "history": CONFIRM_BOOK,
                  "mocks": BOOK_MOCKS},
        "deny": {"args": _book_args(), "history": CONFIRM_BOOK,
                 "mocks": [
                     {"tool": "get_flight_instance", "args": None,
                      "response": _flight(status="landed")},
                     {"tool": "get_user_details", "args": None,
                      "response": _user()},
                 ]},
    },
    "seat_availability": {
        "allow": {"args": _book_args(pax=2), "history": CONFIRM_BOOK,
                  "mocks": [
                      {"tool": "get_flight_instance", "args": None,
                       "response": _flight(seats_economy=2)},
                      {"tool": "get_user_details", "args": None,
                       "response": _user()},
                  ]},
        "deny": {"args": _book_args(pax=4), "history": CONFIRM_BOOK,
                 "mocks": [
                     {"tool": "get_flight_instance", "args": None,
                      "response": _flight(seats_economy=3)},
                     {"tool": "get_user_details", "args": None,
                      "response": _user()},
                 ]},
    },
    "payment_method_registered": {
        "allow": {"args": _book_args(pm="card_z"), "history": CONFIRM_BOOK,
                  "mocks": BOOK_MOCKS},
        "deny": {"args": _book_args(pm="card_missing"), "history": CONFIRM_BOOK,
                 "mocks": BOOK_MOCKS},
    },
    "booking_confirmation": {
        "allow": {"args": _book_args(), "history": CONFIRM_BOOK,
                  "mocks": BOOK_MOCKS},
        "deny": {"args": _book_args(), "history": [], "mocks": BOOK_MOCKS},
    },
    "flexible_cancellation": {
        "allow": {"args": {"reservation_id": "RESZ"}, "history": CONFIRM_CANCEL,
                  "mocks": _res_mocks(hours_ago=20)},
        "deny": {"args": {"reservation_id": "RESZ"}, "history": CONFIRM_CANCEL,
                 "mocks": _res_mocks(hours_ago=30)},
    },
    "cancellation_confirmation": {
        "allow": {"args": {"reservation_id": "RESZ"}, "history": CONFIRM_CANCEL,
                  "mocks": _res_mocks(hours_ago=20)},
        "deny": {"args": {"reservation_id": "RESZ"}, "history": [],
                 "mocks": _res_mocks(hours_ago=20)},
    },
    "no_basic_economy_changes": {
        "allow": {
            "args": {
                "reservation_id": "RESZ",
                "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-16"}],
                "cabin": "economy", "payment_method_id": "card_z",
            },
            "history": CONFIRM_UPDATE,
            "mocks": _res_mocks(cabin="economy"),
        },
        "deny": {
            "args": {
                "reservation_id": "RESZ",
                "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-16"}],
                "cabin": "basic_economy", "payment_method_id": "card_z",
            },
            "history": CONFIRM_UPDATE,
            "mocks": _res_mocks(cabin="basic_economy"),
        },
    },
    "update_flights_confirmation": {
        "allow": {
            "args": {
                "reservation_id": "RESZ",
                "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-16"}],
                "cabin": "economy", "payment_method_id": "card_z",
            },
            "history": CONFIRM_UPDATE,
            "mocks": _res_mocks(cabin="economy"),
        },
        "deny": {
            "args": {
                "reservation_id": "RESZ",
                "flight_segments": [{"flight_id": "HAT200", "date": "2024-06-16"}],
                "cabin": "economy", "payment_method_id": "card_z",
            },
            "history": [],
            "mocks": _res_mocks(cabin="economy"),
        },
    },
    "passenger_count_unchanged": {
        "allow": {
            "args": {
                "reservation_id": "RESZ",
                "passengers": [
                    {"first_name": "Renamed", "last_name": "User"},
                    {"first_name": "F1", "last_name": "User"},
                ],
            },
            "history": [],
            "mocks": _res_mocks(pax=2),
        },
        "deny": {
            "args": {
                "reservation_id": "RESZ",
                "passengers": [
                    {"first_name": f"F{i}", "last_name": "User"}
                    for i in range(3)
                ],
            },
            "history": [],
            "mocks": _res_mocks(pax=2),
        },
    },
    "no_baggage_removal": {
        "allow": {
            "args": {"reservation_id": "RESZ", "total_baggages": 2,
                     "nonfree_baggages": 0, "payment_method_id": "card_z"},
            "history": [],
            "mocks": _res_mocks(bags=2),
        },
        "deny": {
            "args": {"reservation_id": "RESZ", "total_baggages": 0,
                     "nonfree_baggages": 0, "payment_method_id": "card_z"},
            "history": [],
            "mocks": _res_mocks(bags=2),
        },
    },
    "certificate_cap": {
        "allow": {"args": {"user_id": "u9", "amount": 200},
                  "history": CONFIRM_CERT, "mocks": []},
        "deny": {"args": {"user_id": "u9", "amount": 900},
                 "history": CONFIRM_CERT, "mocks": []},
    },
    "certificate_requested": {
        "allow": {"args": {"user_id": "u9", "amount": 100},
                  "history": CONFIRM_CERT, "mocks": []},
        "deny": {"args": {"user_id": "u9", "amount": 100},
                 "history": [], "mocks": []},
    },
}


def synthesis_response(item) -> dict:
    """The scripted synthesize_tests response for one policy item: one
    test per example, built from the item's scenario templates."""
    templates = SCENARIOS[item.id]
    tests = []
    for kind, examples, expected in (
        ("compliance", item.compliance_examples, "allow"),
        ("violation", item.violation_examples, "deny"),
    ):
        template = templates["allow" if expected == "allow" else "deny"]
        for index, _example in enumerate(examples):
            tests.append(
                {
                    "id": f"forge_{item.id}_{kind}_{index}",
                    "source_example": {"kind": kind, "index": index},
                    "args": template["args"],
                    "now": NOW.isoformat(),
                    "history": template["history"],
                    "mocks": template["mocks"],
                    "expected": expected,
                }
            )
    return {"tests": tests}
