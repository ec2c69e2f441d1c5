"""Tool execution over the airline environment.

Tools enforce mechanical validity only (ids resolve, seats exist, the
payment method can cover the charge). Policy is none of their business;
that is what guards are for. Every call is transactional: a ToolError
leaves the caller's state untouched because execution always works on a
copy.
"""
from __future__ import annotations

from ..errors import ToolError
from .state import EnvState

INSURANCE_PER_PASSENGER = 30
EXTRA_BAG_PRICE = 50

AIRPORTS = [
    {"code": "ATL", "city": "Atlanta"},
    {"code": "BOS", "city": "Boston"},
    {"code": "JFK", "city": "New York"},
    {"code": "LAX", "city": "Los Angeles"},
    {"code": "SFO", "city": "San Francisco"},
]

MUTATING_TOOLS = frozenset(
    {
        "book_reservation",
        "cancel_reservation",
        "update_reservation_flights",
        "update_reservation_passengers",
        "update_reservation_baggages",
        "send_certificate",
    }
)

READ_TOOLS = frozenset(
    {
        "get_user_details",
        "get_reservation_details",
        "get_flight_instance",
        "get_flight_status",
        "search_direct_flight",
        "search_onestop_flight",
        "list_all_airports",
        "get_payment_methods",
    }
)


def is_mutating(name: str) -> bool:
    return name in MUTATING_TOOLS


def execute_tool(state: EnvState, name: str, args: dict) -> tuple[EnvState, object]:
    """Returns (new state, payload). The input state is never mutated."""
    handler = _HANDLERS.get(name)
    if handler is None:
        raise ToolError(f"unknown tool {name!r}")
    working = state.clone()
    payload = handler(working, dict(args))
    return working, payload


def _need(args: dict, *names):
    out = []
    for n in names:
        if n not in args:
            raise ToolError(f"missing argument {n!r}")
        out.append(args[n])
    return out


def _get_user(state: EnvState, user_id: str) -> dict:
    user = state.user(user_id)
    if user is None:
        raise ToolError(f"unknown user {user_id!r}")
    return user


def _get_reservation(state: EnvState, reservation_id: str) -> dict:
    res = state.reservation(reservation_id)
    if res is None:
        raise ToolError(f"unknown reservation {reservation_id!r}")
    return res


def _get_flight(state: EnvState, flight_id: str, date: str) -> dict:
    fi = state.flight(flight_id, date)
    if fi is None:
        raise ToolError(f"unknown flight {flight_id!r} on {date}")
    return fi


def _get_payment_method(state: EnvState, user_id: str, payment_id: str) -> dict:
    pm = state.payment_method(user_id, payment_id)
    if pm is None:
        raise ToolError(
            f"payment method {payment_id!r} is not on user {user_id!r}"
        )
    return pm


def _charge(pm: dict, amount: int) -> None:
    """Positive amounts are charges, negative are refunds."""
    if amount > 0 and pm["balance"] < amount:
        raise ToolError(
            f"payment method {pm['payment_id']!r} cannot cover {amount}"
        )
    pm["balance"] -= amount


def _segment_price(state: EnvState, segments: list, cabin: str) -> int:
    total = 0
    for seg in segments:
        fi = _get_flight(state, seg["flight_id"], seg["date"])
        total += fi["prices"][cabin]
    return total


def _adjust_seats(state: EnvState, segments: list, cabin: str, delta: int) -> None:
    for seg in segments:
        fi = state.flight(seg["flight_id"], seg["date"])
        if fi is None:
            continue
        if fi["available_seats"][cabin] + delta < 0:
            raise ToolError(
                f"not enough {cabin} seats on {seg['flight_id']} {seg['date']}"
            )
        fi["available_seats"][cabin] += delta


# --- read tools ---

def _t_get_user_details(state, args):
    (user_id,) = _need(args, "user_id")
    return _get_user(state, user_id)


def _t_get_payment_methods(state, args):
    (user_id,) = _need(args, "user_id")
    return _get_user(state, user_id)["payment_methods"]


def _t_get_reservation_details(state, args):
    (reservation_id,) = _need(args, "reservation_id")
    return _get_reservation(state, reservation_id)


def _t_get_flight_instance(state, args):
    flight_id, date = _need(args, "flight_id", "date")
    return _get_flight(state, flight_id, date)


def _t_get_flight_status(state, args):
    flight_id, date = _need(args, "flight_id", "date")
    return _get_flight(state, flight_id, date)["status"]


def _t_search_direct_flight(state, args):
    origin, destination, date = _need(args, "origin", "destination", "date")
    out = [
        fi
        for fi in state.flights.values()
        if fi["origin"] == origin
        and fi["destination"] == destination
        and fi["date"] == date
    ]
    return sorted(out, key=lambda fi: fi["flight_id"])


def _t_search_onestop_flight(state, args):
    origin, destination, date = _need(args, "origin", "destination", "date")
    firsts = [
        fi
        for fi in state.flights.values()
        if fi["origin"] == origin and fi["date"] == date
    ]
    out = []
    for first in sorted(firsts, key=lambda fi: fi["flight_id"]):
        for second in sorted(state.flights.values(), key=lambda fi: fi["flight_id"]):
            if (
                second["origin"] == first["destination"]
                and second["destination"] == destination
                and second["date"] == date
                and second["flight_id"] != first["flight_id"]
            ):
                out.append({"first": first, "second": second})
    return out


def _t_list_all_airports(state, args):
    return AIRPORTS


# --- mutating tools ---

def _t_book_reservation(state: EnvState, args):
    (
        user_id, origin, destination, segments, cabin, passengers,
        payment_method_id, insurance, total_baggages, nonfree_baggages,
    ) = _need(
        args, "user_id", "origin", "destination", "flight_segments", "cabin",
        "passengers", "payment_method_id", "insurance", "total_baggages",
        "nonfree_baggages",
    )
    _get_user(state, user_id)
    if not passengers:
        raise ToolError("a reservation needs at least one passenger")
    if nonfree_baggages > total_baggages:
        raise ToolError("nonfree baggage count exceeds the total")
    for seg in segments:
        fi = _get_flight(state, seg["flight_id"], seg["date"])
        if fi["status"] != "available":
            raise ToolError(
                f"flight {seg['flight_id']} on {seg['date']} is {fi['status']}"
            )
        if fi["available_seats"][cabin] < len(passengers):
            raise ToolError(
                f"not enough {cabin} seats on {seg['flight_id']} {seg['date']}"
            )
    pm = _get_payment_method(state, user_id, payment_method_id)
    price = _segment_price(state, segments, cabin) * len(passengers)
    if insurance:
        price += INSURANCE_PER_PASSENGER * len(passengers)
    price += EXTRA_BAG_PRICE * nonfree_baggages
    _charge(pm, price)
    _adjust_seats(state, segments, cabin, -len(passengers))
    reservation = {
        "reservation_id": state.allocate_reservation_id(),
        "user_id": user_id,
        "origin": origin,
        "destination": destination,
        "flight_segments": segments,
        "cabin": cabin,
        "passengers": passengers,
        "payment_method_id": payment_method_id,
        "insurance": insurance,
        "created_at": state.data["now"],
        "total_baggages": total_baggages,
        "nonfree_baggages": nonfree_baggages,
        "status": "active",
        "total_price": price,
    }
    state.reservations[reservation["reservation_id"]] = reservation
    return reservation


def _t_cancel_reservation(state: EnvState, args):
    (reservation_id,) = _need(args, "reservation_id")
    res = _get_reservation(state, reservation_id)
    if res["status"] != "active":
        raise ToolError(f"reservation {reservation_id!r} is not active")
    pm = state.payment_method(res["user_id"], res["payment_method_id"])
    if pm is not None:
        pm["balance"] += res["total_price"]
    _adjust_seats(state, res["flight_segments"], res["cabin"], len(res["passengers"]))
    res["status"] = "cancelled"
    return res


def _t_update_reservation_flights(state: EnvState, args):
    reservation_id, segments, cabin, payment_method_id = _need(
        args, "reservation_id", "flight_segments", "cabin", "payment_method_id"
    )
    res = _get_reservation(state, reservation_id)
    if res["status"] != "active":
        raise ToolError(f"reservation {reservation_id!r} is not active")
    pax = len(res["passengers"])
    for seg in segments:
        fi = _get_flight(state, seg["flight_id"], seg["date"])
        if fi["status"] != "available":
            raise ToolError(
                f"flight {seg['flight_id']} on {seg['date']} is {fi['status']}"
            )
    pm = _get_payment_method(state, res["user_id"], payment_method_id)
    old_portion = _segment_price(state, res["flight_segments"], res["cabin"]) * pax
    new_portion = _segment_price(state, segments, cabin) * pax
    _adjust_seats(state, res["flight_segments"], res["cabin"], pax)
    _adjust_seats(state, segments, cabin, -pax)
    _charge(pm, new_portion - old_portion)
    res["flight_segments"] = segments
    res["cabin"] = cabin
    res["total_price"] += new_portion - old_portion
    return res


def _t_update_reservation_passengers(state: EnvState, args):
    reservation_id, passengers = _need(args, "reservation_id", "passengers")
    res = _get_reservation(state, reservation_id)
    if res["status"] != "active":
        raise ToolError(f"reservation {reservation_id!r} is not active")
    if not passengers:
        raise ToolError("a reservation needs at least one passenger")
    old_count = len(res["passengers"])
    delta = len(passengers) - old_count
    if delta:
        per_pax = _segment_price(state, res["flight_segments"], res["cabin"])
        if res["insurance"]:
            per_pax += INSURANCE_PER_PASSENGER
        pm = state.payment_method(res["user_id"], res["payment_method_id"])
        if pm is None:
            raise ToolError("original payment method is gone")
        _adjust_seats(state, res["flight_segments"], res["cabin"], -delta)
        _charge(pm, per_pax * delta)
        res["total_price"] += per_pax * delta
    res["passengers"] = passengers
    return res


def _t_update_reservation_baggages(state: EnvState, args):
    reservation_id, total_baggages, nonfree_baggages, payment_method_id = _need(
        args, "reservation_id", "total_baggages", "nonfree_baggages",
        "payment_method_id",
    )
    res = _get_reservation(state, reservation_id)
    if res["status"] != "active":
        raise ToolError(f"reservation {reservation_id!r} is not active")
    if nonfree_baggages > total_baggages:
        raise ToolError("nonfree baggage count exceeds the total")
    pm = _get_payment_method(state, res["user_id"], payment_method_id)
    delta = nonfree_baggages - res["nonfree_baggages"]
    _charge(pm, EXTRA_BAG_PRICE * delta)
    res["total_baggages"] = total_baggages
    res["nonfree_baggages"] = nonfree_baggages
    res["total_price"] += EXTRA_BAG_PRICE * delta
    return res


def _t_send_certificate(state: EnvState, args):
    user_id, amount = _need(args, "user_id", "amount")
    user = _get_user(state, user_id)
    if not isinstance(amount, int) or amount <= 0:
        raise ToolError("certificate amount must be a positive integer")
    certificate = {
        "payment_id": state.allocate_certificate_id(),
        "kind": "certificate",
        "balance": amount,
    }
    user["payment_methods"].append(certificate)
    return certificate


_HANDLERS = {
    "get_user_details": _t_get_user_details,
    "get_payment_methods": _t_get_payment_methods,
    "get_reservation_details": _t_get_reservation_details,
    "get_flight_instance": _t_get_flight_instance,
    "get_flight_status": _t_get_flight_status,
    "search_direct_flight": _t_search_direct_flight,
    "search_onestop_flight": _t_search_onestop_flight,
    "list_all_airports": _t_list_all_airports,
    "book_reservation": _t_book_reservation,
    "cancel_reservation": _t_cancel_reservation,
    "update_reservation_flights": _t_update_reservation_flights,
    "update_reservation_passengers": _t_update_reservation_passengers,
    "update_reservation_baggages": _t_update_reservation_baggages,
    "send_certificate": _t_send_certificate,
}
