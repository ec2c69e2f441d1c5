#!/usr/bin/env python3
"""Regenerates committed airline fixtures: reference guards and the
hand-annotated policy map. Run from the repo root after editing the
policy document, the OpenAPI spec, or the guard bodies below."""
from pathlib import Path

from toolguard.document import segment
from toolguard.lang import parse, typecheck
from toolguard.openapi import parse_openapi
from toolguard.policy import PolicyItem, PolicyMap, require_valid_map
from toolguard.skeleton import generate_skeleton

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "toolguard" / "data"

GUARD_BODIES = '''
# reference policy implementations

fun policy_max_passengers(args: book_reservation_args, ctx: context) -> verdict {
  if count(args.passengers) > 5 {
    deny("max_passengers",
         "The number of passengers on a single reservation must not exceed 5.")
  } else { allow }
}

fun policy_flight_available(args: book_reservation_args, ctx: context) -> verdict {
  if all(s in args.flight_segments,
         ctx.call(get_flight_instance, { flight_id: s.flight_id, date: s.date }).status == "available") {
    allow
  } else {
    deny("flight_available",
         "Every requested flight must be available at booking time.")
  }
}

fun policy_seat_availability(args: book_reservation_args, ctx: context) -> verdict {
  let needed = count(args.passengers)
  if all(s in args.flight_segments,
         if args.cabin == "business" {
           ctx.call(get_flight_instance, { flight_id: s.flight_id, date: s.date }).available_seats.business >= needed
         } else {
           if args.cabin == "economy" {
             ctx.call(get_flight_instance, { flight_id: s.flight_id, date: s.date }).available_seats.economy >= needed
           } else {
             ctx.call(get_flight_instance, { flight_id: s.flight_id, date: s.date }).available_seats.basic_economy >= needed
           }
         }) {
    allow
  } else {
    deny("seat_availability",
         "Every requested flight must have enough seats in the requested cabin for all passengers.")
  }
}

fun policy_payment_method_registered(args: book_reservation_args, ctx: context) -> verdict {
  let user = ctx.call(get_user_details, { user_id: args.user_id })
  if any(p in user.payment_methods, p.payment_id == args.payment_method_id) {
    allow
  } else {
    deny("payment_method_registered",
         "Payment must use a payment method already stored in the customer profile.")
  }
}

fun policy_booking_confirmation(args: book_reservation_args, ctx: context) -> verdict {
  if ctx.history.user_confirmed("book") {
    allow
  } else {
    deny("booking_confirmation",
         "Explicit customer confirmation is required before booking a reservation.")
  }
}

fun policy_flexible_cancellation(args: cancel_reservation_args, ctx: context) -> verdict {
  let res = ctx.call(get_reservation_details, { reservation_id: args.reservation_id })
  if ctx.now() <= res.created_at + 24h {
    allow
  } else {
    if any(s in res.flight_segments,
           ctx.call(get_flight_instance, { flight_id: s.flight_id, date: s.date }).status == "cancelled") {
      allow
    } else {
      if res.cabin == "business" {
        allow
      } else {
        if res.insurance {
          allow
        } else {
          deny("flexible_cancellation",
               "Outside the 24-hour window, basic economy and economy reservations can be canceled only with travel insurance, unless the airline canceled the flight.")
        }
      }
    }
  }
}

fun policy_cancellation_confirmation(args: cancel_reservation_args, ctx: context) -> verdict {
  if ctx.history.user_confirmed("cancel") {
    allow
  } else {
    deny("cancellation_confirmation",
         "Explicit customer confirmation is required before canceling a reservation.")
  }
}

fun policy_no_basic_economy_changes(args: update_reservation_flights_args, ctx: context) -> verdict {
  let res = ctx.call(get_reservation_details, { reservation_id: args.reservation_id })
  if res.cabin == "basic_economy" {
    deny("no_basic_economy_changes",
         "Basic economy reservations cannot be modified after booking.")
  } else { allow }
}

fun policy_update_flights_confirmation(args: update_reservation_flights_args, ctx: context) -> verdict {
  if ctx.history.user_confirmed("update flight") {
    allow
  } else {
    deny("update_flights_confirmation",
         "Explicit customer confirmation is required before updating the flights on a reservation.")
  }
}

fun policy_passenger_count_unchanged(args: update_reservation_passengers_args, ctx: context) -> verdict {
  let res = ctx.call(get_reservation_details, { reservation_id: args.reservation_id })
  if count(args.passengers) == count(res.passengers) {
    allow
  } else {
    deny("passenger_count_unchanged",
         "The number of passengers on a reservation cannot be changed after booking.")
  }
}

fun policy_no_baggage_removal(args: update_reservation_baggages_args, ctx: context) -> verdict {
  let res = ctx.call(get_reservation_details, { reservation_id: args.reservation_id })
  if args.total_baggages >= res.total_baggages {
    allow
  } else {
    deny("no_baggage_removal",
         "Checked baggage already purchased cannot be removed from a reservation.")
  }
}

fun policy_certificate_cap(args: send_certificate_args, ctx: context) -> verdict {
  if args.amount > 500 {
    deny("certificate_cap",
         "A compensation certificate must not exceed 500 dollars.")
  } else { allow }
}

fun policy_certificate_requested(args: send_certificate_args, ctx: context) -> verdict {
  if ctx.history.user_confirmed("compensation") {
    allow
  } else {
    deny("certificate_requested",
         "Compensation may be offered only after the customer explicitly asks for it.")
  }
}

# guard entry points

fun guard_book_reservation(args: book_reservation_args, ctx: context) -> verdict {
  check policy_max_passengers(args, ctx)
  check policy_flight_available(args, ctx)
  check policy_seat_availability(args, ctx)
  check policy_payment_method_registered(args, ctx)
  check policy_booking_confirmation(args, ctx)
  allow
}

fun guard_cancel_reservation(args: cancel_reservation_args, ctx: context) -> verdict {
  check policy_flexible_cancellation(args, ctx)
  check policy_cancellation_confirmation(args, ctx)
  allow
}

fun guard_update_reservation_flights(args: update_reservation_flights_args, ctx: context) -> verdict {
  check policy_no_basic_economy_changes(args, ctx)
  check policy_update_flights_confirmation(args, ctx)
  allow
}

fun guard_update_reservation_passengers(args: update_reservation_passengers_args, ctx: context) -> verdict {
  check policy_passenger_count_unchanged(args, ctx)
  allow
}

fun guard_update_reservation_baggages(args: update_reservation_baggages_args, ctx: context) -> verdict {
  check policy_no_baggage_removal(args, ctx)
  allow
}

fun guard_send_certificate(args: send_certificate_args, ctx: context) -> verdict {
  check policy_certificate_cap(args, ctx)
  check policy_certificate_requested(args, ctx)
  allow
}
'''


def gt_items() -> list[PolicyItem]:
    booking_ref = (
        "Before booking, the agent must verify that every requested flight"
        " is available and has enough seats in the requested cabin for all"
        " passengers."
    )
    return [
        PolicyItem(
            id="max_passengers",
            tool="book_reservation",
            name="Passenger Limit",
            description="A single reservation covers at most 5 passengers.",
            references=(
                "The number of passengers on a single reservation must not exceed 5.",
            ),
            compliance_examples=(
                "A customer books an economy flight for 4 passengers.",
            ),
            violation_examples=(
                "A customer asks to book one reservation for 6 passengers.",
            ),
        ),
        PolicyItem(
            id="flight_available",
            tool="book_reservation",
            name="Flight Availability",
            description="Every requested flight must be in available status when booked.",
            references=(booking_ref,),
            compliance_examples=(
                "A customer books a direct flight that is shown as available.",
            ),
            violation_examples=(
                "The agent books a flight instance the airline already cancelled.",
            ),
        ),
        PolicyItem(
            id="seat_availability",
            tool="book_reservation",
            name="Seat Availability",
            description="The requested cabin must have seats for every passenger on each segment.",
            references=(booking_ref,),
            compliance_examples=(
                "Two passengers book economy seats on a flight with five economy seats left.",
            ),
            violation_examples=(
                "A booking for 3 economy passengers proceeds when only 2 economy seats remain.",
            ),
        ),
        PolicyItem(
            id="payment_method_registered",
            tool="book_reservation",
            name="Stored Payment Method",
            description="Bookings may only charge a payment method saved in the customer profile.",
            references=(
                "Payment must use a payment method already stored in the customer profile.",
            ),
            compliance_examples=(
                "A customer pays with the gift card saved on their profile.",
            ),
            violation_examples=(
                "The agent books a reservation against a card number that is not on the profile.",
            ),
        ),
        PolicyItem(
            id="booking_confirmation",
            tool="book_reservation",
            name="Booking Confirmation",
            description="The customer must explicitly confirm before a booking is placed.",
            references=(
                "The agent must obtain explicit customer confirmation before booking a reservation.",
            ),
            compliance_examples=(
                "The agent summarizes the booking, the customer replies yes, and the booking is placed.",
            ),
            violation_examples=(
                "The agent books a reservation without asking the customer to confirm.",
            ),
        ),
        PolicyItem(
            id="flexible_cancellation",
            tool="cancel_reservation",
            name="Flexible Cancellation Policy",
            description=(
                "Any reservation can be canceled within 24 hours of booking or"
                " when the airline canceled the flight; otherwise basic economy"
                " and economy require travel insurance while business cancels"
                " unconditionally."
            ),
            references=(
                "All reservations can be canceled within 24 hours of booking,"
                " or if the airline canceled the flight. Otherwise, basic"
                " economy or economy flights can be canceled only if travel"
                " insurance is bought, and business flights can always be"
                " canceled unconditionally.",
            ),
            compliance_examples=(
                "A user requests the cancellation of an economy class reservation booked 18 hours ago.",
                "A business class reservation is canceled three days after booking.",
            ),
            violation_examples=(
                "A regular customer tries to cancel an economy class reservation 36 hours after booking without insurance.",
            ),
        ),
        PolicyItem(
            id="cancellation_confirmation",
            tool="cancel_reservation",
            name="Cancellation Confirmation",
            description="The customer must explicitly confirm before a cancellation is executed.",
            references=(
                "The agent must obtain explicit customer confirmation before canceling a reservation.",
            ),
            compliance_examples=(
                "The agent asks to confirm the cancellation and the customer agrees before it is executed.",
            ),
            violation_examples=(
                "The agent proceeds with canceling a reservation without explicitly obtaining the customer confirmation.",
            ),
        ),
        PolicyItem(
            id="no_basic_economy_changes",
            tool="update_reservation_flights",
            name="Basic Economy Lock",
            description="Basic economy reservations cannot have their flights changed.",
            references=(
                "Basic economy reservations cannot be modified after booking.",
            ),
            compliance_examples=(
                "A customer moves an economy reservation to a later flight.",
            ),
            violation_examples=(
                "A customer asks to move a basic economy reservation to another date.",
            ),
        ),
        PolicyItem(
            id="update_flights_confirmation",
            tool="update_reservation_flights",
            name="Flight Change Confirmation",
            description="The customer must explicitly confirm before flights are changed.",
            references=(
                "The agent must obtain explicit customer confirmation before updating the flights on a reservation.",
            ),
            compliance_examples=(
                "The agent lists the new segments, the customer confirms, and the update runs.",
            ),
            violation_examples=(
                "The agent rebooks the customer onto a different flight without a confirmation.",
            ),
        ),
        PolicyItem(
            id="passenger_count_unchanged",
            tool="update_reservation_passengers",
            name="Fixed Passenger Count",
            description="Passenger details may change, the passenger count may not.",
            references=(
                "The number of passengers on a reservation cannot be changed after booking.",
                "Passenger name corrections are allowed at any time.",
            ),
            compliance_examples=(
                "A customer corrects the spelling of one passenger's last name.",
            ),
            violation_examples=(
                "A customer asks to add a third passenger to a two-passenger reservation.",
            ),
        ),
        PolicyItem(
            id="no_baggage_removal",
            tool="update_reservation_baggages",
            name="No Baggage Removal",
            description="Baggage counts can grow but purchased checked bags cannot be removed.",
            references=(
                "Checked baggage already purchased cannot be removed from a reservation.",
            ),
            compliance_examples=(
                "A customer adds one extra checked bag to an existing reservation.",
            ),
            violation_examples=(
                "A customer asks to drop from two checked bags to one for a refund.",
            ),
        ),
        PolicyItem(
            id="certificate_cap",
            tool="send_certificate",
            name="Certificate Cap",
            description="Compensation certificates are capped at 500 dollars.",
            references=(
                "A compensation certificate must not exceed 500 dollars.",
            ),
            compliance_examples=(
                "The agent sends a 150 dollar certificate after a delayed flight complaint.",
            ),
            violation_examples=(
                "The agent offers an 800 dollar certificate for an inconvenience.",
            ),
        ),
        PolicyItem(
            id="certificate_requested",
            tool="send_certificate",
            name="Compensation On Request Only",
            description="Certificates are sent only after the customer explicitly asks for compensation.",
            references=(
                "Compensation may be offered only after the customer explicitly asks for it.",
                "Never offer compensation to a customer whose flights departed as scheduled.",
            ),
            compliance_examples=(
                "A customer asks for compensation for a cancelled flight and the agent sends a certificate.",
            ),
            violation_examples=(
                "The agent proactively sends a certificate although the customer never asked for compensation.",
            ),
        ),
    ]


def main() -> None:
    openapi = (DATA / "airline_openapi.json").read_text()
    kit = parse_openapi(openapi, "json")
    skeleton = generate_skeleton(kit)
    guard_text = skeleton.type_decls + "\n" + skeleton.signatures + "\n" + GUARD_BODIES
    module = parse(guard_text, "airline_gt.guard")
    diags = typecheck(module, kit)
    if diags:
        for d in diags:
            print(d.format())
        raise SystemExit("reference guards do not typecheck")
    (DATA / "airline_gt.guard").write_text(guard_text)

    doc = segment((DATA / "airline_policy.md").read_text())
    pmap = PolicyMap(doc_fingerprint=doc.fingerprint, items=tuple(gt_items()))
    require_valid_map(pmap, doc, kit)
    (DATA / "airline_gt_map.json").write_text(pmap.to_json_text())
    print("fixtures written:", DATA / "airline_gt.guard", DATA / "airline_gt_map.json")


if __name__ == "__main__":
    main()
