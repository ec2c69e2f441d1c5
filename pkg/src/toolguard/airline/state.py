"""Airline environment state: users, dated flight instances, reservations.

The state is a plain JSON document wrapped for cloning and canonical
comparison. Benchmark scoring compares canonical forms, so key order
never matters.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path


def flight_key(flight_id: str, date: str) -> str:
    return f"{flight_id}|{date}"


@dataclass
class EnvState:
    data: dict

    @staticmethod
    def from_json(obj: dict) -> "EnvState":
        return EnvState(data=copy.deepcopy(obj))

    @staticmethod
    def load(path: str | Path) -> "EnvState":
        return EnvState(data=json.loads(Path(path).read_text()))

    def clone(self) -> "EnvState":
        return EnvState(data=copy.deepcopy(self.data))

    def to_json(self) -> dict:
        return copy.deepcopy(self.data)

    def canonical(self) -> str:
        return json.dumps(self.data, sort_keys=True, ensure_ascii=False)

    def __eq__(self, other) -> bool:
        return isinstance(other, EnvState) and self.canonical() == other.canonical()

    @property
    def now(self) -> datetime:
        return datetime.fromisoformat(self.data["now"])

    @property
    def users(self) -> dict:
        return self.data["users"]

    @property
    def flights(self) -> dict:
        return self.data["flights"]

    @property
    def reservations(self) -> dict:
        return self.data["reservations"]

    def user(self, user_id: str):
        return self.users.get(user_id)

    def flight(self, flight_id: str, date: str):
        return self.flights.get(flight_key(flight_id, date))

    def reservation(self, reservation_id: str):
        return self.reservations.get(reservation_id)

    def payment_method(self, user_id: str, payment_id: str):
        user = self.user(user_id)
        if user is None:
            return None
        for pm in user["payment_methods"]:
            if pm["payment_id"] == payment_id:
                return pm
        return None

    def allocate_reservation_id(self) -> str:
        n = self.data.setdefault("next_reservation", 1)
        self.data["next_reservation"] = n + 1
        return f"RES{n:03d}"

    def allocate_certificate_id(self) -> str:
        n = self.data.setdefault("next_certificate", 1)
        self.data["next_certificate"] = n + 1
        return f"certificate_{n:03d}"

    def validate(self) -> list[str]:
        """Structural invariants; returns breaches."""
        problems = []
        for rid, res in self.reservations.items():
            if res["user_id"] not in self.users:
                problems.append(f"{rid}: unknown user {res['user_id']}")
            for seg in res["flight_segments"]:
                if flight_key(seg["flight_id"], seg["date"]) not in self.flights:
                    problems.append(f"{rid}: unknown flight {seg['flight_id']}")
            created = datetime.fromisoformat(res["created_at"])
            if created > self.now:
                problems.append(f"{rid}: created in the future")
        for key, fi in self.flights.items():
            for cabin, seats in fi["available_seats"].items():
                if seats < 0:
                    problems.append(f"{key}: negative {cabin} seats")
        return problems
