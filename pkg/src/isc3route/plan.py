"""Route plan value types: depot-anchored trips and their serialised form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .errors import SchemaError

GiantTour = Sequence[str]


@dataclass(frozen=True)
class Trip:
    stations: tuple[str, ...]
    length: float
    load: int
    energy: float


@dataclass(frozen=True)
class RoutePlan:
    trips: tuple[Trip, ...] = ()

    @property
    def total_length(self) -> float:
        total = 0.0
        for t in self.trips:
            total += t.length
        return total

    @property
    def station_ids(self) -> list[str]:
        return [s for t in self.trips for s in t.stations]

    def to_dict(self) -> dict[str, Any]:
        return {
            "trips": [list(t.stations) for t in self.trips],
            "trip_metrics": [{"length_km": t.length, "load": t.load, "energy_wh": t.energy} for t in self.trips],
            "total_length_km": self.total_length,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RoutePlan":
        if not isinstance(data, Mapping) or not isinstance(data.get("trips"), list):
            raise SchemaError("plan.trips", "expected a list of station-id lists")
        metrics = data.get("trip_metrics") or [{} for _ in data["trips"]]
        if len(metrics) != len(data["trips"]):
            raise SchemaError("plan.trip_metrics", "length differs from trips")
        trips = []
        for k, (ids, m) in enumerate(zip(data["trips"], metrics)):
            if not isinstance(ids, list) or not all(isinstance(s, str) for s in ids):
                raise SchemaError(f"plan.trips[{k}]", "expected a list of station ids")
            trips.append(Trip(tuple(ids), float(m.get("length_km", 0.0)), int(m.get("load", 0)),
                              float(m.get("energy_wh", 0.0))))
        return cls(tuple(trips))
