"""Delivery scene: points, stations, base stations, weather and ISC3 demands.

Instances are immutable.  The on-disk format is a UTF-8 JSON object; see
``instance_to_dict`` for the exact layout.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, FrameMismatch, ParseError, SchemaError, ValidationError

EARTH_RADIUS_KM = 6371.0
PLANAR = "planar"
GEODETIC = "geodetic"
FRAMES = (PLANAR, GEODETIC)


@dataclass(frozen=True)
class GeoPoint:
    """A point in either the planar (km) or geodetic (degrees) frame.

    For geodetic points ``x`` holds the longitude and ``y`` the latitude.
    """

    x: float
    y: float
    frame: str = PLANAR

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValidationError(f"unknown frame {self.frame!r}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"non-finite coordinates ({self.x}, {self.y})")
        if self.frame == GEODETIC:
            if not -90.0 <= self.y <= 90.0:
                raise ValidationError(f"latitude {self.y} outside [-90, 90]")
            if not -180.0 <= self.x <= 180.0:
                raise ValidationError(f"longitude {self.x} outside [-180, 180]")

    @classmethod
    def geodetic(cls, lat: float, lon: float) -> "GeoPoint":
        return cls(lon, lat, GEODETIC)

    @property
    def lat(self) -> float:
        return self.y

    @property
    def lon(self) -> float:
        return self.x


@dataclass(frozen=True)
class Station:
    id: str
    location: GeoPoint
    demand: int
    required_sensing_accuracy: float = 0.9

    def __post_init__(self):
        if not self.id:
            raise ValidationError("station id must be non-empty")
        if isinstance(self.demand, bool) or not isinstance(self.demand, int) or self.demand < 1:
            raise ValidationError(f"station {self.id!r}: demand must be an integer >= 1, got {self.demand!r}")
        if not 0.0 < self.required_sensing_accuracy <= 1.0:
            raise ValidationError(
                f"station {self.id!r}: required_sensing_accuracy {self.required_sensing_accuracy} not in (0, 1]"
            )


@dataclass(frozen=True)
class BaseStation:
    id: str
    location: GeoPoint
    tx_power_dbm: float = 40.0
    carrier_freq_mhz: float = 2000.0
    bandwidth_hz: float = 1.0e6

    def __post_init__(self):
        if not self.id:
            raise ValidationError("base station id must be non-empty")
        if not self.bandwidth_hz > 0:
            raise ValidationError(f"base station {self.id!r}: bandwidth must be > 0")
        if not self.carrier_freq_mhz > 0:
            raise ValidationError(f"base station {self.id!r}: carrier frequency must be > 0")


@dataclass(frozen=True)
class Weather:
    visibility: float = 1.0
    wind_speed_mps: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.visibility <= 1.0:
            raise ValidationError(f"visibility {self.visibility} not in (0, 1]")
        if not self.wind_speed_mps >= 0.0:
            raise ValidationError(f"wind speed {self.wind_speed_mps} must be >= 0")


@dataclass(frozen=True)
class NoFlyZone:
    # carried as data only; routes are not constrained by it
    center: GeoPoint
    radius_km: float

    def __post_init__(self):
        if not self.radius_km > 0:
            raise ValidationError(f"no-fly zone radius {self.radius_km} must be > 0")


@dataclass(frozen=True)
class DeliveryInstance:
    depot: GeoPoint
    stations: tuple[Station, ...]
    base_stations: tuple[BaseStation, ...] = ()
    weather: Weather = field(default_factory=Weather)
    no_fly_zones: tuple[NoFlyZone, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "base_stations", tuple(self.base_stations))
        object.__setattr__(self, "no_fly_zones", tuple(self.no_fly_zones))
        if not self.stations:
            raise ValidationError("instance needs at least one station")
        seen: set[str] = set()
        for s in self.stations:
            if s.id in seen:
                raise ValidationError(f"duplicate station id {s.id!r}")
            seen.add(s.id)
        bs_seen: set[str] = set()
        for b in self.base_stations:
            if b.id in bs_seen:
                raise ValidationError(f"duplicate base station id {b.id!r}")
            bs_seen.add(b.id)
        frame = self.depot.frame
        points = [s.location for s in self.stations] + [b.location for b in self.base_stations]
        points += [z.center for z in self.no_fly_zones]
        if any(p.frame != frame for p in points):
            raise ValidationError("all points of an instance must share one coordinate frame")

    @property
    def frame(self) -> str:
        return self.depot.frame

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def station(self, station_id: str) -> Station:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)

    def summary(self) -> dict[str, Any]:
        return {
            "frame": self.frame,
            "n_stations": self.n_stations,
            "n_base_stations": len(self.base_stations),
            "total_demand": sum(s.demand for s in self.stations),
            "visibility": self.weather.visibility,
            "wind_speed_mps": self.weather.wind_speed_mps,
            "n_no_fly_zones": len(self.no_fly_zones),
        }


@dataclass(frozen=True)
class Isc3Demands:
    """Step-1 performance thresholds.  Defaults are the case-study values."""

    min_data_rate: float = 200_000.0
    min_sensing_accuracy: float = 0.95
    energy_budget_per_trip: float = 200.0
    capacity: int = 20
    max_trip_distance: float = 75.0

    def __post_init__(self):
        for name in ("min_data_rate", "min_sensing_accuracy", "energy_budget_per_trip", "capacity",
                     "max_trip_distance"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be strictly positive, got {value!r}")
        if self.min_sensing_accuracy > 1.0:
            raise ValidationError(f"min_sensing_accuracy {self.min_sensing_accuracy} exceeds 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "min_data_rate": self.min_data_rate,
            "min_sensing_accuracy": self.min_sensing_accuracy,
            "energy_budget_per_trip": self.energy_budget_per_trip,
            "capacity": self.capacity,
            "max_trip_distance": self.max_trip_distance,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None, where: str = "demands") -> "Isc3Demands":
        data = _expect_object(data or {}, where)
        _reject_unknown(data, where, {"min_data_rate", "min_sensing_accuracy", "energy_budget_per_trip",
                                      "capacity", "max_trip_distance"})
        kwargs: dict[str, Any] = {}
        for key in ("min_data_rate", "min_sensing_accuracy", "energy_budget_per_trip", "max_trip_distance"):
            if key in data:
                kwargs[key] = _number(data, key, where)
        if "capacity" in data:
            kwargs["capacity"] = _integer(data, "capacity", where)
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# geometry


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """Distance in km: Euclidean for planar points, haversine for geodetic ones."""
    if a.frame != b.frame:
        raise FrameMismatch(f"cannot measure {a.frame} to {b.frame}")
    if a.frame == PLANAR:
        return math.hypot(a.x - b.x, a.y - b.y)
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def node_points(instance: DeliveryInstance) -> list[GeoPoint]:
    """Depot first, then stations in declaration order."""
    return [instance.depot] + [s.location for s in instance.stations]


def distance_matrix(instance: DeliveryInstance) -> np.ndarray:
    """Symmetric km matrix over the depot (index 0) and the stations (1..n)."""
    pts = node_points(instance)
    m = len(pts)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = distance(pts[i], pts[j])
    return out


def project_point(p: GeoPoint, origin: GeoPoint) -> GeoPoint:
    """Local tangent-plane (equirectangular) projection about ``origin``, in km."""
    if p.frame == PLANAR:
        return p
    k = math.pi / 180.0 * EARTH_RADIUS_KM
    return GeoPoint((p.lon - origin.lon) * k * math.cos(math.radians(origin.lat)), (p.lat - origin.lat) * k)


def to_planar(instance: DeliveryInstance) -> DeliveryInstance:
    """Return the instance projected about its depot (identity for planar input)."""
    if instance.frame == PLANAR:
        return instance
    o = instance.depot
    return DeliveryInstance(
        depot=project_point(o, o),
        stations=tuple(Station(s.id, project_point(s.location, o), s.demand, s.required_sensing_accuracy)
                       for s in instance.stations),
        base_stations=tuple(BaseStation(b.id, project_point(b.location, o), b.tx_power_dbm,
                                        b.carrier_freq_mhz, b.bandwidth_hz) for b in instance.base_stations),
        weather=instance.weather,
        no_fly_zones=tuple(NoFlyZone(project_point(z.center, o), z.radius_km) for z in instance.no_fly_zones),
    )


# ---------------------------------------------------------------------------
# generation


def generate_instance(
    seed: int,
    n_stations: int = 10,
    area_side: float = 40.0,
    n_base_stations: int = 5,
    demand_range: Sequence[int] = (1, 5),
) -> DeliveryInstance:
    """Seeded random planar scene over a square of ``area_side`` km with the depot at its centre."""
    lo, hi = demand_range
    if n_stations < 1:
        raise ArgumentError(f"n_stations must be >= 1, got {n_stations}")
    if n_base_stations < 0:
        raise ArgumentError(f"n_base_stations must be >= 0, got {n_base_stations}")
    if lo < 1 or hi < lo:
        raise ArgumentError(f"demand_range must satisfy 1 <= lo <= hi, got {demand_range}")
    if not area_side > 0:
        raise ArgumentError(f"area_side must be > 0, got {area_side}")
    rng = random.Random(seed)
    width = max(2, len(str(n_stations)))
    stations = []
    for k in range(n_stations):
        loc = GeoPoint(rng.uniform(0.0, area_side), rng.uniform(0.0, area_side))
        stations.append(Station(f"S{k + 1:0{width}d}", loc, rng.randint(lo, hi),
                                round(rng.uniform(0.85, 0.95), 3)))
    base_stations = [
        BaseStation(f"B{k + 1:02d}", GeoPoint(rng.uniform(0.0, area_side), rng.uniform(0.0, area_side)))
        for k in range(n_base_stations)
    ]
    return DeliveryInstance(
        depot=GeoPoint(area_side / 2, area_side / 2),
        stations=tuple(stations),
        base_stations=tuple(base_stations),
        weather=Weather(1.0, 0.0),
    )


def canonical_instance(seed: int = 7) -> DeliveryInstance:
    """Benchmark scene shape: 10 stations on a 40 km square, five base stations."""
    return generate_instance(seed, n_stations=10, area_side=40.0, n_base_stations=5, demand_range=(1, 5))


# ---------------------------------------------------------------------------
# serialisation


def _point_dict(p: GeoPoint) -> dict[str, float]:
    return {"x": p.x, "y": p.y} if p.frame == PLANAR else {"lat": p.lat, "lon": p.lon}


def instance_to_dict(instance: DeliveryInstance) -> dict[str, Any]:
    return {
        "frame": instance.frame,
        "depot": _point_dict(instance.depot),
        "stations": [
            {"id": s.id, **_point_dict(s.location), "demand": s.demand,
             "required_sensing_accuracy": s.required_sensing_accuracy}
            for s in instance.stations
        ],
        "base_stations": [
            {"id": b.id, **_point_dict(b.location), "tx_power_dbm": b.tx_power_dbm,
             "carrier_freq_mhz": b.carrier_freq_mhz, "bandwidth_hz": b.bandwidth_hz}
            for b in instance.base_stations
        ],
        "weather": {"visibility": instance.weather.visibility, "wind_speed_mps": instance.weather.wind_speed_mps},
        "no_fly_zones": [{**_point_dict(z.center), "radius_km": z.radius_km} for z in instance.no_fly_zones],
    }


def dumps_instance(instance: DeliveryInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def save_instance(instance: DeliveryInstance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def _expect_object(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SchemaError(where, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(data: Mapping[str, Any], where: str, allowed: set[str]) -> None:
    extra = sorted(set(data) - allowed)
    if extra:
        raise SchemaError(f"{where}.{extra[0]}", "unknown key")


def _number(data: Mapping[str, Any], key: str, where: str, default: Any = ...) -> float:
    if key not in data:
        if default is ...:
            raise SchemaError(f"{where}.{key}", "missing field")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}.{key}", f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(data: Mapping[str, Any], key: str, where: str) -> int:
    if key not in data:
        raise SchemaError(f"{where}.{key}", "missing field")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}.{key}", f"expected an integer, got {type(value).__name__}")
    return value


def _string(data: Mapping[str, Any], key: str, where: str) -> str:
    if key not in data:
        raise SchemaError(f"{where}.{key}", "missing field")
    if not isinstance(data[key], str):
        raise SchemaError(f"{where}.{key}", f"expected a string, got {type(data[key]).__name__}")
    return data[key]


def _list(data: Mapping[str, Any], key: str, where: str, required: bool = True) -> list:
    if key not in data:
        if required:
            raise SchemaError(f"{where}.{key}", "missing field")
        return []
    if not isinstance(data[key], list):
        raise SchemaError(f"{where}.{key}", "expected a list")
    return data[key]


def _point(data: Mapping[str, Any], frame: str, where: str) -> GeoPoint:
    if frame == PLANAR:
        return GeoPoint(_number(data, "x", where), _number(data, "y", where))
    return GeoPoint.geodetic(_number(data, "lat", where), _number(data, "lon", where))


_COORDS = {PLANAR: {"x", "y"}, GEODETIC: {"lat", "lon"}}


def instance_from_dict(data: Any) -> DeliveryInstance:
    """Validate a decoded instance document.  Raises SchemaError or ValidationError."""
    data = _expect_object(data, "instance")
    _reject_unknown(data, "instance", {"frame", "depot", "stations", "base_stations", "weather", "no_fly_zones"})
    frame = data.get("frame", PLANAR)
    if frame not in FRAMES:
        raise SchemaError("instance.frame", f"expected one of {FRAMES}, got {frame!r}")
    coords = _COORDS[frame]

    depot_raw = _expect_object(data.get("depot"), "instance.depot") if "depot" in data else None
    if depot_raw is None:
        raise SchemaError("instance.depot", "missing field")
    _reject_unknown(depot_raw, "instance.depot", coords)
    depot = _point(depot_raw, frame, "instance.depot")

    stations = []
    for k, raw in enumerate(_list(data, "stations", "instance")):
        where = f"instance.stations[{k}]"
        raw = _expect_object(raw, where)
        _reject_unknown(raw, where, coords | {"id", "demand", "required_sensing_accuracy"})
        sid = _string(raw, "id", where)
        try:
            stations.append(Station(sid, _point(raw, frame, where), _integer(raw, "demand", where),
                                    _number(raw, "required_sensing_accuracy", where)))
        except ValidationError as exc:
            raise ValidationError(f"{where} ({sid}): {exc}") from None

    base_stations = []
    for k, raw in enumerate(_list(data, "base_stations", "instance", required=False)):
        where = f"instance.base_stations[{k}]"
        raw = _expect_object(raw, where)
        _reject_unknown(raw, where, coords | {"id", "tx_power_dbm", "carrier_freq_mhz", "bandwidth_hz"})
        base_stations.append(BaseStation(
            _string(raw, "id", where), _point(raw, frame, where),
            _number(raw, "tx_power_dbm", where, 40.0),
            _number(raw, "carrier_freq_mhz", where, 2000.0),
            _number(raw, "bandwidth_hz", where, 1.0e6),
        ))

    weather_raw = _expect_object(data.get("weather", {}), "instance.weather")
    _reject_unknown(weather_raw, "instance.weather", {"visibility", "wind_speed_mps"})
    weather = Weather(_number(weather_raw, "visibility", "instance.weather", 1.0),
                      _number(weather_raw, "wind_speed_mps", "instance.weather", 0.0))

    zones = []
    for k, raw in enumerate(_list(data, "no_fly_zones", "instance", required=False)):
        where = f"instance.no_fly_zones[{k}]"
        raw = _expect_object(raw, where)
        _reject_unknown(raw, where, coords | {"radius_km"})
        zones.append(NoFlyZone(_point(raw, frame, where), _number(raw, "radius_km", where)))

    return DeliveryInstance(depot, tuple(stations), tuple(base_stations), weather, tuple(zones))


def loads_instance(text: str) -> DeliveryInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed instance JSON: {exc}") from None
    return instance_from_dict(data)


def load_instance(path: str | Path) -> DeliveryInstance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read instance {path}: {exc}") from None
    return loads_instance(text)
