"""ISC3 feasibility models: link budget, sensing accuracy and trip energy.

Communication is checked by sampling each leg every ``sample_step`` km
(endpoints included) and taking the best base station at each sample.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, UnknownStation, ValidationError
from .instance import (
    BaseStation,
    DeliveryInstance,
    GeoPoint,
    Isc3Demands,
    Weather,
    _expect_object,
    _number,
    _reject_unknown,
    distance,
    distance_matrix,
    node_points,
    to_planar,
)
from .plan import RoutePlan, Trip

FSPL_MIN_DISTANCE_KM = 0.001

CAPACITY = "capacity"
DISTANCE = "distance"
ENERGY = "energy"
COMMUNICATION = "communication"
SENSING = "sensing"
CONSTRAINT_KINDS = (CAPACITY, DISTANCE, ENERGY, COMMUNICATION, SENSING)

DEFAULT_PENALTY_WEIGHTS = {kind: 1000.0 for kind in CONSTRAINT_KINDS}


@dataclass(frozen=True)
class LinkParams:
    noise_power_dbm: float = -100.0
    sample_step_km: float = 0.1

    def __post_init__(self):
        if not self.sample_step_km > 0:
            raise ValidationError(f"sample_step_km must be > 0, got {self.sample_step_km}")


@dataclass(frozen=True)
class EnergyParams:
    energy_per_km: float = 2.5
    energy_per_delivery: float = 1.0

    def __post_init__(self):
        if self.energy_per_km < 0 or self.energy_per_delivery < 0:
            raise ValidationError("energy parameters must be >= 0")


@dataclass(frozen=True)
class SensingParams:
    base_accuracy: float = 0.98

    def __post_init__(self):
        if not 0.0 < self.base_accuracy <= 1.0:
            raise ValidationError(f"base_accuracy {self.base_accuracy} not in (0, 1]")


@dataclass(frozen=True)
class PhysicsModels:
    link: LinkParams = field(default_factory=LinkParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    sensing: SensingParams = field(default_factory=SensingParams)

    def to_dict(self) -> dict[str, Any]:
        return {"link": asdict(self.link), "energy": asdict(self.energy), "sensing": asdict(self.sensing)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "PhysicsModels":
        data = data or {}
        blocks = {}
        for key, typ in (("link", LinkParams), ("energy", EnergyParams), ("sensing", SensingParams)):
            raw = _expect_object(data.get(key) or {}, key)
            names = {f for f in typ.__dataclass_fields__}
            _reject_unknown(raw, key, names)
            blocks[key] = typ(**{name: _number(raw, name, key) for name in names if name in raw})
        return cls(**blocks)


# ---------------------------------------------------------------------------
# link budget


def fspl_db(d_km: float, f_mhz: float) -> float:
    """Free-space path loss in dB; distance clamped below at 1 m."""
    if not f_mhz > 0:
        raise ArgumentError(f"carrier frequency must be > 0 MHz, got {f_mhz}")
    if d_km < 0:
        raise ArgumentError(f"distance must be >= 0, got {d_km}")
    d = max(d_km, FSPL_MIN_DISTANCE_KM)
    return 20.0 * math.log10(d) + 20.0 * math.log10(f_mhz) + 32.44


class _BaseStationArrays:
    def __init__(self, base_stations: Sequence[BaseStation]):
        self.tx = np.array([b.tx_power_dbm for b in base_stations], dtype=float)
        self.freq_term = np.array([20.0 * math.log10(b.carrier_freq_mhz) for b in base_stations], dtype=float)
        self.bandwidth = np.array([b.bandwidth_hz for b in base_stations], dtype=float)

    def __len__(self) -> int:
        return len(self.tx)

    def best_rate(self, dist_km: np.ndarray, noise_dbm: float) -> np.ndarray:
        """``dist_km`` has shape (points, base stations); returns the best rate per point."""
        if len(self) == 0:
            return np.zeros(dist_km.shape[0])
        d = np.maximum(dist_km, FSPL_MIN_DISTANCE_KM)
        loss = 20.0 * np.log10(d) + self.freq_term + 32.44
        snr = 10.0 ** ((self.tx - loss - noise_dbm) / 10.0)
        return (self.bandwidth * np.log2(1.0 + snr)).max(axis=1)


def achievable_rate(p: GeoPoint, base_stations: Sequence[BaseStation], link: LinkParams) -> float:
    """Best Shannon rate (bits/s) at ``p`` over all base stations."""
    if not base_stations:
        return 0.0
    arrays = _BaseStationArrays(base_stations)
    dist = np.array([[distance(p, b.location) for b in base_stations]])
    return float(arrays.best_rate(dist, link.noise_power_dbm)[0])


def coverage_radius_km(bs: BaseStation, min_rate: float, link: LinkParams) -> float:
    """Distance at which ``bs`` alone delivers exactly ``min_rate`` (inf/0 at the extremes)."""
    snr_needed = 2.0 ** (min_rate / bs.bandwidth_hz) - 1.0
    if snr_needed <= 0:
        return math.inf
    max_loss = bs.tx_power_dbm - link.noise_power_dbm - 10.0 * math.log10(snr_needed)
    return 10.0 ** ((max_loss - 32.44 - 20.0 * math.log10(bs.carrier_freq_mhz)) / 20.0)


def sensing_accuracy(weather: Weather, sensing: SensingParams) -> float:
    return sensing.base_accuracy * weather.visibility


def trip_energy(trip_length: float, n_deliveries: int, e: EnergyParams) -> float:
    if trip_length < 0:
        raise ArgumentError(f"trip length must be >= 0, got {trip_length}")
    return e.energy_per_km * trip_length + e.energy_per_delivery * n_deliveries


def sample_positions(length: float, step: float) -> np.ndarray:
    """Offsets 0, step, 2*step, ... below ``length``, then ``length`` itself."""
    n = math.ceil(length / step) if length > 0 else 0
    offsets = np.arange(n, dtype=float) * step
    offsets = offsets[offsets < length]
    return np.append(offsets, length)


def leg_samples(a: np.ndarray, b: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample offsets (km) and planar points along the straight leg a -> b."""
    length = float(math.hypot(b[0] - a[0], b[1] - a[1]))
    offsets = sample_positions(length, step)
    if length == 0.0:
        return offsets, np.array([a], dtype=float)
    t = offsets / length
    points = a[None, :] + t[:, None] * (b - a)[None, :]
    points[-1] = b
    return offsets, points


# ---------------------------------------------------------------------------
# feasibility report


@dataclass(frozen=True)
class ConstraintRecord:
    kind: str
    passed: bool
    worst_value: float | None
    threshold: float
    violation: float
    location: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FeasibilityReport:
    records: tuple[ConstraintRecord, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, kind: str) -> ConstraintRecord:
        for r in self.records:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "records": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeasibilityReport":
        return cls(tuple(ConstraintRecord(**r) for r in data["records"]))


def _upper(kind: str, values: list[tuple[float, dict]], threshold: float) -> ConstraintRecord:
    worst, loc = 0.0, {}
    for value, where in values:
        if not loc or value > worst:
            worst, loc = value, where
    return ConstraintRecord(kind, worst <= threshold, worst, threshold, max(0.0, worst - threshold), loc)


class FeasibilityChecker:
    """Checks plans against one (instance, demands, models) triple.

    Leg sampling results are cached, so repeated checks on the same instance
    (as done by the solvers) only pay for each directed leg once.
    """

    def __init__(self, instance: DeliveryInstance, demands: Isc3Demands, link: LinkParams,
                 energy: EnergyParams, sensing: SensingParams):
        self.instance = instance
        self.demands = demands
        self.link = link
        self.energy = energy
        self.sensing = sensing
        self.D: list[list[float]] = distance_matrix(instance).tolist()
        self.index = {s.id: k + 1 for k, s in enumerate(instance.stations)}
        self.ids = ["depot"] + [s.id for s in instance.stations]
        self.demand = [0] + [s.demand for s in instance.stations]
        planar = to_planar(instance)
        self.xy = np.array([[p.x, p.y] for p in node_points(planar)], dtype=float)
        self.bs_xy = np.array([[b.location.x, b.location.y] for b in planar.base_stations], dtype=float)
        self._bs = _BaseStationArrays(planar.base_stations)
        self._legs: dict[tuple[int, int], tuple[float, tuple[float, float]]] = {}
        self.sensing_value = sensing_accuracy(instance.weather, sensing)
        self.sensing_threshold = [0.0] + [max(demands.min_sensing_accuracy, s.required_sensing_accuracy)
                                          for s in instance.stations]

    def rates_at(self, points: np.ndarray) -> np.ndarray:
        if len(self._bs) == 0:
            return np.zeros(len(points))
        diff = points[:, None, :] - self.bs_xy[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        return self._bs.best_rate(dist, self.link.noise_power_dbm)

    def leg_rate(self, i: int, j: int) -> tuple[float, tuple[float, float]]:
        """Minimum sampled rate along leg i -> j and where it occurs."""
        key = (i, j)
        hit = self._legs.get(key)
        if hit is None:
            _, points = leg_samples(self.xy[i], self.xy[j], self.link.sample_step_km)
            rates = self.rates_at(points)
            k = int(np.argmin(rates))
            hit = (float(rates[k]), (float(points[k, 0]), float(points[k, 1])))
            self._legs[key] = hit
        return hit

    def trip_length(self, nodes: Sequence[int]) -> float:
        D = self.D
        prev, length = 0, 0.0
        for v in nodes:
            length += D[prev][v]
            prev = v
        return length + D[prev][0]

    def indices(self, station_ids: Iterable[str]) -> list[int]:
        out = []
        for sid in station_ids:
            k = self.index.get(sid)
            if k is None:
                raise UnknownStation(sid)
            out.append(k)
        return out

    def recompute(self, plan: RoutePlan) -> RoutePlan:
        """Same trips with length/load/energy recomputed from the instance."""
        trips = []
        for trip in plan.trips:
            nodes = self.indices(trip.stations)
            length = self.trip_length(nodes)
            trips.append(Trip(tuple(trip.stations), length, sum(self.demand[v] for v in nodes),
                              trip_energy(length, len(nodes), self.energy)))
        return RoutePlan(tuple(trips))

    def check(self, plan: RoutePlan) -> FeasibilityReport:
        d = self.demands
        loads, lengths, energies = [], [], []
        comm_worst, comm_loc = None, {}
        sens_worst, sens_loc, sens_thr = None, {}, d.min_sensing_accuracy
        sens_short = -math.inf
        for k, trip in enumerate(plan.trips):
            nodes = self.indices(trip.stations)
            length = self.trip_length(nodes)
            load = sum(self.demand[v] for v in nodes)
            loads.append((float(load), {"trip": k}))
            lengths.append((length, {"trip": k}))
            energies.append((trip_energy(length, len(nodes), self.energy), {"trip": k}))
            route = [0] + nodes + [0]
            for a, b in zip(route, route[1:]):
                rate, (x, y) = self.leg_rate(a, b)
                if comm_worst is None or rate < comm_worst:
                    comm_worst = rate
                    comm_loc = {"trip": k, "leg": [self.ids[a], self.ids[b]], "x": x, "y": y}
            for v in nodes:
                short = self.sensing_threshold[v] - self.sensing_value
                if short > sens_short:
                    sens_short, sens_worst, sens_thr = short, self.sensing_value, self.sensing_threshold[v]
                    sens_loc = {"station": self.ids[v]}

        if comm_worst is None:
            comm = ConstraintRecord(COMMUNICATION, True, None, d.min_data_rate, 0.0, {})
        else:
            comm = ConstraintRecord(COMMUNICATION, comm_worst >= d.min_data_rate, comm_worst, d.min_data_rate,
                                    max(0.0, d.min_data_rate - comm_worst), comm_loc)
        if sens_worst is None:
            sens = ConstraintRecord(SENSING, True, None, sens_thr, 0.0, {})
        else:
            sens = ConstraintRecord(SENSING, sens_worst >= sens_thr, sens_worst, sens_thr,
                                    max(0.0, sens_thr - sens_worst), sens_loc)
        return FeasibilityReport((
            _upper(CAPACITY, loads, float(d.capacity)),
            _upper(DISTANCE, lengths, d.max_trip_distance),
            _upper(ENERGY, energies, d.energy_budget_per_trip),
            comm,
            sens,
        ))


def check_route_feasibility(plan: RoutePlan, demands: Isc3Demands, instance: DeliveryInstance,
                            link: LinkParams | None = None, energy: EnergyParams | None = None,
                            sensing: SensingParams | None = None) -> FeasibilityReport:
    checker = FeasibilityChecker(instance, demands, link or LinkParams(), energy or EnergyParams(),
                                 sensing or SensingParams())
    return checker.check(plan)


def penalty(report: FeasibilityReport, weights: Mapping[str, float] | None = None) -> float:
    """Weighted sum of violations, each normalised by its threshold."""
    weights = DEFAULT_PENALTY_WEIGHTS if weights is None else weights
    total = 0.0
    for r in report.records:
        w = weights.get(r.kind, 0.0)
        if w < 0:
            raise ArgumentError(f"penalty weight for {r.kind} must be >= 0")
        if r.violation > 0:
            total += w * r.violation / r.threshold
    return total
