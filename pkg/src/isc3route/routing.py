"""Giant-tour representation, optimal split, objective and neighbourhood moves.

Every solver searches over giant tours (permutations of the stations).  A
tour is turned into depot-anchored trips by ``split``, a shortest-path
dynamic programme over contiguous tour segments that respect capacity,
trip distance and trip energy.  Communication and sensing are then checked
on the resulting plan and enter the objective as a penalty.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .constraints import (
    COMMUNICATION,
    DEFAULT_PENALTY_WEIGHTS,
    EnergyParams,
    FeasibilityChecker,
    FeasibilityReport,
    PhysicsModels,
    penalty,
)
from .errors import ArgumentError, InstanceInfeasible, NoFeasiblePlan, TooLarge
from .instance import DeliveryInstance, Isc3Demands
from .plan import RoutePlan, Trip

BRUTE_FORCE_MAX_STATIONS = 9


@dataclass(frozen=True)
class Objective:
    total_length: float
    penalty: float

    @property
    def value(self) -> float:
        return self.total_length + self.penalty

    @property
    def feasible(self) -> bool:
        return self.penalty == 0.0

    def to_dict(self) -> dict:
        return {"total_length_km": self.total_length, "penalty": self.penalty, "value": self.value}


class RoutingProblem:
    """Precomputed evaluation context for one (instance, demands, models) triple.

    Tours passed to the ``*_indices`` methods are sequences of matrix indices
    (1..n); index 0 is the depot.
    """

    def __init__(self, instance: DeliveryInstance, demands: Isc3Demands,
                 models: PhysicsModels | None = None, weights: Mapping[str, float] | None = None):
        models = models or PhysicsModels()
        self.instance = instance
        self.demands = demands
        self.models = models
        self.weights = dict(DEFAULT_PENALTY_WEIGHTS if weights is None else weights)
        if any(w < 0 for w in self.weights.values()):
            raise ArgumentError("penalty weights must be >= 0")
        self.checker = FeasibilityChecker(instance, demands, models.link, models.energy, models.sensing)
        self.D = self.checker.D
        self.demand = self.checker.demand
        self.ids = self.checker.ids
        self.n = instance.n_stations
        self._check_servable()
        # sensing does not depend on the route; every plan delivers to every station
        self._sensing_penalty = penalty(self.checker.check(RoutePlan((Trip(tuple(self.ids[1:]), 0.0, 0, 0.0),))),
                                        {"sensing": self.weights.get("sensing", 0.0)})

    def _check_servable(self) -> None:
        d, e = self.demands, self.models.energy
        for v in range(1, self.n + 1):
            sid = self.ids[v]
            if self.demand[v] > d.capacity:
                raise InstanceInfeasible(sid, f"demand {self.demand[v]} exceeds capacity {d.capacity}")
            length = self.D[0][v] + self.D[v][0]
            if length > d.max_trip_distance:
                raise InstanceInfeasible(sid, f"round trip {length:.3f} km exceeds {d.max_trip_distance} km")
            if e.energy_per_km * length + e.energy_per_delivery * 1 > d.energy_budget_per_trip:
                raise InstanceInfeasible(sid, "round-trip energy exceeds the per-trip budget")

    def to_indices(self, tour: Sequence[str]) -> tuple[int, ...]:
        idx = tuple(self.checker.indices(tour))
        if len(idx) != self.n or len(set(idx)) != self.n:
            raise ArgumentError("giant tour must be a permutation of all stations")
        return idx

    # -- split -------------------------------------------------------------

    def split_indices(self, tour: Sequence[int]) -> tuple[float, list[int]]:
        """Optimal split of ``tour``; returns (total length, trip start positions)."""
        n = len(tour)
        D, dem = self.D, self.demand
        cap = self.demands.capacity
        max_len = self.demands.max_trip_distance
        budget = self.demands.energy_budget_per_trip
        epk, epd = self.models.energy.energy_per_km, self.models.energy.energy_per_delivery
        inf = math.inf
        cost = [0.0] + [inf] * n
        trips = [0] * (n + 1)
        pred = [-1] * (n + 1)
        for i in range(n):
            ci = cost[i]
            if ci == inf:
                continue
            ti = trips[i] + 1
            load, path, prev = 0, 0.0, 0
            for j in range(i, n):
                v = tour[j]
                load += dem[v]
                if load > cap:
                    break
                path += D[prev][v]
                prev = v
                length = path + D[v][0]
                if length > max_len or epk * length + epd * (j - i + 1) > budget:
                    continue
                c = ci + length
                old = cost[j + 1]
                if c < old or (c == old and (ti < trips[j + 1] or (
                        ti == trips[j + 1] and _starts(pred, i) < _starts(pred, pred[j + 1])))):
                    cost[j + 1] = c
                    trips[j + 1] = ti
                    pred[j + 1] = i
        if cost[n] == inf:
            # unreachable once every station is individually servable
            raise InstanceInfeasible(self.ids[tour[0]], "no feasible split")
        return cost[n], _starts(pred, n)[:-1]

    def plan_from_split(self, tour: Sequence[int], starts: Sequence[int]) -> RoutePlan:
        bounds = list(starts) + [len(tour)]
        trips = []
        e = self.models.energy
        for a, b in zip(bounds, bounds[1:]):
            nodes = list(tour[a:b])
            length = self.checker.trip_length(nodes)
            trips.append(Trip(tuple(self.ids[v] for v in nodes), length, sum(self.demand[v] for v in nodes),
                              e.energy_per_km * length + e.energy_per_delivery * len(nodes)))
        return RoutePlan(tuple(trips))

    def plan_for(self, tour: Sequence[int]) -> RoutePlan:
        _, starts = self.split_indices(tour)
        return self.plan_from_split(tour, starts)

    # -- objective ---------------------------------------------------------

    def evaluate_indices(self, tour: Sequence[int]) -> tuple[float, float]:
        """(total length, penalty) of the split plan; equals the full report path."""
        length, starts = self.split_indices(tour)
        min_rate = self.demands.min_data_rate
        leg_rate = self.checker.leg_rate
        worst = math.inf
        bounds = starts + [len(tour)]
        for a, b in zip(bounds, bounds[1:]):
            prev = 0
            for k in range(a, b):
                v = tour[k]
                r = leg_rate(prev, v)[0]
                if r < worst:
                    worst = r
                prev = v
            r = leg_rate(prev, 0)[0]
            if r < worst:
                worst = r
        pen = 0.0
        if worst < min_rate:
            pen += self.weights.get(COMMUNICATION, 0.0) * (min_rate - worst) / min_rate
        if self._sensing_penalty > 0:
            pen += self._sensing_penalty
        return length, pen

    def report(self, plan: RoutePlan) -> FeasibilityReport:
        return self.checker.check(plan)

    def objective_of(self, plan: RoutePlan) -> Objective:
        """Objective recomputed from a plan through the full feasibility report."""
        return Objective(plan.total_length, penalty(self.report(plan), self.weights))


def _starts(pred: list[int], j: int) -> list[int]:
    out = [j]
    while j > 0:
        j = pred[j]
        out.append(j)
    out.reverse()
    return out


def split_giant_tour(tour: Sequence[str], instance: DeliveryInstance, demands: Isc3Demands,
                     energy: EnergyParams | None = None) -> RoutePlan:
    """Cut a giant tour into the length-optimal sequence of feasible trips.

    Ties are broken toward fewer trips, then lexicographically earliest cuts.
    Raises InstanceInfeasible when some station cannot be served on its own.
    """
    problem = RoutingProblem(instance, demands, PhysicsModels(energy=energy or EnergyParams()))
    return problem.plan_for(problem.to_indices(tour))


def evaluate(tour: Sequence[str], instance: DeliveryInstance, demands: Isc3Demands,
             models: PhysicsModels | None = None, weights: Mapping[str, float] | None = None) -> Objective:
    problem = RoutingProblem(instance, demands, models, weights)
    return Objective(*problem.evaluate_indices(problem.to_indices(tour)))


# ---------------------------------------------------------------------------
# moves

TWO_OPT = "two_opt"
RELOCATE = "relocate"
SWAP = "swap"
OR_OPT = "or_opt"
MOVE_KINDS = (TWO_OPT, RELOCATE, SWAP, OR_OPT)


@dataclass(frozen=True)
class Move:
    """A neighbourhood move.

    two_opt reverses positions i..j (inclusive, either order); relocate
    removes position i and reinserts it at j; swap exchanges i and j; or_opt
    lifts ``length`` items starting at i and reinserts them at j of the
    remainder.
    """

    kind: str
    i: int
    j: int
    length: int = 1


def apply_move(tour: Sequence, move: Move) -> tuple:
    t = list(tour)
    n = len(t)
    i, j = move.i, move.j
    if move.kind == OR_OPT:
        if move.length < 1 or not (0 <= i and i + move.length <= n and 0 <= j <= n - move.length):
            raise IndexError(f"or_opt({i}, {j}, {move.length}) out of range for tour of {n}")
    elif not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"{move.kind}({i}, {j}) out of range for tour of {n}")
    if move.kind == SWAP:
        t[i], t[j] = t[j], t[i]
    elif move.kind == TWO_OPT:
        a, b = min(i, j), max(i, j)
        t[a:b + 1] = t[a:b + 1][::-1]
    elif move.kind == RELOCATE:
        t.insert(j, t.pop(i))
    elif move.kind == OR_OPT:
        seg = t[i:i + move.length]
        del t[i:i + move.length]
        t[j:j] = seg
    else:
        raise ValueError(f"unknown move kind {move.kind!r}")
    return tuple(t)


# ---------------------------------------------------------------------------
# exact oracle


def brute_force_optimum(instance: DeliveryInstance, demands: Isc3Demands,
                        models: PhysicsModels | None = None,
                        weights: Mapping[str, float] | None = None) -> RoutePlan:
    """Best penalty-free plan over all giant tours (each optimally split).

    The lexicographically first permutation wins ties, so the result is unique.
    """
    n = instance.n_stations
    if n > BRUTE_FORCE_MAX_STATIONS:
        raise TooLarge(f"brute force limited to {BRUTE_FORCE_MAX_STATIONS} stations, got {n}")
    problem = RoutingProblem(instance, demands, models, weights)
    best, best_tour = math.inf, None
    for tour in itertools.permutations(range(1, n + 1)):
        length, pen = problem.evaluate_indices(tour)
        if pen == 0.0 and length < best:
            best, best_tour = length, tour
    if best_tour is None:
        raise NoFeasiblePlan("no permutation yields a penalty-free plan")
    return problem.plan_for(best_tour)

