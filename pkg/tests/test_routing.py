import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import split_oracle
from isc3route.errors import InstanceInfeasible, TooLarge
from isc3route.instance import GeoPoint, Isc3Demands, Station, generate_instance
from isc3route.plan import RoutePlan
from isc3route.routing import (
    MOVE_KINDS,
    Move,
    RoutingProblem,
    apply_move,
    brute_force_optimum,
    evaluate,
    split_giant_tour,
)


@st.composite
def instance_and_tour(draw, lo=1, hi=8):
    n = draw(st.integers(lo, hi))
    inst = generate_instance(draw(st.integers(0, 10_000)), n_stations=n)
    tour = draw(st.permutations([s.id for s in inst.stations]))
    return inst, list(tour)


@given(instance_and_tour(), st.sampled_from([Isc3Demands(), Isc3Demands(capacity=8, max_trip_distance=60.0)]))
@settings(max_examples=80, deadline=None)
def test_split_matches_enumeration(case, demands):
    inst, tour = case
    try:
        problem = RoutingProblem(inst, demands)
    except InstanceInfeasible:
        assume(False)
    idx = problem.to_indices(tour)
    plan = split_giant_tour(tour, inst, demands)
    assert plan.total_length == split_oracle(idx, problem.D, problem.demand, demands)
    assert plan.station_ids == tour
    for trip in plan.trips:
        assert trip.load <= demands.capacity
        assert trip.length <= demands.max_trip_distance
        assert trip.energy <= demands.energy_budget_per_trip


def test_split_prefers_fewer_trips_on_ties():
    from isc3route.instance import DeliveryInstance

    depot = GeoPoint(0.0, 0.0)
    inst = DeliveryInstance(depot, (Station("A", GeoPoint(0.0, 0.0), 1), Station("B", GeoPoint(1.0, 0.0), 1)))
    plan = split_giant_tour(["A", "B"], inst, Isc3Demands())
    # A sits on the depot, so {A}{B} and {A,B} both cost 2 km
    assert plan.total_length == 2.0
    assert len(plan.trips) == 1


def test_unservable_station():
    from isc3route.instance import DeliveryInstance

    inst = DeliveryInstance(GeoPoint(0, 0), (Station("far", GeoPoint(50.0, 0.0), 1),))
    with pytest.raises(InstanceInfeasible) as info:
        split_giant_tour(["far"], inst, Isc3Demands())
    assert info.value.station_id == "far"
    inst = DeliveryInstance(GeoPoint(0, 0), (Station("heavy", GeoPoint(1.0, 0.0), 30),))
    with pytest.raises(InstanceInfeasible):
        split_giant_tour(["heavy"], inst, Isc3Demands())


@given(instance_and_tour(2, 8))
@settings(max_examples=40, deadline=None)
def test_fast_penalty_equals_report(case):
    inst, tour = case
    for n_bs in (0, 1, 5):
        inst_b = generate_instance(0, n_stations=1, n_base_stations=n_bs)
        scene = inst.__class__(inst.depot, inst.stations, inst_b.base_stations)
        problem = RoutingProblem(scene, Isc3Demands())
        idx = problem.to_indices(tour)
        length, pen = problem.evaluate_indices(idx)
        obj = problem.objective_of(problem.plan_for(idx))
        assert length == obj.total_length
        assert pen == pytest.approx(obj.penalty, rel=1e-12, abs=0.0)


def test_evaluate_wrapper():
    inst = generate_instance(3, n_stations=5)
    tour = [s.id for s in inst.stations]
    obj = evaluate(tour, inst, Isc3Demands())
    assert obj.value == obj.total_length + obj.penalty
    with pytest.raises(ValueError):
        evaluate(tour[:-1], inst, Isc3Demands())


@given(st.lists(st.integers(), min_size=2, max_size=12, unique=True), st.data())
def test_moves_preserve_permutation(tour, data):
    n = len(tour)
    kind = data.draw(st.sampled_from(MOVE_KINDS))
    if kind == "or_opt":
        length = data.draw(st.integers(1, n))
        move = Move(kind, data.draw(st.integers(0, n - length)), data.draw(st.integers(0, n - length)), length)
    else:
        move = Move(kind, data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1)))
    out = apply_move(tour, move)
    assert sorted(out) == sorted(tour)


def test_move_semantics():
    t = (0, 1, 2, 3, 4)
    assert apply_move(t, Move("two_opt", 1, 3)) == (0, 3, 2, 1, 4)
    assert apply_move(t, Move("swap", 0, 4)) == (4, 1, 2, 3, 0)
    assert apply_move(t, Move("relocate", 0, 4)) == (1, 2, 3, 4, 0)
    assert apply_move(t, Move("or_opt", 0, 3, 2)) == (2, 3, 4, 0, 1)
    with pytest.raises(IndexError):
        apply_move(t, Move("swap", 0, 5))


def test_brute_force_beats_every_permutation():
    import itertools

    inst = generate_instance(11, n_stations=5)
    demands = Isc3Demands()
    best = brute_force_optimum(inst, demands)
    problem = RoutingProblem(inst, demands)
    for perm in itertools.permutations(range(1, 6)):
        length, pen = problem.evaluate_indices(perm)
        if pen == 0:
            assert best.total_length <= length


def test_brute_force_limit():
    with pytest.raises(TooLarge):
        brute_force_optimum(generate_instance(0, n_stations=10), Isc3Demands())


def test_plan_round_trip():
    inst = generate_instance(3, n_stations=6)
    plan = split_giant_tour([s.id for s in inst.stations], inst, Isc3Demands())
    assert RoutePlan.from_dict(plan.to_dict()) == plan
    assert math.isclose(plan.to_dict()["total_length_km"], sum(t.length for t in plan.trips))
