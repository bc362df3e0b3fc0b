import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_plan
from isc3route.constraints import (
    COMMUNICATION,
    CONSTRAINT_KINDS,
    ConstraintRecord,
    EnergyParams,
    FeasibilityChecker,
    FeasibilityReport,
    LinkParams,
    PhysicsModels,
    SensingParams,
    achievable_rate,
    check_route_feasibility,
    coverage_radius_km,
    fspl_db,
    penalty,
    sample_positions,
    sensing_accuracy,
    trip_energy,
)
from isc3route.errors import ArgumentError, UnknownStation, ValidationError
from isc3route.instance import BaseStation, GeoPoint, Isc3Demands, Weather, generate_instance
from isc3route.plan import RoutePlan, Trip


def test_fspl_reference_value():
    # 1 km at 2 GHz
    assert fspl_db(1.0, 2000.0) == pytest.approx(20 * math.log10(2000) + 32.44)
    assert fspl_db(0.0, 2000.0) == fspl_db(0.001, 2000.0)
    with pytest.raises(ArgumentError):
        fspl_db(1.0, 0.0)


@given(st.floats(0.0, 500.0), st.floats(0.0, 500.0))
def test_rate_monotone_in_distance(d1, d2):
    bs = [BaseStation("B", GeoPoint(0.0, 0.0))]
    link = LinkParams()
    near, far = sorted((d1, d2))
    assert achievable_rate(GeoPoint(near, 0.0), bs, link) >= achievable_rate(GeoPoint(far, 0.0), bs, link)


def test_no_base_stations_means_zero_rate():
    assert achievable_rate(GeoPoint(0, 0), [], LinkParams()) == 0.0


def test_coverage_radius_matches_rate():
    bs = BaseStation("B", GeoPoint(0.0, 0.0))
    link = LinkParams()
    r = coverage_radius_km(bs, 200_000.0, link)
    assert achievable_rate(GeoPoint(r, 0.0), [bs], link) == pytest.approx(200_000.0, rel=1e-9)


@given(st.floats(1e-3, 200.0), st.sampled_from([0.05, 0.1, 0.37, 1.0]))
def test_sample_positions(length, step):
    pos = sample_positions(length, step)
    assert pos[0] == 0.0 and pos[-1] == length
    assert (np.diff(pos) > 0).all()
    assert (np.diff(pos) <= step + 1e-12).all()
    assert set(pos.tolist()) <= set(sample_positions(length, step / 2).tolist())


def test_energy_and_sensing_models():
    assert trip_energy(10.0, 3, EnergyParams()) == 28.0
    assert sensing_accuracy(Weather(visibility=0.5), SensingParams()) == 0.49
    with pytest.raises(ValidationError):
        LinkParams(sample_step_km=0)


def test_physics_round_trip():
    models = PhysicsModels(LinkParams(-90.0, 0.2), EnergyParams(3.0, 0.5), SensingParams(0.9))
    assert PhysicsModels.from_dict(models.to_dict()) == models


def test_report_fields():
    inst = generate_instance(4, n_stations=5)
    plan = RoutePlan((Trip(tuple(s.id for s in inst.stations), 0.0, 0, 0.0),))
    report = check_route_feasibility(plan, Isc3Demands(), inst)
    assert [r.kind for r in report.records] == list(CONSTRAINT_KINDS)
    assert FeasibilityReport.from_dict(report.to_dict()) == report
    comm = report.record(COMMUNICATION)
    assert set(comm.location) == {"trip", "leg", "x", "y"}


def test_capacity_violation_reported():
    inst = generate_instance(4, n_stations=8)
    plan = RoutePlan((Trip(tuple(s.id for s in inst.stations), 0.0, 0, 0.0),))
    report = check_route_feasibility(plan, Isc3Demands(capacity=5), inst)
    cap = report.record("capacity")
    assert not cap.passed and cap.violation == cap.worst_value - 5
    assert penalty(report) > 0


def test_unknown_station():
    inst = generate_instance(4, n_stations=3)
    with pytest.raises(UnknownStation):
        check_route_feasibility(RoutePlan((Trip(("nope",), 0.0, 0, 0.0),)), Isc3Demands(), inst)


def test_visibility_breaks_sensing():
    inst = generate_instance(4, n_stations=3)
    foggy = inst.__class__(inst.depot, inst.stations, inst.base_stations, Weather(visibility=0.5))
    plan = RoutePlan((Trip(tuple(s.id for s in inst.stations), 0.0, 0, 0.0),))
    assert not check_route_feasibility(plan, Isc3Demands(), foggy).record("sensing").passed


def test_negative_weight_rejected():
    inst = generate_instance(4, n_stations=3)
    plan = RoutePlan((Trip(tuple(s.id for s in inst.stations), 0.0, 0, 0.0),))
    report = check_route_feasibility(plan, Isc3Demands(capacity=1), inst)
    with pytest.raises(ArgumentError):
        penalty(report, {"capacity": -1.0})


@given(st.integers(0, 500), st.integers(0, 3), st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_passed_iff_zero_penalty(seed, n_bs, rng):
    inst = generate_instance(seed, n_stations=rng.randint(1, 9), area_side=60.0, n_base_stations=n_bs)
    report = check_route_feasibility(random_plan(inst, rng), Isc3Demands(), inst)
    assert report.passed == (penalty(report) == 0.0)


def test_recompute_fills_metrics():
    inst = generate_instance(9, n_stations=4)
    checker = FeasibilityChecker(inst, Isc3Demands(), LinkParams(), EnergyParams(), SensingParams())
    plan = checker.recompute(random_plan(inst, random.Random(1)))
    for trip in plan.trips:
        assert trip.length == checker.trip_length(checker.indices(trip.stations))
        assert trip.energy == 2.5 * trip.length + len(trip.stations)


def test_penalty_arithmetic_and_linearity():
    inst = generate_instance(4, n_stations=8)
    plan = RoutePlan((Trip(tuple(s.id for s in inst.stations), 0.0, 0, 0.0),))
    report = check_route_feasibility(plan, Isc3Demands(capacity=1), inst)
    # capacity exceeded by exactly 10 %: load 22 against capacity 20
    ten_pct = FeasibilityReport((ConstraintRecord("capacity", False, 22.0, 20.0, 2.0),))
    assert penalty(ten_pct, {"capacity": 100.0}) == pytest.approx(10.0)
    w = {"capacity": 3.0, "distance": 1.0, "energy": 2.0, "communication": 5.0, "sensing": 1.0}
    assert penalty(report, {k: 2 * v for k, v in w.items()}) == pytest.approx(2 * penalty(report, w))
