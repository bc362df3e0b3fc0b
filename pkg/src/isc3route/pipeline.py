"""Five-step delivery pipeline: demands, cognition, ingestion, decision, execution.

The cognition/decision agent is a pluggable boundary.  ``RuleBasedAgent``
is deterministic and built in; ``ExternalAgent`` forwards the question over
the edge wire protocol to whatever model sits behind it.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Protocol

from .constraints import FeasibilityChecker, PhysicsModels, leg_samples, trip_energy
from .errors import (
    AgentInvalidResponse,
    AgentUnavailable,
    InfeasiblePlanRejected,
    Isc3Error,
    ParseError,
    RemoteError,
    SchemaError,
    TransportError,
    ValidationError,
)
from .instance import DeliveryInstance, Isc3Demands, _expect_object, _reject_unknown, load_instance
from .plan import RoutePlan
from .solvers import SolverConfig, SolverResult, solve

log = logging.getLogger(__name__)

STEP_NAMES = ("demands", "cognition", "ingestion", "decision", "execution")
DEFAULT_CRUISE_SPEED_MPS = 15.0
DEFAULT_TURNAROUND_S = 60.0


# ---------------------------------------------------------------------------
# run config


@dataclass(frozen=True)
class RunConfig:
    demands: Isc3Demands = field(default_factory=Isc3Demands)
    scene_path: Path | None = None
    agent: str = "rule_based"
    agent_address: str | None = None
    solver: Mapping[str, Any] = field(default_factory=dict)
    edge: str | None = None
    fallback: bool = True
    cruise_speed_mps: float = DEFAULT_CRUISE_SPEED_MPS
    turnaround_s: float = DEFAULT_TURNAROUND_S
    seed: int = 0
    models: PhysicsModels = field(default_factory=PhysicsModels)

    @classmethod
    def from_dict(cls, data: Any, base_dir: Path = Path(".")) -> "RunConfig":
        data = _expect_object(data, "run_config")
        _reject_unknown(data, "run_config", {"demands", "scene", "agent", "solver", "edge", "fallback",
                                             "cruise_speed_mps", "turnaround_s", "seed", "link", "energy",
                                             "sensing"})
        scene = data.get("scene")
        if isinstance(scene, Mapping):
            _reject_unknown(scene, "run_config.scene", {"instance"})
            scene = scene.get("instance")
        if scene is not None and not isinstance(scene, str):
            raise SchemaError("run_config.scene.instance", "expected a file path")
        agent = data.get("agent", {"kind": "rule_based"})
        if isinstance(agent, str):
            agent = {"kind": agent}
        agent = _expect_object(agent, "run_config.agent")
        _reject_unknown(agent, "run_config.agent", {"kind", "address"})
        if agent.get("kind", "rule_based") not in ("rule_based", "external"):
            raise SchemaError("run_config.agent.kind", "expected 'rule_based' or 'external'")
        if agent.get("kind") == "external" and not isinstance(agent.get("address"), str):
            raise SchemaError("run_config.agent.address", "external agent needs host:port")
        solver = _expect_object(data.get("solver", {}), "run_config.solver")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise SchemaError("run_config.seed", "expected an integer")
        speed = data.get("cruise_speed_mps", DEFAULT_CRUISE_SPEED_MPS)
        turnaround = data.get("turnaround_s", DEFAULT_TURNAROUND_S)
        for key, value in (("cruise_speed_mps", speed), ("turnaround_s", turnaround)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"run_config.{key}", "expected a number")
        if not speed > 0 or turnaround < 0:
            raise ValidationError("cruise_speed_mps must be > 0 and turnaround_s >= 0")
        edge = data.get("edge")
        if edge is not None and not isinstance(edge, str):
            raise SchemaError("run_config.edge", "expected host:port")
        return cls(
            demands=Isc3Demands.from_dict(data.get("demands")),
            scene_path=(base_dir / scene) if scene else None,
            agent=agent.get("kind", "rule_based"),
            agent_address=agent.get("address"),
            solver=dict(solver),
            edge=edge,
            fallback=bool(data.get("fallback", True)),
            cruise_speed_mps=float(speed),
            turnaround_s=float(turnaround),
            seed=seed,
            models=PhysicsModels.from_dict({k: data[k] for k in ("link", "energy", "sensing") if k in data}),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read run config {path}: {exc}") from None
        return cls.from_dict(data, path.parent)


def generate_demands(config_path: str | Path) -> Isc3Demands:
    """Step 1: the run config's ``demands`` block, with case-study defaults for absent fields."""
    return RunConfig.load(config_path).demands


# ---------------------------------------------------------------------------
# cognition


@dataclass(frozen=True)
class ScenePackage:
    instance: DeliveryInstance
    sources: tuple[str, ...]
    ingested_at: str

    def summary(self) -> dict[str, Any]:
        return self.instance.summary()


@dataclass(frozen=True)
class TaskSpec:
    demands: Isc3Demands
    solver: SolverConfig
    offload: bool = False
    edge_address: str | None = None
    task: str = "express_delivery"

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "demands": self.demands.to_dict(),
            "solver": self.solver.full_dict(),
            "offload": self.offload,
            "edge_address": self.edge_address,
        }

    @classmethod
    def from_dict(cls, data: Any) -> "TaskSpec":
        data = _expect_object(data, "task")
        _reject_unknown(data, "task", {"task", "demands", "solver", "offload", "edge_address"})
        if data.get("task", "express_delivery") != "express_delivery":
            raise ValidationError(f"unsupported task kind {data.get('task')!r}")
        if not isinstance(data.get("offload", False), bool):
            raise SchemaError("task.offload", "expected a boolean")
        address = data.get("edge_address")
        if address is not None and not isinstance(address, str):
            raise SchemaError("task.edge_address", "expected host:port or null")
        if "solver" not in data:
            raise SchemaError("task.solver", "missing field")
        return cls(
            demands=Isc3Demands.from_dict(data.get("demands")),
            solver=SolverConfig.from_dict(data["solver"]),
            offload=data.get("offload", False),
            edge_address=address,
        )


class DecisionAgent(Protocol):
    def plan(self, demands: Isc3Demands, scene_summary: Mapping[str, Any]) -> TaskSpec: ...


class RuleBasedAgent:
    """SA for small scenes (n <= 12), GA otherwise; offload for n > 25 or when an edge is configured."""

    def __init__(self, seed: int = 0, eval_budget: int = 20_000, edge_address: str | None = None):
        self.seed = seed
        self.eval_budget = eval_budget
        self.edge_address = edge_address

    def plan(self, demands: Isc3Demands, scene_summary: Mapping[str, Any]) -> TaskSpec:
        n = scene_summary.get("n_stations")
        algorithm = "sa" if n is None or n <= 12 else "ga"
        offload = self.edge_address is not None or (n is not None and n > 25)
        return TaskSpec(demands, SolverConfig(algorithm, seed=self.seed, eval_budget=self.eval_budget),
                        offload=offload, edge_address=self.edge_address)


class ExternalAgent:
    """Delegates cognition to a remote ``cognize`` endpoint."""

    def __init__(self, address: str, seed: int = 0, eval_budget: int = 20_000, timeout: float = 30.0):
        self.address = address
        self.seed = seed
        self.eval_budget = eval_budget
        self.timeout = timeout

    def plan(self, demands: Isc3Demands, scene_summary: Mapping[str, Any]) -> TaskSpec:
        from .edge import EdgeClient

        params = {"demands": demands.to_dict(), "scene_summary": dict(scene_summary), "seed": self.seed,
                  "eval_budget": self.eval_budget}
        try:
            with EdgeClient(self.address, self.timeout) as client:
                raw = client.call("cognize", params)
        except TransportError as exc:
            raise AgentUnavailable(str(exc)) from None
        except RemoteError as exc:
            raise AgentInvalidResponse(str(exc)) from None
        try:
            return TaskSpec.from_dict(raw)
        except (SchemaError, ValidationError) as exc:
            raise AgentInvalidResponse(f"agent returned an invalid task: {exc}") from None


def cognize(demands: Isc3Demands, scene: ScenePackage | Mapping[str, Any], agent: DecisionAgent) -> TaskSpec:
    """Step 2: ask the agent for a task; the answer must be a valid TaskSpec."""
    summary = scene.summary() if isinstance(scene, ScenePackage) else dict(scene)
    task = agent.plan(demands, summary)
    if not isinstance(task, TaskSpec):
        raise AgentInvalidResponse(f"agent returned {type(task).__name__}, not a TaskSpec")
    return task


def preview_scene(path: Path | None) -> dict[str, Any]:
    """Cheap look at the scene file for cognition; unknown fields stay None."""
    summary: dict[str, Any] = {"n_stations": None}
    if path is None:
        return summary
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        summary["n_stations"] = len(data["stations"])
        summary["n_base_stations"] = len(data.get("base_stations", []))
    except Exception:
        pass
    return summary


def ingest(path: Path | None) -> ScenePackage:
    """Step 3: load and validate the scene."""
    if path is None:
        raise ParseError("run config names no scene file")
    instance = load_instance(path)
    return ScenePackage(instance, (str(path),), datetime.now(timezone.utc).isoformat())


# ---------------------------------------------------------------------------
# decision


@dataclass
class Decision:
    result: SolverResult
    transport: str  # "local", "edge" or "local-fallback"
    notice: str | None = None


def decide(task: TaskSpec, scene: ScenePackage, models: PhysicsModels | None = None,
           fallback: bool = True, timeout: float = 30.0) -> Decision:
    """Step 4: solve locally or on the edge service.  Both give the same plan for the same seed."""
    instance = scene.instance
    if task.offload and task.edge_address:
        from .edge import solve_remote

        try:
            return Decision(solve_remote(task.edge_address, instance, task.demands, task.solver, models, timeout),
                            "edge")
        except TransportError as exc:
            if not fallback:
                raise
            notice = f"edge service unavailable ({exc}); solved locally"
            log.warning(notice)
            return Decision(solve(instance, task.demands, models, task.solver), "local-fallback", notice)
    notice = "offload requested but no edge address configured; solved locally" if task.offload else None
    return Decision(solve(instance, task.demands, models, task.solver),
                    "local-fallback" if task.offload else "local", notice)


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class TelemetryEvent:
    time_s: float
    x: float
    y: float
    battery_wh: float
    rate_bps: float
    kind: str
    trip: int
    station: str | None = None


@dataclass
class TelemetryLog:
    events: list[TelemetryEvent] = field(default_factory=list)

    def kinds(self, kind: str) -> list[TelemetryEvent]:
        return [e for e in self.events if e.kind == kind]

    def to_dict(self) -> dict[str, Any]:
        return {"events": [e.__dict__.copy() for e in self.events]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s", "x", "y", "battery_wh", "rate_bps", "kind", "trip", "station"])
        for e in self.events:
            w.writerow([repr(e.time_s), repr(e.x), repr(e.y), repr(e.battery_wh), repr(e.rate_bps), e.kind,
                        e.trip, e.station or ""])
        return buf.getvalue()


def execute(plan: RoutePlan, instance: DeliveryInstance, demands: Isc3Demands,
            models: PhysicsModels | None = None, cruise_speed: float = DEFAULT_CRUISE_SPEED_MPS,
            turnaround_s: float = DEFAULT_TURNAROUND_S) -> TelemetryLog:
    """Step 5: constant-speed straight-leg flight simulation of a feasible plan.

    Positions are sampled at the link sample step.  Battery is the per-trip
    budget minus the energy model applied to the distance flown and the
    deliveries made so far; it resets at each departure.  A trip aborts on a
    rate or battery shortfall (logged as an ``abort`` event, ending the
    mission), which a feasible plan never triggers.
    """
    models = models or PhysicsModels()
    if not cruise_speed > 0:
        raise ValueError("cruise_speed must be > 0")
    checker = FeasibilityChecker(instance, demands, models.link, models.energy, models.sensing)
    report = checker.check(plan)
    if not report.passed:
        failed = ", ".join(r.kind for r in report.records if not r.passed)
        raise InfeasiblePlanRejected(f"plan fails: {failed}")

    log_ = TelemetryLog()
    budget = demands.energy_budget_per_trip
    min_rate = demands.min_data_rate
    step = models.link.sample_step_km
    xy, D, ids = checker.xy, checker.D, checker.ids
    km_to_s = 1000.0 / cruise_speed
    clock = 0.0
    for k, trip in enumerate(plan.trips):
        if k > 0:
            clock += turnaround_s
        nodes = [0] + checker.indices(trip.stations) + [0]
        depot_rate = float(checker.rates_at(xy[:1])[0])
        log_.events.append(TelemetryEvent(clock, float(xy[0, 0]), float(xy[0, 1]), budget, depot_rate, "depart", k))
        flown, delivered = 0.0, 0
        aborted = False
        for a, b in zip(nodes, nodes[1:]):
            offsets, points = leg_samples(xy[a], xy[b], step)
            rates = checker.rates_at(points)
            leg_start = clock
            if rates[0] < min_rate:
                log_.events.append(TelemetryEvent(leg_start, float(points[0, 0]), float(points[0, 1]),
                                                  budget - trip_energy(flown, delivered, models.energy),
                                                  float(rates[0]), "abort", k))
                aborted = True
                break
            for off, p, r in zip(offsets[1:-1], points[1:-1], rates[1:-1]):
                battery = budget - trip_energy(flown + float(off), delivered, models.energy)
                event = TelemetryEvent(leg_start + float(off) * km_to_s, float(p[0]), float(p[1]), battery,
                                       float(r), "waypoint", k)
                if r < min_rate or battery < 0:
                    log_.events.append(replace(event, kind="abort"))
                    aborted = True
                    break
                log_.events.append(event)
            if aborted:
                break
            clock = leg_start + float(offsets[-1]) * km_to_s
            flown += D[a][b]
            if b != 0:
                delivered += 1
            battery = budget - trip_energy(flown, delivered, models.energy)
            kind = "deliver" if b != 0 else "return"
            event = TelemetryEvent(clock, float(xy[b, 0]), float(xy[b, 1]), battery, float(rates[-1]), kind, k,
                                   ids[b] if b != 0 else None)
            if rates[-1] < min_rate or battery < 0:
                log_.events.append(replace(event, kind="abort"))
                aborted = True
                break
            log_.events.append(event)
        if aborted:
            log.error("trip %d aborted; mission stopped", k)
            break
    return log_


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class PipelineReport:
    steps: list[dict[str, Any]] = field(default_factory=list)
    demands: Isc3Demands | None = None
    scene: dict[str, Any] | None = None
    task: TaskSpec | None = None
    decision: Decision | None = None
    telemetry: TelemetryLog | None = None
    error: dict[str, Any] | None = None

    @property
    def completed(self) -> bool:
        return self.error is None and len(self.steps) == len(STEP_NAMES)

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        steps = [dict(s) for s in self.steps]
        if not include_timing:
            for s in steps:
                s.pop("elapsed_s", None)
        scene = dict(self.scene) if self.scene else None
        if scene and not include_timing:
            scene.pop("ingested_at", None)
        out: dict[str, Any] = {
            "steps": steps,
            "demands": self.demands.to_dict() if self.demands else None,
            "scene": scene,
            "task": self.task.to_dict() if self.task else None,
            "decision": None,
            "feasibility": None,
            "telemetry": self.telemetry.to_dict() if self.telemetry else None,
            "error": self.error,
        }
        if self.decision is not None:
            out["decision"] = {
                "transport": self.decision.transport,
                "notice": self.decision.notice,
                "result": self.decision.result.to_dict(include_wall_time=include_timing),
            }
            out["feasibility"] = self.decision.result.feasibility.to_dict()
        return out


def _agent_for(cfg: RunConfig) -> DecisionAgent:
    budget = cfg.solver.get("eval_budget", 20_000)
    if cfg.agent == "external":
        return ExternalAgent(cfg.agent_address, seed=cfg.seed, eval_budget=budget)
    return RuleBasedAgent(seed=cfg.seed, eval_budget=budget, edge_address=cfg.edge)


def _apply_overrides(task: TaskSpec, cfg: RunConfig) -> TaskSpec:
    if not cfg.solver:
        return task
    merged = task.solver.full_dict()
    for key, value in cfg.solver.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return replace(task, solver=SolverConfig.from_dict(merged))


def run_pipeline(config: str | Path | RunConfig) -> PipelineReport:
    """Run Steps 1-5 in order; the report stops at the first failing step."""
    report = PipelineReport()
    cfg: RunConfig | None = config if isinstance(config, RunConfig) else None
    scene: ScenePackage | None = None

    def step(index: int, fn):
        name = STEP_NAMES[index]
        start = time.perf_counter()
        try:
            value = fn()
        except (Isc3Error, OSError, ValueError) as exc:
            report.steps.append({"step": index + 1, "name": name, "status": "failed",
                                 "elapsed_s": time.perf_counter() - start})
            report.error = {"step": index + 1, "name": name, "type": type(exc).__name__, "message": str(exc)}
            return None, False
        report.steps.append({"step": index + 1, "name": name, "status": "ok",
                             "elapsed_s": time.perf_counter() - start})
        return value, True

    def step_demands():
        nonlocal cfg
        if cfg is None:
            cfg = RunConfig.load(config)
        return cfg.demands

    report.demands, ok = step(0, step_demands)
    if not ok:
        return report

    def step_cognition():
        task = cognize(report.demands, preview_scene(cfg.scene_path), _agent_for(cfg))
        return _apply_overrides(task, cfg)

    report.task, ok = step(1, step_cognition)
    if not ok:
        return report

    scene, ok = step(2, lambda: ingest(cfg.scene_path))
    if not ok:
        return report
    report.scene = {**scene.summary(), "sources": list(scene.sources), "ingested_at": scene.ingested_at}

    report.decision, ok = step(3, lambda: decide(report.task, scene, cfg.models, cfg.fallback))
    if not ok:
        return report

    report.telemetry, ok = step(4, lambda: execute(report.decision.result.best_plan, scene.instance,
                                                   report.task.demands, cfg.models, cfg.cruise_speed_mps,
                                                   cfg.turnaround_s))
    return report
