"""Solver configuration, budgeted evaluation and the uniform result record."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping

from ..constraints import DEFAULT_PENALTY_WEIGHTS, CONSTRAINT_KINDS, FeasibilityReport
from ..errors import SchemaError, ValidationError
from ..instance import _expect_object, _reject_unknown
from ..plan import RoutePlan
from ..routing import Objective, RoutingProblem

ALGORITHMS = ("aco", "hybrid_pso", "sa", "ga")


@dataclass(frozen=True)
class GAParams:
    population: int = 100
    tournament: int = 5
    elitism: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1


@dataclass(frozen=True)
class SAParams:
    cooling: float = 0.95
    epoch_factor: int = 100
    probes: int = 100
    initial_acceptance: float = 0.8


@dataclass(frozen=True)
class ACOParams:
    ants: int = 25
    alpha: float = 1.0
    beta: float = 3.0
    evaporation: float = 0.5
    tau_min_factor: float = 0.01
    tau_max_factor: float = 10.0


@dataclass(frozen=True)
class PSOParams:
    swarm: int = 40
    inertia: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445
    local_search_every: int = 10


_PARAM_BLOCKS = {"ga": GAParams, "sa": SAParams, "aco": ACOParams, "pso": PSOParams}
_BLOCK_FOR = {"ga": "ga", "sa": "sa", "aco": "aco", "hybrid_pso": "pso"}


def _params_from_dict(block: str, data: Mapping[str, Any] | None):
    typ = _PARAM_BLOCKS[block]
    data = _expect_object(data or {}, block)
    names = {f.name: f.type for f in fields(typ)}
    _reject_unknown(data, block, set(names))
    kwargs = {}
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{block}.{k}", "expected a number")
        kwargs[k] = int(v) if names[k] in ("int", int) else float(v)
    return typ(**kwargs)


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    seed: int = 0
    eval_budget: int = 20_000
    time_limit: float | None = None
    ga: GAParams = field(default_factory=GAParams)
    sa: SAParams = field(default_factory=SAParams)
    aco: ACOParams = field(default_factory=ACOParams)
    pso: PSOParams = field(default_factory=PSOParams)
    penalty_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PENALTY_WEIGHTS))

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if isinstance(self.eval_budget, bool) or not isinstance(self.eval_budget, int) or self.eval_budget < 1:
            raise ValidationError(f"eval_budget must be an integer >= 1, got {self.eval_budget!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValidationError("time_limit must be > 0 when given")
        if any(w < 0 for w in self.penalty_weights.values()):
            raise ValidationError("penalty weights must be >= 0")

    @property
    def params(self):
        return getattr(self, _BLOCK_FOR[self.algorithm])

    def to_dict(self) -> dict[str, Any]:
        """Echo of the settings that influence the search (only the active parameter block)."""
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "eval_budget": self.eval_budget,
            "time_limit": self.time_limit,
            _BLOCK_FOR[self.algorithm]: asdict(self.params),
            "penalty_weights": {k: self.penalty_weights[k] for k in sorted(self.penalty_weights)},
        }

    def full_dict(self) -> dict[str, Any]:
        """Every setting including inactive parameter blocks; ``from_dict`` inverts it."""
        return {
            "algorithm": self.algorithm, "seed": self.seed, "eval_budget": self.eval_budget,
            "time_limit": self.time_limit, "ga": asdict(self.ga), "sa": asdict(self.sa), "aco": asdict(self.aco),
            "pso": asdict(self.pso), "penalty_weights": dict(self.penalty_weights),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SolverConfig":
        data = _expect_object(data, "config")
        _reject_unknown(data, "config", {"algorithm", "seed", "eval_budget", "time_limit", "ga", "sa", "aco",
                                         "pso", "penalty_weights"})
        if not isinstance(data.get("algorithm"), str):
            raise SchemaError("config.algorithm", "missing or not a string")
        kwargs: dict[str, Any] = {"algorithm": data["algorithm"]}
        for key in ("seed", "eval_budget"):
            if key in data:
                if isinstance(data[key], bool) or not isinstance(data[key], int):
                    raise SchemaError(f"config.{key}", "expected an integer")
                kwargs[key] = data[key]
        if data.get("time_limit") is not None:
            if isinstance(data["time_limit"], bool) or not isinstance(data["time_limit"], (int, float)):
                raise SchemaError("config.time_limit", "expected a number or null")
            kwargs["time_limit"] = float(data["time_limit"])
        for block in _PARAM_BLOCKS:
            if block in data:
                kwargs[block] = _params_from_dict(block, data[block])
        if "penalty_weights" in data:
            kwargs["penalty_weights"] = penalty_weights_from_dict(data["penalty_weights"])
        return cls(**kwargs)


def penalty_weights_from_dict(data: Any) -> dict[str, float]:
    data = _expect_object(data, "penalty_weights")
    _reject_unknown(data, "penalty_weights", set(CONSTRAINT_KINDS))
    out = dict(DEFAULT_PENALTY_WEIGHTS)
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"penalty_weights.{k}", "expected a number")
        out[k] = float(v)
    return out


@dataclass
class SolverResult:
    algorithm: str
    seed: int
    best_plan: RoutePlan
    best_objective: Objective
    evaluations_used: int
    wall_time: float
    convergence_trace: list[tuple[int, float]]
    config: dict[str, Any]
    feasibility: FeasibilityReport

    @property
    def feasible(self) -> bool:
        return self.best_objective.feasible

    def to_dict(self, include_wall_time: bool = True) -> dict[str, Any]:
        out = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "feasible": self.feasible,
            "best_objective": self.best_objective.to_dict(),
            "best_plan": self.best_plan.to_dict(),
            "evaluations_used": self.evaluations_used,
            "wall_time_s": self.wall_time,
            "convergence_trace": [[k, v] for k, v in self.convergence_trace],
            "config": self.config,
            "feasibility": self.feasibility.to_dict(),
        }
        if not include_wall_time:
            del out["wall_time_s"]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SolverResult":
        try:
            obj = data["best_objective"]
            return cls(
                algorithm=data["algorithm"],
                seed=data["seed"],
                best_plan=RoutePlan.from_dict(data["best_plan"]),
                best_objective=Objective(obj["total_length_km"], obj["penalty"]),
                evaluations_used=data["evaluations_used"],
                wall_time=data.get("wall_time_s", 0.0),
                convergence_trace=[(int(k), float(v)) for k, v in data["convergence_trace"]],
                config=data["config"],
                feasibility=FeasibilityReport.from_dict(data["feasibility"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError("result", f"malformed solver result: {exc!r}") from None


class BudgetExhausted(Exception):
    """Internal signal: the evaluation budget or time limit is used up."""


class Evaluator:
    """Budgeted, memoised objective over index tours.

    Every call counts against the budget, cached or not.  Tracks the lowest
    scalar seen (the convergence trace) and, separately, the lowest-scalar
    penalty-free tour, which is what the solver returns.
    """

    def __init__(self, problem: RoutingProblem, budget: int, time_limit: float | None = None):
        self.problem = problem
        self.budget = budget
        self.time_limit = time_limit
        self.used = 0
        self.cache: dict[tuple[int, ...], tuple[float, float]] = {}
        self.best_value = math.inf
        self.best_tour: tuple[int, ...] | None = None
        self.best_feasible_value = math.inf
        self.best_feasible_tour: tuple[int, ...] | None = None
        self.trace: list[tuple[int, float]] = []
        self._start = time.perf_counter()

    def __call__(self, tour: tuple[int, ...]) -> float:
        if self.used >= self.budget:
            raise BudgetExhausted
        if self.time_limit is not None and time.perf_counter() - self._start > self.time_limit:
            raise BudgetExhausted
        self.used += 1
        hit = self.cache.get(tour)
        if hit is None:
            hit = self.problem.evaluate_indices(tour)
            self.cache[tour] = hit
        length, pen = hit
        value = length + pen
        if value < self.best_value:
            self.best_value = value
            self.best_tour = tour
            self.trace.append((self.used, value))
        if pen == 0.0 and value < self.best_feasible_value:
            self.best_feasible_value = value
            self.best_feasible_tour = tour
        return value

    @property
    def remaining(self) -> int:
        return self.budget - self.used

