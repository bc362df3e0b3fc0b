"""The four seeded, budgeted metaheuristics behind one ``solve`` entry point."""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..constraints import PhysicsModels
from ..errors import Isc3Error, NoFeasibleFound
from ..instance import DeliveryInstance, Isc3Demands
from ..routing import RoutingProblem
from . import aco, ga, pso, sa
from .base import (
    ALGORITHMS,
    ACOParams,
    BudgetExhausted,
    Evaluator,
    GAParams,
    PSOParams,
    SAParams,
    SolverConfig,
    SolverResult,
    penalty_weights_from_dict,
)

log = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS", "ACOParams", "ComparisonRow", "Evaluator", "GAParams", "PSOParams", "SAParams",
    "SolverConfig", "SolverResult", "compare", "default_configs", "penalty_weights_from_dict", "solve",
]


def _search(evaluate: Evaluator, cfg: SolverConfig) -> None:
    n = evaluate.problem.n
    if n == 1:
        evaluate((1,))
        return
    if cfg.algorithm == "sa":
        sa.run(evaluate, n, random.Random(cfg.seed), cfg.sa)
    elif cfg.algorithm == "ga":
        ga.run(evaluate, n, random.Random(cfg.seed), cfg.ga)
    elif cfg.algorithm == "aco":
        aco.run(evaluate, n, random.Random(cfg.seed), cfg.aco)
    else:
        pso.run(evaluate, n, np.random.default_rng(cfg.seed), cfg.pso)


def solve(instance: DeliveryInstance, demands: Isc3Demands, models: PhysicsModels | None,
          cfg: SolverConfig) -> SolverResult:
    """Run one configured solver.

    Returns the best penalty-free plan found.  If the budget runs out with
    only penalised plans, raises NoFeasibleFound carrying the least-penalised
    result.  Identical inputs (seed included) give identical results; only
    ``wall_time`` varies, unless ``time_limit`` cuts the run short.
    """
    models = models or PhysicsModels()
    problem = RoutingProblem(instance, demands, models, cfg.penalty_weights)
    evaluate = Evaluator(problem, cfg.eval_budget, cfg.time_limit)
    start = time.perf_counter()
    try:
        _search(evaluate, cfg)
    except BudgetExhausted:
        pass
    wall = time.perf_counter() - start

    tour = evaluate.best_feasible_tour or evaluate.best_tour
    plan = problem.plan_for(tour)
    objective = problem.objective_of(plan)
    result = SolverResult(
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        best_plan=plan,
        best_objective=objective,
        evaluations_used=evaluate.used,
        wall_time=wall,
        convergence_trace=list(evaluate.trace),
        config=cfg.to_dict(),
        feasibility=problem.report(plan),
    )
    log.info("%s seed=%d: %.6f km, penalty %.6g, %d evals, %.3f s", cfg.algorithm, cfg.seed,
             objective.total_length, objective.penalty, evaluate.used, wall)
    if not objective.feasible:
        raise NoFeasibleFound(result)
    return result


def default_configs(seed: int = 0, eval_budget: int = 20_000) -> list[SolverConfig]:
    """One default configuration per algorithm, in the benchmark's row order."""
    return [SolverConfig(alg, seed=seed, eval_budget=eval_budget) for alg in ALGORITHMS]


@dataclass
class ComparisonRow:
    algorithm: str
    total_length_km: float
    feasible: bool
    evaluations: int
    wall_time_s: float
    seed: int
    result: SolverResult | None = None
    error: str | None = None


def compare(instance: DeliveryInstance, demands: Isc3Demands, models: PhysicsModels | None,
            configs: Sequence[SolverConfig]) -> list[ComparisonRow]:
    """Solve once per config; a failing row records its error instead of aborting the table."""
    if not configs:
        raise ValueError("compare needs at least one config")
    rows = []
    for cfg in configs:
        try:
            res = solve(instance, demands, models, cfg)
        except NoFeasibleFound as exc:
            res = exc.result
            rows.append(ComparisonRow(cfg.algorithm, res.best_objective.total_length, False,
                                      res.evaluations_used, res.wall_time, cfg.seed, res, str(exc)))
            continue
        except Isc3Error as exc:
            rows.append(ComparisonRow(cfg.algorithm, math.nan, False, 0, 0.0, cfg.seed, None, str(exc)))
            continue
        rows.append(ComparisonRow(cfg.algorithm, res.best_objective.total_length, True, res.evaluations_used,
                                  res.wall_time, cfg.seed, res))
    return rows
