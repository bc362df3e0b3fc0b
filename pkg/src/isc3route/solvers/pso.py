"""Random-key particle swarm with periodic 2-opt polishing of the global best."""

from __future__ import annotations

import numpy as np

from ..routing import TWO_OPT, Move, apply_move
from .base import Evaluator, PSOParams


def decode(keys: np.ndarray) -> tuple[int, ...]:
    """Station order = ascending key order (stable), as 1-based matrix indices."""
    return tuple(int(k) + 1 for k in np.argsort(keys, kind="stable"))


def encode(tour: tuple[int, ...], keys: np.ndarray) -> np.ndarray:
    """Reassign the existing key values so that they decode to ``tour``."""
    out = np.empty_like(keys)
    out[np.asarray(tour) - 1] = np.sort(keys, kind="stable")
    return out


def two_opt(evaluate: Evaluator, tour: tuple[int, ...], value: float) -> tuple[tuple[int, ...], float]:
    """First-improvement 2-opt sweeps until a full sweep finds nothing."""
    n = len(tour)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                cand = apply_move(tour, Move(TWO_OPT, i, j))
                f = evaluate(cand)
                if f < value:
                    tour, value, improved = cand, f, True
    return tour, value


def run(evaluate: Evaluator, n: int, rng: np.random.Generator, params: PSOParams) -> None:
    s = params.swarm
    x = rng.random((s, n))
    v = rng.uniform(-0.1, 0.1, (s, n))
    pbest = x.copy()
    pbest_f = np.array([evaluate(decode(row)) for row in x])
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])

    iteration = 0
    while True:
        iteration += 1
        r1, r2 = rng.random((s, n)), rng.random((s, n))
        v = params.inertia * v + params.c1 * r1 * (pbest - x) + params.c2 * r2 * (gbest[None, :] - x)
        x = x + v
        for k in range(s):
            f = evaluate(decode(x[k]))
            if f < pbest_f[k]:
                pbest_f[k] = f
                pbest[k] = x[k]
                if f < gbest_f:
                    gbest_f, gbest = f, x[k].copy()
        if iteration % params.local_search_every == 0:
            tour, f = two_opt(evaluate, decode(gbest), gbest_f)
            if f < gbest_f:
                gbest, gbest_f = encode(tour, gbest), f
