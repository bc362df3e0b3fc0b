"""Max-min style ant colony over directed depot/station arcs."""

from __future__ import annotations

import random
from bisect import bisect_right
from itertools import accumulate

import numpy as np

from .base import ACOParams, Evaluator


def _nearest_neighbour_length(D: list[list[float]], n: int) -> float:
    left = set(range(1, n + 1))
    cur, total = 0, 0.0
    while left:
        nxt = min(left, key=lambda v: (D[cur][v], v))
        total += D[cur][nxt]
        left.remove(nxt)
        cur = nxt
    return total + D[cur][0]


def run(evaluate: Evaluator, n: int, rng: random.Random, params: ACOParams) -> None:
    D = evaluate.problem.D
    dist = np.array(D)
    off_diag = dist[~np.eye(n + 1, dtype=bool)]
    q = float(off_diag.mean()) if off_diag.size else 1.0
    if q <= 0:
        q = 1.0
    eta = 1.0 / np.maximum(dist, 1e-9)
    np.fill_diagonal(eta, 0.0)
    eta_beta = eta ** params.beta

    nn = _nearest_neighbour_length(D, n)
    tau0 = q / (params.evaporation * nn) if nn > 0 else 1.0
    tau_min, tau_max = params.tau_min_factor * tau0, params.tau_max_factor * tau0
    tau = np.full((n + 1, n + 1), tau0)

    best_tour, best_value = None, float("inf")
    while True:
        weights = ((tau ** params.alpha) * eta_beta).tolist()
        for _ in range(params.ants):
            remaining = list(range(1, n + 1))
            cur, tour = 0, []
            while remaining:
                row = weights[cur]
                cum = list(accumulate([row[v] for v in remaining]))
                total = cum[-1]
                if total > 0:
                    # first k with cum[k] > r
                    pick = min(bisect_right(cum, rng.random() * total), len(remaining) - 1)
                else:
                    pick = rng.randrange(len(remaining))
                cur = remaining.pop(pick)
                tour.append(cur)
            tour = tuple(tour)
            value = evaluate(tour)
            if value < best_value:
                best_tour, best_value = tour, value
        tau *= 1.0 - params.evaporation
        deposit = q / best_value if best_value > 0 else q
        prev = 0
        for v in best_tour + (0,):
            tau[prev, v] += deposit
            prev = v
        np.clip(tau, tau_min, tau_max, out=tau)
