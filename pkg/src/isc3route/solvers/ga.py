"""Permutation genetic algorithm: OX crossover, swap/inversion mutation, tournament selection."""

from __future__ import annotations

import random

from .base import Evaluator, GAParams


def order_crossover(p1: tuple, p2: tuple, rng: random.Random) -> tuple:
    """OX: keep p1[a..b], fill the rest in p2's order starting after b."""
    n = len(p1)
    a, b = sorted((rng.randrange(n), rng.randrange(n)))
    child = [None] * n
    child[a:b + 1] = p1[a:b + 1]
    kept = set(p1[a:b + 1])
    pos = (b + 1) % n
    for k in range(n):
        gene = p2[(b + 1 + k) % n]
        if gene not in kept:
            child[pos] = gene
            pos = (pos + 1) % n
    return tuple(child)


def mutate(tour: tuple, rng: random.Random) -> tuple:
    t = list(tour)
    i, j = sorted(rng.sample(range(len(t)), 2))
    if rng.random() < 0.5:
        t[i], t[j] = t[j], t[i]
    else:
        t[i:j + 1] = t[i:j + 1][::-1]
    return tuple(t)


def run(evaluate: Evaluator, n: int, rng: random.Random, params: GAParams) -> None:
    pop, fit = [], []
    for _ in range(params.population):
        t = list(range(1, n + 1))
        rng.shuffle(t)
        pop.append(tuple(t))
        fit.append(evaluate(pop[-1]))

    draw = rng.random
    size = params.population

    def tournament() -> tuple:
        # int(random() * size) is much cheaper than randrange in this hot loop
        best = int(draw() * size)
        for _ in range(params.tournament - 1):
            k = int(draw() * size)
            if fit[k] < fit[best]:
                best = k
        return pop[best]

    while True:
        ranked = sorted(range(len(pop)), key=lambda k: (fit[k], k))
        new_pop = [pop[k] for k in ranked[:params.elitism]]
        new_fit = [fit[k] for k in ranked[:params.elitism]]
        while len(new_pop) < params.population:
            p1, p2 = tournament(), tournament()
            child = order_crossover(p1, p2, rng) if rng.random() < params.crossover_rate else p1
            if rng.random() < params.mutation_rate:
                child = mutate(child, rng)
            new_pop.append(child)
            new_fit.append(evaluate(child))
        pop, fit = new_pop, new_fit
