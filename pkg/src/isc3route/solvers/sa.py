"""Simulated annealing over giant tours with a self-calibrating start temperature."""

from __future__ import annotations

import math
import random
import statistics

from ..routing import RELOCATE, SWAP, TWO_OPT, Move, apply_move
from .base import Evaluator, SAParams

NEIGHBOURHOOD = (TWO_OPT, RELOCATE, SWAP)


def random_move(rng: random.Random, n: int) -> Move:
    kind = NEIGHBOURHOOD[rng.randrange(3)]
    i = rng.randrange(n)
    j = rng.randrange(n - 1)
    if j >= i:
        j += 1
    return Move(kind, i, j)


def run(evaluate: Evaluator, n: int, rng: random.Random, params: SAParams) -> None:
    current = list(range(1, n + 1))
    rng.shuffle(current)
    current = tuple(current)
    f_cur = evaluate(current)

    # median uphill delta from random probes sets T0 so it is accepted with p = initial_acceptance
    uphill = []
    for _ in range(params.probes):
        delta = evaluate(apply_move(current, random_move(rng, n))) - f_cur
        if delta > 0:
            uphill.append(delta)
    temperature = -statistics.median(uphill) / math.log(params.initial_acceptance) if uphill else 1.0

    epoch = params.epoch_factor * n
    while True:
        for _ in range(epoch):
            cand = apply_move(current, random_move(rng, n))
            f_cand = evaluate(cand)
            delta = f_cand - f_cur
            if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                current, f_cur = cand, f_cand
        temperature = max(temperature * params.cooling, 1e-300)
