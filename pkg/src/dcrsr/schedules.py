"""Learning-rate schedules: cosine annealing with warm restarts, step decay,
and a flat warm-up multiplier. All pure functions of the iteration index."""

from __future__ import annotations

import math


def sgdr_lr(
    iteration: int,
    eta_max: float,
    eta_min: float,
    cycle0: int,
    t_mult: int = 2,
) -> float:
    """Cosine annealing with warm restarts.

    Within a cycle of length T, lr = eta_min + (eta_max - eta_min) *
    (1 + cos(pi * t / T)) / 2; the cycle length multiplies by ``t_mult`` at
    each restart. Restart boundaries return ``eta_max`` exactly.
    """
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    if cycle0 < 1 or t_mult < 1:
        raise ValueError("cycle0 and t_mult must be >= 1")
    start, length = 0, cycle0
    while iteration >= start + length:
        start += length
        length *= t_mult
    t = iteration - start
    if t == 0:
        return eta_max
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(math.pi * t / length))


def step_decay_lr(iteration: int, base: float, ratio: float, every: int) -> float:
    """base * ratio ** floor(iteration / every)."""
    if every < 1:
        raise ValueError(f"every must be >= 1, got {every}")
    return base * ratio ** (iteration // every)


def warmup_multiplier(iteration: int, warmup_iters: int, multiplier: float) -> float:
    """``multiplier`` while iteration < warmup_iters, 1.0 from the boundary on.

    Composes multiplicatively with the phase schedule; warmup_iters = 0
    disables it.
    """
    return multiplier if iteration < warmup_iters else 1.0
