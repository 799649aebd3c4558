"""Seeded generators of small random instances for audits and tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .model import Feasibility, Instance, check_feasible, hamming, make_instance


def random_law(rng: np.random.Generator, size: int, exact: bool = True, max_weight: int = 20):
    """Law with rational masses w_i / sum(w), optionally returned as floats."""
    w = rng.integers(1, max_weight + 1, size=size)
    total = int(w.sum())
    law = [Fraction(int(v), total) for v in w]
    return law if exact else [float(v) for v in law]


def random_split(rng: np.random.Generator, grid: int = 200, total_below: int | None = None):
    """(epsilon, delta) on a rational grid with epsilon + delta < 1."""
    top = grid if total_below is None else total_below
    while True:
        a, b = (int(v) for v in rng.integers(0, top, size=2))
        if a + b < top:
            return Fraction(a, grid), Fraction(b, grid)


def random_instance(rng: np.random.Generator, *, max_x: int = 8, max_y: int = 8,
                    exact: bool = True, max_distortion: int = 5, coverable: bool = False,
                    split=None) -> Instance:
    """A feasible instance with integer distortions and a random level.

    With ``coverable=True`` every source symbol lies in some ball, so the
    instance stays feasible for every (epsilon, delta).
    """
    while True:
        nx = int(rng.integers(1, max_x + 1))
        ny = int(rng.integers(1, max_y + 1))
        d = rng.integers(0, max_distortion + 1, size=(nx, ny)).astype(float)
        level = float(rng.integers(0, 3))
        eps, dlt = split if split is not None else random_split(rng)
        inst = make_instance(random_law(rng, nx, exact), d, level,
                             eps if exact else float(eps), dlt if exact else float(dlt))
        if coverable and not np.all(d.min(axis=1) <= level):
            continue
        if check_feasible(inst) is Feasibility.FEASIBLE:
            return inst


def lossless_instance(rng: np.random.Generator, size: int, exact: bool = True, split=None):
    """X = Y with Hamming distortion at D = 0."""
    eps, dlt = split if split is not None else random_split(rng)
    return make_instance(random_law(rng, size, exact), hamming(size), 0.0, eps, dlt)
