"""Memoryless product sources and the blocklength-n rate sandwich."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy import sparse

from .dball import LOG2E, greedy_cover
from .model import (
    TAU_DIST,
    Feasibility,
    FiniteSource,
    Instance,
    check_feasible,
)

DEFAULT_BUDGET = 2 ** 14
MAX_BALL_PAIRS = 60_000_000


class BudgetExceeded(RuntimeError):
    pass


def alphabet_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    return int(os.environ.get("LOSSY_BUDGET", DEFAULT_BUDGET))


def _product_labels(symbols, n: int) -> tuple[str, ...]:
    sep = "" if all(len(s) == 1 for s in symbols) else "|"
    labels = [""]
    for _ in range(n):
        labels = [a + (sep if a and sep else "") + s for a in labels for s in symbols]
    return tuple(labels)


def _digits(indices, base: int, n: int) -> np.ndarray:
    """Row k holds the k-th symbol (most significant first) of each index."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty((n,) + idx.shape, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        out[k] = idx % base
        idx = idx // base
    return out


@dataclass(frozen=True)
class ProductDistortion:
    """Additive block distortion d_n(x^n, y^n) = sum_k d(x_k, y_k) at level n*D.

    Distances are computed on demand; only the sparse ball-membership matrix
    is materialized.
    """

    base: np.ndarray
    n: int
    level: float
    y_symbols: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        nx, ny = self.base.shape
        return nx ** self.n, ny ** self.n

    @property
    def threshold(self) -> float:
        return self.level + TAU_DIST * max(1.0, self.level)

    def distance(self, xs, ys) -> np.ndarray:
        nx, ny = self.base.shape
        xd = _digits(xs, nx, self.n)
        yd = _digits(ys, ny, self.n)
        return self.base[xd, yd].sum(axis=0)

    def membership(self) -> sparse.csr_matrix:
        """Pairs within the block level, grown one position at a time.

        A prefix pair is dropped as soon as its running distortion exceeds the
        level, which is valid because per-letter distortions are non-negative.
        """
        nx, ny = self.base.shape
        thr = self.threshold
        xi = np.zeros(1, dtype=np.int64)
        yi = np.zeros(1, dtype=np.int64)
        part = np.zeros(1)
        a, b = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        a, b, step = a.ravel(), b.ravel(), self.base.ravel()
        for _ in range(self.n):
            new = part[:, None] + step[None, :]
            keep = new <= thr
            if keep.sum() > MAX_BALL_PAIRS:
                raise BudgetExceeded(f"distortion balls hold more than {MAX_BALL_PAIRS} pairs")
            rows, cols = np.nonzero(keep)
            xi = xi[rows] * nx + a[cols]
            yi = yi[rows] * ny + b[cols]
            part = new[rows, cols]
        data = np.ones(len(xi), dtype=bool)
        return sparse.csr_matrix((data, (xi, yi)), shape=self.shape)

    @property
    def matrix(self) -> np.ndarray:
        nx, ny = self.shape
        return self.distance(np.arange(nx)[:, None], np.arange(ny)[None, :])

    def max_value(self) -> float:
        return self.n * float(self.base.max())

    def to_json_fields(self) -> dict:
        return {
            "y_symbols": list(self.y_symbols),
            "distortion": {"base": self.base.tolist(), "n": self.n},
            "D": self.level,
        }


@dataclass(frozen=True)
class ProductInstance:
    base: Instance
    n: int
    expanded: Instance


def expand(base: Instance, n: int, budget: int | None = None) -> ProductInstance:
    """The n-fold memoryless extension, lexicographic in base-symbol indices."""
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    limit = alphabet_budget(budget)
    nx, ny = base.distortion.shape
    if nx ** n > limit or ny ** n > limit:
        raise BudgetExceeded(
            f"|X|^n = {nx ** n}, |Y|^n = {ny ** n} exceed the alphabet budget {limit}"
        )
    p = base.probs
    law = reduce(lambda acc, _: np.multiply.outer(acc, p).ravel(), range(n - 1), p)
    if not base.exact:
        law = law.astype(np.float64)
    source = FiniteSource(_product_labels(base.source.symbols, n), law)
    spec = ProductDistortion(base.distortion.matrix, n, n * base.level,
                             _product_labels(base.distortion.y_symbols, n))
    return ProductInstance(base, n, Instance(source, spec, base.epsilon, base.delta))


def g_rate(base: Instance, n: int, budget: int | None = None) -> float:
    """G(X^n) / n in bits per source symbol (``inf`` when infeasible)."""
    inst = expand(base, n, budget).expanded
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        return math.inf
    return greedy_cover(inst).g_bits / n


@dataclass(frozen=True)
class Sandwich:
    n: int
    g_bits: float
    lower: float
    upper_stochastic: float
    upper_deterministic: float
    i_star: int
    k_star: int
    wall_time_ms: float

    def row(self) -> list:
        return [self.n, self.g_bits, self.lower, self.upper_stochastic,
                self.upper_deterministic, self.i_star, self.k_star, self.wall_time_ms]


SWEEP_COLUMNS = ["n", "G_bits", "lower", "upper_stochastic", "upper_deterministic",
                 "i_star", "k_star", "wall_time_ms"]


def sandwich(base: Instance, n: int, budget: int | None = None) -> Sandwich:
    """Bounds on the optimal blocklength-n rate, in bits per symbol.

    lower < R*(n) <= upper_stochastic and R~(n) <= upper_deterministic.
    """
    t0 = time.perf_counter()
    inst = expand(base, n, budget).expanded
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        inf = math.inf
        return Sandwich(n, inf, inf, inf, inf, 0, 0, 0.0)
    cover = greedy_cover(inst)
    g = cover.g_bits
    ms = (time.perf_counter() - t0) * 1e3
    return Sandwich(
        n, g,
        (g - 1) / n,
        (cover.i_star.bit_length() - 1) / n,
        math.floor(g + 2 * LOG2E / 2 ** g) / n,
        cover.i_star, cover.k_star, ms,
    )


def sweep(base: Instance, max_n: int, budget: int | None = None,
          workers: int | None = None) -> list[Sandwich]:
    """Sandwich for n = 1..max_n, computed in parallel, returned in order of n."""
    ns = range(1, max_n + 1)
    with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
        return list(pool.map(lambda n: sandwich(base, n, budget), ns))
