"""Greedy distortion-ball covering and the codes built on it.

The cover picks reproduction symbols one at a time, each time taking the
ball that adds the most not-yet-covered probability.  Three cut points on
the cumulative cell masses drive everything else:

* ``i_star``: first prefix reaching ``1 - eps - delta``; ``log2(i_star)`` is
  the rate quantity G returned by :func:`g_value`.
* ``k_star``: first prefix reaching ``1 - eps``; the code uses centers
  ``1..k_star``.
* ``j_star``: first prefix reaching ``1 - gamma - delta`` where ``gamma`` is
  the mass left uncovered by the first ``k_star`` cells.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import (
    Feasibility,
    InfeasibleError,
    Instance,
    check_feasible,
    index_to_word,
    tolerance,
    uncoverable_mass,
    word_length,
)

LOG2E = math.log2(math.e)


def distortion_ball(y: int, spec) -> frozenset[int]:
    """Source indices within distortion ``spec.level`` of reproduction ``y``."""
    if not 0 <= y < spec.shape[1]:
        raise IndexError(f"reproduction index {y} out of range")
    col = spec.membership()[:, y]
    return frozenset(int(x) for x in col.nonzero()[0])


@dataclass(frozen=True)
class GreedyCover:
    centers: tuple[int, ...]
    cells: tuple[tuple[int, ...], ...]
    cell_mass: tuple
    cum_mass: tuple  # cum_mass[i] = mass of cells 1..i; cum_mass[0] = 0
    i_star: int
    k_star: int
    j_star: int
    alpha: object
    beta: object
    gamma: object

    @property
    def g_bits(self) -> float:
        return math.log2(self.i_star)

    def summary(self) -> dict:
        return {
            "G_bits": self.g_bits,
            "i_star": self.i_star,
            "k_star": self.k_star,
            "j_star": self.j_star,
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "gamma": float(self.gamma),
            "centers": list(self.centers),
            "cell_mass": [float(m) for m in self.cell_mass],
        }


def _first_reaching(cum, target, tau) -> int:
    for i in range(1, len(cum)):
        if cum[i] >= target - tau:
            return i
    raise AssertionError("cumulative mass never reaches the target")


def greedy_cover(inst: Instance) -> GreedyCover:
    """Greedy ball cover of ``inst``, stopped once mass ``1 - eps`` is covered.

    Ties in the argmax go to the smallest reproduction index (within the
    comparison tolerance in float mode).
    """
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        raise InfeasibleError(
            f"Pr{{min_y d(X,y) > D}} = {float(uncoverable_mass(inst)):.6g} exceeds "
            f"epsilon = {float(inst.epsilon):.6g}"
        )
    p = inst.probs
    exact = inst.exact
    tau = tolerance(p)
    eps, dlt = inst.epsilon, inst.delta
    member = inst.membership()            # csr, rows = x
    member_csc = member.tocsc()
    zero = 0 * p[0]

    if exact:
        residual = np.array([sum((p[x] for x in member_csc[:, y].indices), zero)
                             for y in range(member.shape[1])], dtype=object)
    else:
        residual = np.asarray(member.T @ p, dtype=np.float64).ravel()
    covered = np.zeros(len(p), dtype=bool)

    centers, cells, masses, cum = [], [], [], [zero]
    while cum[-1] < 1 - eps - tau:
        best = residual.max()
        if best <= tau:
            raise InfeasibleError("no ball adds positive mass before reaching 1 - epsilon")
        y = int(np.flatnonzero(residual >= best - tau)[0])
        col = member_csc[:, y].indices
        cell = col[~covered[col]]
        covered[cell] = True
        mass = p[cell].sum()
        centers.append(y)
        cells.append(tuple(int(x) for x in cell))
        masses.append(mass)
        cum.append(cum[-1] + mass)
        rows = member[cell]
        if exact:
            for x in cell:
                for yy in member.indices[member.indptr[x]:member.indptr[x + 1]]:
                    residual[yy] -= p[x]
        else:
            residual -= np.asarray(rows.T @ p[cell]).ravel()
            np.maximum(residual, 0.0, out=residual)
        residual[y] = zero

    k_star = len(centers)
    i_star = 1 if eps + dlt >= 1 else _first_reaching(cum, 1 - eps - dlt, tau)
    alpha = cum[k_star - 1]
    beta = 1 - eps - alpha
    gamma = 1 - cum[k_star]
    j_star = _first_reaching(cum, 1 - gamma - dlt, tau)

    cover = GreedyCover(tuple(centers), tuple(cells), tuple(masses), tuple(cum),
                        i_star, k_star, j_star, alpha, beta, gamma)
    _check_cover(cover, eps, tau)
    return cover


def _check_cover(c: GreedyCover, eps, tau) -> None:
    assert c.beta > 0, "beta must be positive"
    assert c.gamma <= eps + tau, "gamma exceeds epsilon"
    assert c.cell_mass[c.k_star - 1] >= c.beta - tau
    assert c.i_star <= c.k_star and c.i_star <= c.j_star
    assert min(c.j_star, c.k_star) <= c.i_star + 2, "min(j*, k*) <= i* + 2 violated"


def g_value(inst: Instance) -> float:
    """log2(i_star) in bits, or ``math.inf`` when the excess budget is unattainable."""
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        return math.inf
    return greedy_cover(inst).g_bits


def deterministic_rate_bound(g: float) -> int:
    """floor(G + 2 log2(e) / 2^G)."""
    return math.floor(g + 2 * LOG2E / 2 ** g)


# -- codes -------------------------------------------------------------------

@dataclass(frozen=True)
class CodeTable:
    """Encoder/decoder pair over codeword indices.

    ``encode[x]`` lists ``(index, probability)`` options for source index x;
    ``decode[i - 1]`` is the reproduction index for codeword index i.
    """

    kind: str
    encode: tuple[tuple[tuple[int, object], ...], ...]
    decode: tuple[int, ...]
    rate: float

    def __post_init__(self):
        if self.kind not in ("stochastic", "deterministic"):
            raise ValueError(f"unknown code kind {self.kind!r}")
        for opts in self.encode:
            for idx, _ in opts:
                if not 1 <= idx <= len(self.decode):
                    raise ValueError(f"codeword index {idx} has no decoder entry")
        if self.kind == "deterministic" and any(len(o) != 1 for o in self.encode):
            raise ValueError("a deterministic encoder must be single-valued")

    def to_json(self, inst: Instance | None = None) -> dict:
        xs = inst.source.symbols if inst is not None else None
        ys = inst.distortion.y_symbols if inst is not None else None
        enc = []
        for x, opts in enumerate(self.encode):
            for idx, prob in opts:
                enc.append({
                    "x": xs[x] if xs else x,
                    "index": idx,
                    "word": index_to_word(idx),
                    "prob": _fmt(prob),
                })
        return {
            "kind": self.kind,
            "decode": [ys[y] if ys else y for y in self.decode],
            "encode": enc,
            "rate": self.rate,
        }

    def dumps(self, inst: Instance | None = None) -> str:
        return json.dumps(self.to_json(inst), indent=2)

    @classmethod
    def from_json(cls, data: dict, inst: Instance | None = None) -> "CodeTable":
        xs = {s: i for i, s in enumerate(inst.source.symbols)} if inst else None
        ys = {s: i for i, s in enumerate(inst.distortion.y_symbols)} if inst else None
        decode = tuple(ys[str(y)] if ys else int(y) for y in data["decode"])
        n = len(xs) if xs else 1 + max(int(e["x"]) for e in data["encode"])
        opts: list[list] = [[] for _ in range(n)]
        for e in data["encode"]:
            x = xs[str(e["x"])] if xs else int(e["x"])
            prob = e["prob"]
            prob = Fraction(prob) if isinstance(prob, str) else float(prob)
            opts[x].append((int(e["index"]), prob))
        return cls(data["kind"], tuple(tuple(o) for o in opts), decode, float(data["rate"]))


def _fmt(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def _cell_index(cover: GreedyCover, size: int) -> np.ndarray:
    where = np.zeros(size, dtype=np.int64)  # 0 = not in any of cells 1..k*
    for i, cell in enumerate(cover.cells, start=1):
        where[list(cell)] = i
    return where


def build_stochastic_code(inst: Instance, cover: GreedyCover | None = None) -> CodeTable:
    cover = cover or greedy_cover(inst)
    k = cover.k_star
    one = 1 + 0 * inst.probs[0]
    keep = cover.beta / cover.cell_mass[k - 1]
    if keep > one:  # float dust only; the cell always holds at least beta
        keep = one
    where = _cell_index(cover, len(inst.probs))
    encode = []
    for cell in where:
        if cell == 0:
            encode.append(((1, one),))
        elif cell < k:
            encode.append(((int(cell), one),))
        elif k == 1 or keep == one:
            encode.append(((k, one),))
        else:
            encode.append(((k, keep), (1, one - keep)))
    return CodeTable("stochastic", tuple(encode), cover.centers,
                     float(word_length(cover.i_star)))


def build_deterministic_code(inst: Instance, cover: GreedyCover | None = None) -> CodeTable:
    cover = cover or greedy_cover(inst)
    one = 1 + 0 * inst.probs[0]
    where = _cell_index(cover, len(inst.probs))
    encode = tuple(((int(c) if c else 1, one),) for c in where)
    rate = word_length(min(cover.j_star, cover.k_star))
    return CodeTable("deterministic", encode, cover.centers, float(rate))
