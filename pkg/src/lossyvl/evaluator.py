"""Exact and sampled performance of codes, plus randomized audits."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dball import CodeTable, build_stochastic_code, g_value, greedy_cover
from .model import (
    TAU_MASS,
    Feasibility,
    InfeasibleError,
    Instance,
    check_feasible,
    word_length,
)
from .smooth_entropy import majorizes


@dataclass(frozen=True)
class CodeReport:
    excess_prob: object
    length_pmf: dict  # codeword length -> probability
    output_law: np.ndarray  # over Y
    rate: float
    epsilon: object
    delta: object
    exact: bool = False

    def overflow_prob(self, R: float):
        """Pr{ l(f(X)) > R }."""
        zero = 0 * self.excess_prob
        return sum((q for ell, q in self.length_pmf.items() if ell > R), zero)

    def is_code_at(self, R: float, epsilon=None, delta=None) -> bool:
        eps = self.epsilon if epsilon is None else epsilon
        dlt = self.delta if delta is None else delta
        tau = 0 if self.exact else TAU_MASS
        return self.excess_prob <= eps + tau and self.overflow_prob(R) <= dlt + tau

    @property
    def is_code(self) -> bool:
        return self.is_code_at(self.rate)

    def to_json(self) -> dict:
        return {
            "excess_prob": float(self.excess_prob),
            "overflow_prob": float(self.overflow_prob(self.rate)),
            "rate": self.rate,
            "length_pmf": {str(k): float(v) for k, v in sorted(self.length_pmf.items())},
            "output_law": [float(v) for v in self.output_law],
            "epsilon": float(self.epsilon),
            "delta": float(self.delta),
            "is_code": self.is_code,
        }


def _check_dims(inst: Instance, code: CodeTable) -> None:
    nx, ny = inst.distortion.shape
    if len(code.encode) != nx:
        raise ValueError(f"encoder covers {len(code.encode)} source symbols, instance has {nx}")
    if any(not 0 <= y < ny for y in code.decode):
        raise ValueError("decoder emits a reproduction index outside the alphabet")


def evaluate_code(inst: Instance, code: CodeTable) -> CodeReport:
    """Exact excess/overflow probabilities and output law by summation over X."""
    _check_dims(inst, code)
    p = inst.probs
    zero = 0 * p[0]
    thr = inst.distortion.threshold
    xs, idx, w = [], [], []
    for x, opts in enumerate(code.encode):
        for i, q in opts:
            xs.append(x)
            idx.append(i)
            w.append(p[x] * q)
    ys = np.asarray(code.decode)[np.asarray(idx) - 1]
    dist = inst.distortion.distance(np.asarray(xs), ys)
    excess = sum((wk for wk, dk in zip(w, dist) if dk > thr), zero)
    lengths: dict = {}
    law = np.array([zero] * inst.distortion.shape[1], dtype=p.dtype)
    for i, y, wk in zip(idx, ys, w):
        ell = word_length(i)
        lengths[ell] = lengths.get(ell, zero) + wk
        law[y] += wk
    return CodeReport(excess, lengths, law, code.rate, inst.epsilon, inst.delta, inst.exact)


def canonicalize(code: CodeTable) -> CodeTable:
    """Make the decoder injective on the codewords actually emitted.

    All codewords decoding to the same reproduction are re-pointed to the
    shortest of them; lengths only shrink and reproductions are unchanged.
    """
    used = sorted({i for opts in code.encode for i, _ in opts})
    shortest: dict[int, int] = {}
    for i in used:  # ascending index = non-decreasing length
        shortest.setdefault(code.decode[i - 1], i)
    encode = []
    for opts in code.encode:
        merged: dict[int, object] = {}
        for i, q in opts:
            j = shortest[code.decode[i - 1]]
            merged[j] = merged.get(j, 0 * q) + q
        encode.append(tuple(merged.items()))
    kind = code.kind if code.kind == "stochastic" else "deterministic"
    return CodeTable(kind, tuple(encode), code.decode, code.rate)


def converse_audit(inst: Instance, code: CodeTable, R: float) -> bool:
    """Check the converse ``R > G - 1`` for a code that meets (D, R, eps, delta)."""
    code = canonicalize(code)
    report = evaluate_code(inst, code)
    if not report.is_code_at(R):
        raise ValueError("code does not meet the (D, R, epsilon, delta) constraints")
    return R > g_value(inst) - 1


def tightest_rate(report: CodeReport, delta=None) -> int:
    """Smallest integer R with overflow(R) <= delta."""
    dlt = report.delta if delta is None else delta
    tau = 0 if report.exact else TAU_MASS
    R = 0
    while report.overflow_prob(R) > dlt + tau:
        R += 1
    return R


def random_code(inst: Instance, rng: np.random.Generator, max_index: int = 31) -> CodeTable:
    """Random deterministic encoder with indices <= max_index and a random decoder.

    The decoder is biased toward D-respecting reproductions so a useful share
    of draws are valid codes.
    """
    nx, ny = inst.distortion.shape
    n_words = int(rng.integers(1, max_index + 1))
    decode = rng.integers(0, ny, size=n_words)
    member = inst.membership().toarray()
    one = 1 + 0 * inst.probs[0]
    encode = []
    for x in range(nx):
        ok = np.flatnonzero(member[x, decode])
        if ok.size and rng.random() < 0.9:
            i = int(rng.choice(ok)) + 1
        else:
            i = int(rng.integers(1, n_words + 1))
        encode.append(((i, one),))
    return CodeTable("deterministic", tuple(encode), tuple(int(y) for y in decode), 0.0)


# -- feasible conditionals and majorization ----------------------------------

def sample_feasible_conditional(inst: Instance, rng) -> np.ndarray:
    """Random P_{Y|X} (rows = x) with Pr{d(X, Y) > D} <= eps.

    A D-respecting deterministic map is mixed with Dirichlet noise; the
    violating mass on coverable rows is then scaled down (and handed to the
    row's D-respecting entries) until the budget holds.  Not uniform over the
    feasible polytope.
    """
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        raise InfeasibleError("no conditional meets the excess-distortion budget")
    rng = np.random.default_rng(rng)
    p = np.asarray(inst.probs, dtype=np.float64)
    eps = float(inst.epsilon)
    good = inst.membership().toarray()
    nx, ny = good.shape
    cov_rows = good.any(axis=1)

    base = np.zeros((nx, ny))
    for x in range(nx):
        choices = np.flatnonzero(good[x]) if cov_rows[x] else np.arange(ny)
        base[x, rng.choice(choices)] = 1.0
    mix = rng.uniform(0, 1) ** 3  # mostly near-deterministic draws
    noise = rng.dirichlet(np.full(ny, rng.choice([0.1, 0.5, 1.0])), size=nx)
    cond = (1 - mix) * base + mix * noise

    bad = np.where(good, 0.0, cond)
    fixed = float(p[~cov_rows].sum())  # rows with no D-respecting output
    movable = float(p[cov_rows] @ bad[cov_rows].sum(axis=1))
    budget = max(eps - fixed, 0.0) * rng.uniform(0.5, 1.0)
    if movable > budget:
        scale = budget / movable
        for x in np.flatnonzero(cov_rows):
            freed = bad[x].sum() * (1 - scale)
            cond[x, ~good[x]] *= scale
            ok = cond[x, good[x]]
            cond[x, good[x]] = ok + freed * (ok / ok.sum() if ok.sum() > 0 else 1 / ok.size)
    cond /= cond.sum(axis=1, keepdims=True)
    return cond


def excess_of_conditional(inst: Instance, cond: np.ndarray) -> float:
    p = np.asarray(inst.probs, dtype=np.float64)
    bad = ~inst.membership().toarray()
    return float(p @ np.where(bad, cond, 0.0).sum(axis=1))


def induced_law(inst: Instance, cond: np.ndarray) -> np.ndarray:
    return np.asarray(inst.probs, dtype=np.float64) @ cond


@dataclass
class MajorizationResult:
    passed: bool
    trials: int
    failures: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def majorization_audit(inst: Instance, trials: int, seed=0) -> MajorizationResult:
    """Does the constructed code's output law majorize sampled feasible laws?"""
    code = build_stochastic_code(inst)
    target = np.asarray(evaluate_code(inst, code).output_law, dtype=np.float64)
    failures = []
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        cond = sample_feasible_conditional(inst, np.random.default_rng(child))
        assert excess_of_conditional(inst, cond) <= float(inst.epsilon) + TAU_MASS
        law = induced_law(inst, cond)
        if not majorizes(target, law):
            failures.append((k, law))
    return MajorizationResult(not failures, trials, failures)


# -- Monte Carlo -------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalReport:
    samples: int
    excess_hat: float
    excess_se: float
    overflow_hat: float
    overflow_se: float
    rate: float
    seed: int

    def row(self) -> list:
        return [self.samples, self.excess_hat, self.excess_se,
                self.overflow_hat, self.overflow_se, self.seed]


CSV_COLUMNS = ["samples", "excess_hat", "excess_se", "overflow_hat", "overflow_se", "seed"]


def simulate(inst: Instance, code: CodeTable, samples: int, seed: int = 0,
             rate: float | None = None) -> EmpiricalReport:
    """Monte Carlo estimate of excess and overflow(rate) probabilities."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_dims(inst, code)
    R = code.rate if rate is None else rate
    rng = np.random.default_rng(seed)
    p = np.asarray(inst.probs, dtype=np.float64)
    nx = len(p)
    width = max(len(o) for o in code.encode)
    idx = np.ones((nx, width), dtype=np.int64)
    cdf = np.ones((nx, width))
    for x, opts in enumerate(code.encode):
        acc = 0.0
        for k, (i, q) in enumerate(opts):
            acc += float(q)
            idx[x, k] = i
            cdf[x, k] = acc
        cdf[x, len(opts) - 1:] = 1.0

    x = rng.choice(nx, size=samples, p=p / p.sum())
    u = rng.random(samples)
    pick = (u[:, None] >= cdf[x]).sum(axis=1)
    pick = np.minimum(pick, width - 1)
    i = idx[x, pick]
    y = np.asarray(code.decode)[i - 1]
    excess = inst.distortion.distance(x, y) > inst.distortion.threshold
    overflow = _lengths(i) > R
    e_hat, o_hat = excess.mean(), overflow.mean()
    return EmpiricalReport(
        samples,
        float(e_hat), math.sqrt(e_hat * (1 - e_hat) / samples),
        float(o_hat), math.sqrt(o_hat * (1 - o_hat) / samples),
        float(R), int(seed),
    )


def _lengths(indices: np.ndarray) -> np.ndarray:
    # floor(log2 i), exact: frexp gives i = m * 2**e with m in [0.5, 1)
    return np.frexp(indices.astype(np.float64))[1] - 1


def empirical_csv(reports: list[EmpiricalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r.row()])
    return buf.getvalue()


def constructed_reports(inst: Instance):
    """Cover plus exact reports for both constructed codes (convenience for audits)."""
    from .dball import build_deterministic_code

    cover = greedy_cover(inst)
    sto = build_stochastic_code(inst, cover)
    det = build_deterministic_code(inst, cover)
    return cover, (sto, evaluate_code(inst, sto)), (det, evaluate_code(inst, det))


__all__ = [
    "CodeReport", "EmpiricalReport", "MajorizationResult", "canonicalize",
    "constructed_reports", "converse_audit", "empirical_csv", "evaluate_code",
    "excess_of_conditional", "induced_law", "majorization_audit", "random_code",
    "sample_feasible_conditional", "simulate", "tightest_rate",
]
