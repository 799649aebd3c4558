"""Acceptance gate: one test (and one printed PASS/FAIL line) per criterion.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script with
``python3 tests/test_acceptance.py``.  Each criterion function returns
``(passed, detail)``; the tests assert ``passed`` without loosening anything.
"""
from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from lossyvl.asymptotics import gaussian_approx, rate_distortion
from lossyvl.blocklength import g_rate
from lossyvl.dball import (
    build_deterministic_code,
    build_stochastic_code,
    deterministic_rate_bound,
    g_value,
    greedy_cover,
)
from lossyvl.evaluator import (
    converse_audit,
    evaluate_code,
    majorization_audit,
    random_code,
    simulate,
    tightest_rate,
)
from lossyvl.model import hamming, make_instance
from lossyvl.random_instances import lossless_instance, random_instance
from lossyvl.smooth_entropy import smooth_max_entropy, sort_law

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from oracles import binary_entropy  # noqa: E402


@lru_cache(maxsize=None)
def corpus_one():
    """500 random feasible exact instances with |X|, |Y| <= 8, plus their covers."""
    rng = np.random.default_rng(1001)
    out = []
    for _ in range(500):
        inst = random_instance(rng, max_x=8, max_y=8)
        out.append((inst, greedy_cover(inst)))
    return tuple(out)


# -- criterion 1: one-shot sandwich --------------------------------------------

def criterion_1a():
    """Stochastic code: excess = eps exactly (rational) and within 1e-9 (float)."""
    t0 = time.perf_counter()
    misses, single_ball, within = 0, 0, 0
    for inst, cover in corpus_one():
        exact = evaluate_code(inst, build_stochastic_code(inst, cover)).excess_prob
        fl = inst.to_float()
        approx = evaluate_code(fl, build_stochastic_code(fl)).excess_prob
        if exact != inst.epsilon or abs(approx - float(inst.epsilon)) > 1e-9:
            misses += 1
            single_ball += cover.k_star == 1
            within += exact <= inst.epsilon
    secs = time.perf_counter() - t0
    detail = (f"{500 - misses}/500 hit eps exactly; {misses} misses, {single_ball} of them "
              f"with k*=1, {within} of them below eps; {secs:.1f}s")
    return misses == 0, detail


def criterion_1b():
    """Stochastic code: overflow(floor(G)) <= delta, rate = floor(G)."""
    bad = 0
    for inst, cover in corpus_one():
        code = build_stochastic_code(inst, cover)
        rep = evaluate_code(inst, code)
        ok = code.rate == math.floor(cover.g_bits) and rep.overflow_prob(code.rate) <= inst.delta
        bad += not ok
    return bad == 0, f"{500 - bad}/500 instances"


def criterion_1c():
    """Deterministic code: excess <= eps, overflow <= delta, rate <= floor(G + 2 log2 e / 2^G)."""
    bad = 0
    for inst, cover in corpus_one():
        code = build_deterministic_code(inst, cover)
        rep = evaluate_code(inst, code)
        ok = (rep.excess_prob <= inst.epsilon and rep.overflow_prob(code.rate) <= inst.delta
              and code.rate <= deterministic_rate_bound(cover.g_bits))
        bad += not ok
    return bad == 0, f"{500 - bad}/500 instances"


def criterion_1d():
    """Converse on both constructed codes and on 10^4 random valid codes; < 60 s total."""
    t0 = time.perf_counter()
    fails = 0
    for inst, cover in corpus_one():
        for code in (build_stochastic_code(inst, cover), build_deterministic_code(inst, cover)):
            fails += not converse_audit(inst, code, code.rate)
    rng = np.random.default_rng(1002)
    valid = 0
    while valid < 10_000:
        inst = random_instance(rng, max_x=5, max_y=5)
        for _ in range(20):
            code = random_code(inst, rng, max_index=31)
            rep = evaluate_code(inst, code)
            if rep.excess_prob > inst.epsilon:
                continue
            fails += not converse_audit(inst, code, tightest_rate(rep))
            valid += 1
    secs = time.perf_counter() - t0
    return fails == 0 and secs < 60, f"{fails} violations over 1000 constructed + {valid} random codes; {secs:.1f}s"


# -- criterion 2: epsilon + delta invariance -------------------------------------

def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1003)
    bad = checked = 0
    for _ in range(100):
        inst = random_instance(rng, coverable=True)
        for s in (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2), Fraction(4, 5)):
            stars = {greedy_cover(inst.replace(epsilon=s * t / 20, delta=s - s * t / 20)).i_star
                     for t in range(21)}
            bad += len(stars) != 1
            checked += 1
    secs = time.perf_counter() - t0
    return bad == 0 and secs < 10, f"{checked - bad}/{checked} (instance, sum) pairs invariant; {secs:.1f}s"


# -- criterion 3: entropy of the constructed output law and majorization ----------

def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1004)
    eq_bad = maj_bad = 0
    for k in range(100):
        inst = random_instance(rng)
        cover = greedy_cover(inst)
        law = evaluate_code(inst, build_stochastic_code(inst, cover)).output_law
        eq_bad += smooth_max_entropy(law, inst.delta) != cover.g_bits
        maj_bad += not majorization_audit(inst, 200, seed=k).passed
    secs = time.perf_counter() - t0
    ok = eq_bad == 0 and maj_bad == 0 and secs < 60
    return ok, f"H^delta != G on {eq_bad}, majorization failed on {maj_bad} of 100; {secs:.1f}s"


# -- criterion 4: min(j*, k*) <= i* + 2 ---------------------------------------------

def criterion_4():
    bad = sum(min(c.j_star, c.k_star) > c.i_star + 2 for _, c in corpus_one())
    return bad == 0, f"{500 - bad}/500 covers (also asserted inside greedy_cover)"


# -- criterion 5: lossless reduction -----------------------------------------------

def criterion_5():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1005)
    bad = 0
    for _ in range(50):
        inst = lossless_instance(rng, int(rng.integers(1, 9)))
        cover = greedy_cover(inst)
        same_g = g_value(inst) == smooth_max_entropy(inst.probs, inst.epsilon + inst.delta)
        order = list(sort_law(inst.probs).permutation)
        bad += not (same_g and list(cover.centers) == order[:len(cover.centers)])
    secs = time.perf_counter() - t0
    return bad == 0 and secs < 5, f"{50 - bad}/50 laws; {secs:.2f}s"


# -- criterion 6: binary rate-distortion oracle ------------------------------------

def criterion_6():
    t0 = time.perf_counter()
    worst_rate = worst_mean = worst_v = 0.0
    for p in (0.1, 0.2, 0.3, 0.4, 0.5):
        for k in range(1, 9):
            level = min(p, 1 - p) * k / 9
            sol = rate_distortion([1 - p, p], hamming(2), level)
            worst_rate = max(worst_rate, abs(sol.rate - (binary_entropy(p) - binary_entropy(level))))
            worst_mean = max(worst_mean, abs(float(np.dot([1 - p, p], sol.tilted)) - sol.rate))
            if p == 0.5:
                worst_v = max(worst_v, sol.dispersion)
    secs = time.perf_counter() - t0
    ok = worst_rate <= 1e-6 and worst_mean <= 1e-6 and worst_v <= 1e-9 and secs < 10
    return ok, (f"max |R - (h(p)-h(D))| = {worst_rate:.2e}, max |E j - R| = {worst_mean:.2e}, "
                f"max V at p=0.5 = {worst_v:.2e}; {secs:.2f}s")


# -- criterion 7: trend toward the Gaussian approximation --------------------------

@lru_cache(maxsize=None)
def trend_data():
    base = make_instance([0.7, 0.3], hamming(2), 0.1, 0.1, 0.1)
    sol = rate_distortion(base.probs, base.distortion.matrix, 0.1)
    ns = list(range(1, 13))
    g = [g_rate(base, n) for n in ns]
    approx = [gaussian_approx(base, n, sol) for n in ns]
    return ns, g, approx, sol.rate


def criterion_7a():
    ns, g, approx, _ = trend_data()
    gaps = [a - b for a, b in zip(g, approx)]
    finite = all(math.isfinite(x) for x in gaps)
    c = max(abs(gaps[n - 1]) * n / math.log2(n + 1) for n in range(4, 13))
    return finite and c <= 8, f"fitted C = {c:.3f} over n in [4, 12] (limit 8)"


def criterion_7b():
    ns, g, _, rate = trend_data()
    dist = [abs(g[n - 1] - rate) for n in range(4, 13)]
    inversions = [n for n, (a, b) in zip(range(5, 13), zip(dist, dist[1:])) if b > a]
    detail = (f"|g_rate - R| for n=4..12: " + ", ".join(f"{d:.4f}" for d in dist)
              + f"; increases at n = {inversions} ({len(inversions)} inversions, 1 allowed)")
    return len(inversions) <= 1, detail


# -- criterion 8: Monte Carlo consistency ------------------------------------------

def criterion_8():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1008)
    samples = 10 ** 6
    worst = 0.0
    bad = 0
    for k in range(20):
        inst = random_instance(rng)
        code = build_stochastic_code(inst)
        rep = evaluate_code(inst, code)
        emp = simulate(inst, code, samples, seed=k)
        for exact, hat in ((rep.excess_prob, emp.excess_hat),
                           (rep.overflow_prob(code.rate), emp.overflow_hat)):
            p = float(exact)
            se = math.sqrt(p * (1 - p) / samples)
            if se == 0:
                bad += hat != p
                continue
            z = abs(hat - p) / se
            worst = max(worst, z)
            bad += z > 4
    secs = time.perf_counter() - t0
    return bad == 0 and secs < 30, f"{bad} of 40 estimates beyond 4 SE (max z = {worst:.2f}); {secs:.1f}s"


CRITERIA = [
    ("1a", "stochastic code excess equals epsilon", criterion_1a),
    ("1b", "stochastic code overflow at floor(G)", criterion_1b),
    ("1c", "deterministic code constraints and rate bound", criterion_1c),
    ("1d", "converse on constructed and random codes", criterion_1d),
    ("2", "split invariance of i*", criterion_2),
    ("3", "H^delta of output law equals G; majorization audit", criterion_3),
    ("4", "min(j*, k*) <= i* + 2", criterion_4),
    ("5", "lossless reduction", criterion_5),
    ("6", "binary rate-distortion oracle", criterion_6),
    ("7a", "gap to Gaussian approximation within C log2(n+1)/n, C <= 8", criterion_7a),
    ("7b", "|g_rate - R| non-increasing beyond n = 4, one inversion allowed", criterion_7b),
    ("8", "Monte Carlo within 4 standard errors", criterion_8),
]


@pytest.mark.parametrize("key, title, fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(key, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print(f"\ncriterion {key} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for key, title, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(f"criterion {key} [{'PASS' if ok else 'FAIL'}] {title}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
