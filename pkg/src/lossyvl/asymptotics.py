"""Rate-distortion function, D-tilted information, dispersion and the
Gaussian approximation of the optimal blocklength-n rate.

Blahut-Arimoto is run at a fixed slope ``s`` (nats per distortion unit); the
slope is then adjusted by bracketed root finding until the solution's
distortion hits the requested level.  Rates and tilted informations are
reported in bits, so the slope in bits is ``lambda* = s / ln 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .blocklength import g_rate
from .model import FiniteSource, Instance

LN2 = math.log(2)
GAP_BITS = 1e-10
PRUNE = 1e-15
SNAP_V = 1e-12
TAU_RD = 1e-6
MAX_ITER = 200_000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RdSolution:
    rate: float
    output_law: np.ndarray
    slope: float
    tilted: np.ndarray
    dispersion: float
    d_min: float
    d_max: float
    distortion: float
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "D": self.distortion,
            "rate_bits": self.rate,
            "lambda_star": self.slope,
            "dispersion": self.dispersion,
            "output_law": self.output_law.tolist(),
            "tilted": self.tilted.tolist(),
            "d_min": self.d_min,
            "d_max": self.d_max,
        }


def _law(source) -> np.ndarray:
    if isinstance(source, FiniteSource):
        return np.asarray(source.probs, dtype=np.float64)
    return np.asarray(source, dtype=np.float64)


def d_bounds(source, matrix) -> tuple[float, float]:
    """(D_min, D_max) = (E[min_y d(X, y)], min_y E[d(X, y)])."""
    p = _law(source)
    d = np.asarray(matrix, dtype=np.float64)
    return float(p @ d.min(axis=1)), float((p @ d).min())


def _bounds_gap(A, p, q):
    c = A @ q
    T = (p / c) @ A
    logT = np.log(T)
    return logT.max() - (q * T) @ logT, T


def _newton_polish(A, p, q, tol, steps=40):
    """Solve T_y(q) = 1 on a guessed support by Newton's method.

    Atoms driven non-positive are dropped from the support and the solve is
    restarted (an active-set loop).  Returns the polished q when the full
    bound gap closes, else None.
    """
    support = np.flatnonzero(q > 1e-9)
    while support.size:
        x = q[support] / q[support].sum()
        for _ in range(steps):
            As = A[:, support]
            c = As @ x
            T = (p / c) @ As
            jac = -(As * (p / c ** 2)[:, None]).T @ As
            try:
                new = x - np.linalg.solve(jac, T - 1.0)
            except np.linalg.LinAlgError:
                return None
            if np.any(new <= 0):
                support = np.delete(support, int(np.argmin(new)))
                break
            x = new / new.sum()
            if np.max(np.abs(T - 1.0)) < 1e-15:
                break
        if np.any(new <= 0):
            continue
        out = np.zeros_like(q)
        out[support] = x
        gap, _ = _bounds_gap(A, p, out)
        return out if gap < tol else None
    return None


def _blahut_arimoto(p, d, s, q, tol=GAP_BITS * LN2, max_iter=MAX_ITER):
    """Fixed-slope iteration; returns (q, log c, iterations).

    ``log c`` is ``log sum_y q(y) exp(-s d(x, y))`` per x, in nats.  Stops
    when Blahut's upper-lower bound gap on the Lagrangian drops below tol.
    Plain alternating updates locate the support; Newton steps on the
    fixed-point equations then finish the job, checked by the same gap.
    """
    shift = d.min(axis=1, keepdims=True)
    A = np.exp(-s * (d - shift))  # row scaling keeps exp() in range
    q = q.copy()
    for it in range(1, max_iter + 1):
        gap, T = _bounds_gap(A, p, q)
        if gap < tol:
            break
        q = q * T
        q /= q.sum()
        if gap < 1e-4 and it % 16 == 0:
            polished = _newton_polish(A, p, q, tol)
            if polished is not None:
                q = polished
                break
    else:
        raise ConvergenceError(f"Blahut-Arimoto did not reach gap {tol:g} at slope {s:g}")
    c = A @ q
    return q, np.log(c) - s * shift.ravel(), it


def _solution_at(p, d, s, q):
    q, logc, it = _blahut_arimoto(p, d, s, q)
    # conditional P*(y|x) = q(y) exp(-s d) / c(x)
    cond = q[None, :] * np.exp(-s * d - logc[:, None])
    dist = float(p @ (cond * d).sum(axis=1))
    return q, logc, dist, it, cond


def _mutual_information_bits(p, cond) -> float:
    out = p @ cond
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(cond > 0, cond * np.log2(cond / out[None, :]), 0.0)
    return float(p @ terms.sum(axis=1))


def rate_distortion(source, matrix, D: float) -> RdSolution:
    """R_X(D) with its optimal output law, slope, tilted informations and V_X(D)."""
    p = _law(source)
    d = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValueError("distortion matrix must be finite")
    d_min, d_max = d_bounds(p, d)
    if D <= d_min:
        raise ValueError(f"D = {D} is not above D_min = {d_min}")
    if D >= d_max:
        # constant reproduction of the best symbol; zero rate, zero slope
        q = np.zeros(d.shape[1])
        q[int(np.argmin(p @ d))] = 1.0
        return RdSolution(0.0, q, 0.0, np.zeros(len(p)), 0.0, d_min, d_max, float(D))

    support = p > 0
    p_s, d_s = p[support], d[support]
    q = np.full(d.shape[1], 1.0 / d.shape[1])
    state = {"q": q, "it": 0}

    def excess(log_s):
        s = math.exp(log_s)
        # warm start, kept strictly positive so vanished atoms can return
        q0 = 0.9 * state["q"] + 0.1 / len(state["q"])
        qs, _, dist, it, _ = _solution_at(p_s, d_s, s, q0)
        state["q"], state["it"] = qs, state["it"] + it
        return dist - D

    lo, hi = math.log(1e-3), math.log(1.0)
    while excess(lo) < 0:
        lo -= 2.0
        if lo < math.log(1e-12):
            raise ConvergenceError("could not bracket the slope from below")
    while excess(hi) > 0:
        hi += 1.0
        if hi > math.log(1e6):
            raise ConvergenceError("could not bracket the slope from above")
    log_s = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    s = math.exp(log_s)

    q, logc, dist, it, cond = _solution_at(p_s, d_s, s, state["q"])
    # second pass after pruning atoms that converged to (numerically) zero
    if np.any((q > 0) & (q < PRUNE)):
        q = np.where(q < PRUNE, 0.0, q)
        q /= q.sum()
        q, logc, dist, it, cond = _solution_at(p_s, d_s, s, q)

    tilted_s = -(s * D + logc) / LN2
    # the solve lands on distortion `dist`; move along the tangent to D
    rate = _mutual_information_bits(p_s, cond) + (s / LN2) * (D - dist)
    tilted = np.zeros(len(p))
    tilted[support] = tilted_s
    mean = float(p_s @ tilted_s)
    if abs(mean - rate) > TAU_RD:
        raise ConvergenceError(f"E[tilted] = {mean} disagrees with R = {rate}")
    var = float(p_s @ (tilted_s - mean) ** 2)
    if var < SNAP_V:
        var = 0.0
    return RdSolution(max(rate, 0.0), q, s / LN2, tilted, var, d_min, d_max, float(D),
                      state["it"] + it)


def rd_curve(source, matrix, levels) -> list[RdSolution]:
    return [rate_distortion(source, matrix, D) for D in levels]


# -- Gaussian tail -------------------------------------------------------------

def q_function(z: float) -> float:
    """Q(z) = Pr{N(0, 1) > z}."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def q_inverse(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"Q^-1 needs p in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    return brentq(lambda z: q_function(z) - p, -40.0, 40.0, xtol=1e-14, rtol=1e-15,
                  maxiter=500)


# -- blocklength-n approximations ---------------------------------------------

def gaussian_approx(base: Instance, n: int, sol: RdSolution | None = None) -> float:
    """R(D) + sqrt(V(D) / n) * Q^-1(eps + delta), the O(log n / n) term dropped."""
    total = float(base.epsilon + base.delta)
    if not 0.0 < total < 1.0:
        raise ValueError(f"eps + delta must lie in (0, 1), got {total}")
    d = base.distortion.matrix
    lo, hi = d_bounds(base.probs, d)
    if not lo < base.level < hi:
        raise ValueError(f"D = {base.level} must lie strictly inside ({lo}, {hi})")
    sol = sol or rate_distortion(base.probs, d, base.level)
    if sol.dispersion == 0.0:
        return sol.rate
    return sol.rate + math.sqrt(sol.dispersion / n) * q_inverse(total)


def fixed_length_bridge(base: Instance, n: int, budget: int | None = None) -> float:
    """g_rate with the whole budget moved to the excess-distortion side (delta = 0)."""
    total = base.epsilon + base.delta
    if total >= 1:
        return g_rate(base, n, budget)  # i* = 1 either way
    return g_rate(base.replace(epsilon=total, delta=0 * total), n, budget)
