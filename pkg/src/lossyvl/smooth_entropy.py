"""Smooth max entropy and majorization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate

import numpy as np

from .model import TAU_CMP, TAU_MASS, as_law, is_exact


@dataclass(frozen=True)
class SortedLaw:
    probs_desc: np.ndarray
    permutation: np.ndarray  # probs_desc[k] == law[permutation[k]]


def sort_law(law) -> SortedLaw:
    """Sort descending; ties keep original index order."""
    law = np.asarray(law) if isinstance(law, np.ndarray) else as_law(law)
    # stable sort on the negated values keeps tied entries in index order
    keys = [(-p, i) for i, p in enumerate(law)]
    perm = np.array([i for _, i in sorted(keys)], dtype=np.int64)
    return SortedLaw(law[perm], perm)


def smooth_support_size(law, delta) -> int:
    """Smallest number of atoms whose total mass reaches ``1 - delta``."""
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    law = np.asarray(law) if isinstance(law, np.ndarray) else as_law(law)
    tau = 0 if is_exact(law) else TAU_CMP
    target = 1 - delta
    for k, mass in enumerate(accumulate(sort_law(law).probs_desc), start=1):
        if mass >= target - tau:
            return k
    # only reachable through float dust in a law that sums to just under 1
    return int(np.count_nonzero(law))


def smooth_max_entropy(law, delta) -> float:
    """H^delta in bits: log2 of the smallest event with probability >= 1 - delta."""
    return math.log2(smooth_support_size(law, delta))


def majorizes(b, a) -> bool:
    """True iff ``b`` majorizes ``a`` (a is "flatter" than b).

    Vectors are padded with zeros to a common length.  Totals must agree to
    within ``TAU_MASS``; exact inputs are compared exactly.
    """
    b = np.asarray(b) if isinstance(b, np.ndarray) else as_law(b)
    a = np.asarray(a) if isinstance(a, np.ndarray) else as_law(a)
    exact = is_exact(a) and is_exact(b)
    tau = 0 if exact else TAU_MASS
    if abs(sum(a) - sum(b)) > tau:
        raise ValueError(f"totals differ: {float(sum(a))} vs {float(sum(b))}")
    sa = list(accumulate(sort_law(a).probs_desc))
    sb = list(accumulate(sort_law(b).probs_desc))
    m = max(len(sa), len(sb))
    sa += [sa[-1]] * (m - len(sa))
    sb += [sb[-1]] * (m - len(sb))
    return all(x <= y + tau for x, y in zip(sa[:-1], sb[:-1]))
