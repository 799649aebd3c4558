"""Instances, codeword enumeration and feasibility.

Probabilities live in a numpy array that is either ``float64`` (fast path) or
``object`` holding :class:`fractions.Fraction` values (exact mode).  Every
threshold comparison goes through :func:`tolerance` so the two modes share
one code path.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import sparse

TAU_MASS = 1e-9
TAU_CMP = 1e-12
# relative slack for ``d(x, y) <= D`` so that e.g. 3 * 0.1 still admits distortion 0.3
TAU_DIST = 1e-12


class SchemaError(ValueError):
    """Instance data does not satisfy the model invariants."""


class InfeasibleError(ValueError):
    """No code can meet the excess-distortion budget."""


def is_exact(probs: np.ndarray) -> bool:
    return probs.dtype == object


def tolerance(probs: np.ndarray) -> float:
    """Comparison slack for threshold tests: 0 in exact mode."""
    return 0 if is_exact(probs) else TAU_CMP


def _as_prob(value: Any) -> Fraction | float:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return float(value)


def as_law(values: Sequence[Any], exact: bool | None = None) -> np.ndarray:
    """Coerce a sequence into a probability array.

    Strings such as ``"1/3"`` and :class:`Fraction` values select exact mode
    unless ``exact=False`` is forced; ``exact=True`` converts floats through
    their shortest decimal representation.
    """
    parsed = [_as_prob(v) for v in values]
    if exact is None:
        exact = all(isinstance(v, Fraction) for v in parsed) and any(
            isinstance(v, (str, Fraction)) for v in values
        )
    if exact:
        arr = np.empty(len(parsed), dtype=object)
        for i, v in enumerate(parsed):
            arr[i] = v if isinstance(v, Fraction) else Fraction(repr(v))
        return arr
    return np.array([float(v) for v in parsed], dtype=np.float64)


@dataclass(frozen=True)
class FiniteSource:
    symbols: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if len(self.symbols) != len(self.probs):
            raise SchemaError("symbols and probs differ in length")
        if len(set(self.symbols)) != len(self.symbols):
            raise SchemaError("source symbols must be distinct")
        if len(self.probs) == 0:
            raise SchemaError("empty source alphabet")
        if any(p < 0 for p in self.probs):
            raise SchemaError("negative probability")
        total = sum(self.probs)
        if abs(total - 1) > (0 if self.exact else TAU_MASS):
            raise SchemaError(f"probabilities sum to {float(total)!r}, not 1")

    @classmethod
    def from_probs(cls, probs: Sequence[Any], symbols: Sequence[str] | None = None,
                   exact: bool | None = None) -> "FiniteSource":
        law = as_law(probs, exact)
        if symbols is None:
            symbols = [str(i) for i in range(len(law))]
        return cls(tuple(symbols), law)

    @property
    def exact(self) -> bool:
        return is_exact(self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    def to_float(self) -> "FiniteSource":
        return FiniteSource(self.symbols, self.probs.astype(np.float64))


@dataclass(frozen=True)
class DistortionSpec:
    """Dense single-letter distortion matrix ``d[x, y]`` and level ``D``."""

    matrix: np.ndarray
    level: float
    y_symbols: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or 0 in m.shape:
            raise SchemaError("distortion must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise SchemaError("distortion entries must be finite and non-negative")
        try:
            level = float(_as_prob(self.level))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad distortion level {self.level!r}") from exc
        if not np.isfinite(level) or level < 0:
            raise SchemaError("distortion level D must be a finite non-negative number")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "level", level)
        ys = tuple(str(s) for s in self.y_symbols) or tuple(str(j) for j in range(m.shape[1]))
        if len(ys) != m.shape[1] or len(set(ys)) != len(ys):
            raise SchemaError("reproduction symbols must be distinct and match the matrix width")
        object.__setattr__(self, "y_symbols", ys)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def threshold(self) -> float:
        return self.level + TAU_DIST * max(1.0, self.level)

    def distance(self, xs, ys) -> np.ndarray:
        return self.matrix[np.asarray(xs), np.asarray(ys)]

    def membership(self) -> sparse.csr_matrix:
        """Boolean |X| x |Y| matrix with entry (x, y) set iff d(x, y) <= D."""
        return sparse.csr_matrix(self.matrix <= self.threshold)

    def to_json_fields(self) -> dict:
        return {"y_symbols": list(self.y_symbols), "distortion": self.matrix.tolist(),
                "D": self.level}

    def max_value(self) -> float:
        return float(self.matrix.max())

    def with_level(self, level: float) -> "DistortionSpec":
        return DistortionSpec(self.matrix, level, self.y_symbols)


@dataclass(frozen=True)
class Instance:
    source: FiniteSource
    distortion: Any  # DistortionSpec or blocklength.ProductDistortion
    epsilon: Any
    delta: Any
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        eps, dlt = _as_prob(self.epsilon), _as_prob(self.delta)
        if self.source.exact:
            eps = eps if isinstance(eps, Fraction) else Fraction(repr(eps))
            dlt = dlt if isinstance(dlt, Fraction) else Fraction(repr(dlt))
        else:
            eps, dlt = float(eps), float(dlt)
        for name, v in (("epsilon", eps), ("delta", dlt)):
            if not 0 <= v < 1:
                raise SchemaError(f"{name} must lie in [0, 1), got {v}")
        if self.distortion.shape[0] != len(self.source):
            raise SchemaError("distortion matrix rows must match the source alphabet")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", dlt)

    @property
    def exact(self) -> bool:
        return self.source.exact

    @property
    def probs(self) -> np.ndarray:
        return self.source.probs

    @property
    def level(self) -> float:
        return self.distortion.level

    def membership(self) -> sparse.csr_matrix:
        if "membership" not in self._cache:
            self._cache["membership"] = self.distortion.membership()
        return self._cache["membership"]

    def replace(self, **changes) -> "Instance":
        kw = dict(source=self.source, distortion=self.distortion,
                  epsilon=self.epsilon, delta=self.delta)
        kw.update(changes)
        return Instance(**kw)

    def to_float(self) -> "Instance":
        return Instance(self.source.to_float(), self.distortion,
                        float(self.epsilon), float(self.delta))

    def to_json(self) -> dict:
        def fmt(v):
            return f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else float(v)

        out = {
            "x_symbols": list(self.source.symbols),
            "probs": [fmt(p) for p in self.probs],
        }
        out.update(self.distortion.to_json_fields())
        out.update(epsilon=fmt(self.epsilon), delta=fmt(self.delta))
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def make_instance(probs, distortion, D, epsilon, delta, *, x_symbols=None,
                  y_symbols=None, exact: bool | None = None) -> Instance:
    source = FiniteSource.from_probs(probs, x_symbols, exact=exact)
    spec = DistortionSpec(np.asarray(distortion, dtype=np.float64), D, tuple(y_symbols or ()))
    return Instance(source, spec, epsilon, delta)


def hamming(size: int) -> np.ndarray:
    return 1.0 - np.eye(size)


_REQUIRED = ("x_symbols", "probs", "y_symbols", "distortion", "D", "epsilon", "delta")


def instance_from_json(data: dict, exact: bool | None = None) -> Instance:
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise SchemaError(f"instance is missing fields: {', '.join(missing)}")
    try:
        matrix = np.asarray(data["distortion"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad distortion matrix: {exc}") from exc
    try:
        return make_instance(data["probs"], matrix, data["D"], data["epsilon"],
                             data["delta"], x_symbols=data["x_symbols"],
                             y_symbols=data["y_symbols"], exact=exact)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc)) from exc


def load_instance(path: str | Path, exact: bool | None = None) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_json(data, exact)


# -- codewords ---------------------------------------------------------------

def index_to_word(i: int) -> str:
    """The i-th binary string in length-then-lexicographic order (1-based).

    >>> [index_to_word(i) for i in (1, 2, 3, 4, 8)]
    ['', '0', '1', '00', '000']
    """
    if i < 1:
        raise ValueError(f"codeword index must be >= 1, got {i}")
    return bin(i)[3:]


def word_to_index(word: str) -> int:
    if word and set(word) - {"0", "1"}:
        raise ValueError(f"not a binary string: {word!r}")
    return int("1" + word, 2)


def word_length(i: int) -> int:
    """``len(index_to_word(i))`` without building the string."""
    return int(i).bit_length() - 1


# -- feasibility -------------------------------------------------------------

class Feasibility(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


def uncoverable_mass(inst: Instance):
    """Pr{ min_y d(X, y) > D }."""
    covered = np.asarray(inst.membership().sum(axis=1)).ravel() > 0
    return sum(inst.probs[~covered], 0 * inst.probs[0])


def check_feasible(inst: Instance) -> Feasibility:
    if uncoverable_mass(inst) > inst.epsilon + tolerance(inst.probs):
        return Feasibility.INFEASIBLE
    return Feasibility.FEASIBLE
