"""Discrete models with an additive energy F and integer statistics G.

Factor tables are stored flat in row-major order over the scope: the first
scope variable is the most significant digit, so for a scope ``(a, b)`` with
cardinalities ``(2, 3)`` the entry for ``(y_a, y_b)`` sits at ``3 * y_a + y_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import AssignmentError, ScopeError, ShapeError


class Accumulation(str, Enum):
    """How one statistic dimension is folded across factors."""

    ADD = "ADD"
    MAX = "MAX"


ADD = Accumulation.ADD
MAX = Accumulation.MAX


@dataclass(frozen=True, eq=False)
class EnergyFactor:
    scope: tuple
    values: np.ndarray

    def __init__(self, scope, values):
        object.__setattr__(self, "scope", tuple(int(v) for v in scope))
        arr = np.array(values, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other):
        if not isinstance(other, EnergyFactor):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"EnergyFactor(scope={self.scope}, n={self.values.size})"


@dataclass(frozen=True, eq=False)
class StatisticFactor:
    """Integer-vector table; ``values[k]`` is the P-vector for joint state ``k``."""

    scope: tuple
    values: np.ndarray

    def __init__(self, scope, values, dimension=None):
        object.__setattr__(self, "scope", tuple(int(v) for v in scope))
        raw = np.asarray(values)
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or not np.all(raw == np.round(raw)):
                raise ValueError("statistic entries must be finite integers")
        elif raw.size and raw.dtype.kind not in "iub":
            raise ValueError("statistic entries must be finite integers")
        arr = raw.astype(np.int64)
        if arr.ndim == 1:
            p = 1 if dimension is None else dimension
            if p == 0:
                arr = arr.reshape(-1, 0)
            else:
                arr = arr.reshape(-1, p)
        elif arr.ndim != 2:
            raise ShapeError("statistic table must be one- or two-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dimension(self):
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, StatisticFactor):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"StatisticFactor(scope={self.scope}, n={self.values.shape[0]}, P={self.dimension})"


@dataclass(frozen=True, eq=False)
class Model:
    """Validated, immutable model. Build it with :func:`build_model`."""

    cardinalities: tuple
    energy_factors: tuple
    statistic_factors: tuple
    accumulation: tuple

    @property
    def M(self) -> int:
        return len(self.cardinalities)

    @property
    def N(self) -> int:
        return max(self.cardinalities, default=0)

    @property
    def P(self) -> int:
        return len(self.accumulation)

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.cardinalities == other.cardinalities
            and self.accumulation == other.accumulation
            and self.energy_factors == other.energy_factors
            and self.statistic_factors == other.statistic_factors
        )

    def __repr__(self):
        return (
            f"Model(M={self.M}, N={self.N}, P={self.P}, "
            f"energy={len(self.energy_factors)}, statistics={len(self.statistic_factors)})"
        )

    def without_statistics(self) -> "Model":
        return Model(self.cardinalities, self.energy_factors, (), ())

    def with_statistics(self, statistic_factors, accumulation) -> "Model":
        """Same energy, new statistics (validated)."""
        return build_model(self.cardinalities, self.energy_factors, statistic_factors, accumulation)

    def table_size(self, scope) -> int:
        return math.prod(self.cardinalities[v] for v in scope)


def _check_scope(scope, cards, what, index):
    m = len(cards)
    for v in scope:
        if v < 0 or v >= m:
            raise ScopeError(f"{what} {index}: variable id {v} outside 0..{m - 1}")
    if len(set(scope)) != len(scope):
        raise ScopeError(f"{what} {index}: repeated variable in scope {scope}")


def build_model(
    cardinalities: Sequence[int],
    energy_factors: Iterable = (),
    statistic_factors: Iterable = (),
    accumulation: Sequence | None = None,
) -> Model:
    """Validate inputs and return an immutable :class:`Model`.

    ``energy_factors`` and ``statistic_factors`` may be factor objects or
    ``(scope, values)`` pairs. ``accumulation`` lists ADD/MAX per statistic
    dimension; when omitted every dimension is ADD and P is taken from the
    statistic factors (P=0 when there are none).
    """
    cards = tuple(int(c) for c in cardinalities)
    for i, c in enumerate(cards):
        if c < 1:
            raise ValueError(f"variable {i}: cardinality must be >= 1, got {c}")

    energies = []
    for t, fac in enumerate(energy_factors):
        if not isinstance(fac, EnergyFactor):
            fac = EnergyFactor(*fac)
        _check_scope(fac.scope, cards, "energy factor", t)
        size = math.prod(cards[v] for v in fac.scope)
        if fac.values.size != size:
            raise ShapeError(
                f"energy factor {t}: table has {fac.values.size} entries, scope needs {size}"
            )
        if np.any(np.isnan(fac.values)) or np.any(fac.values == np.inf):
            raise ValueError(f"energy factor {t}: NaN or +inf entry")
        energies.append(fac)

    if accumulation is not None:
        acc = tuple(Accumulation(a) for a in accumulation)
    else:
        acc = None

    stats = []
    for t, fac in enumerate(statistic_factors):
        if not isinstance(fac, StatisticFactor):
            fac = StatisticFactor(*fac, dimension=None if acc is None else len(acc))
        _check_scope(fac.scope, cards, "statistic factor", t)
        size = math.prod(cards[v] for v in fac.scope)
        if fac.values.shape[0] != size:
            raise ShapeError(
                f"statistic factor {t}: table has {fac.values.shape[0]} entries, scope needs {size}"
            )
        stats.append(fac)

    if acc is None:
        p = stats[0].dimension if stats else 0
        acc = (ADD,) * p
    for t, fac in enumerate(stats):
        if fac.dimension != len(acc):
            raise ShapeError(
                f"statistic factor {t}: dimension {fac.dimension} != P={len(acc)}"
            )
    # max-folded dimensions start from 0, so entries must not go below it
    for d, a in enumerate(acc):
        if a is MAX:
            for t, fac in enumerate(stats):
                if fac.values.shape[0] and fac.values[:, d].min() < 0:
                    raise ValueError(f"statistic factor {t}: negative entry on MAX dimension {d}")

    return Model(cards, tuple(energies), tuple(stats), acc)


def flat_index(scope, cards, y) -> int:
    idx = 0
    for v in scope:
        idx = idx * cards[v] + y[v]
    return idx


def check_assignment(model: Model, y) -> tuple:
    y = tuple(int(s) for s in y)
    if len(y) != model.M:
        raise AssignmentError(f"assignment has length {len(y)}, model has {model.M} variables")
    for i, (s, c) in enumerate(zip(y, model.cardinalities)):
        if not 0 <= s < c:
            raise AssignmentError(f"variable {i}: state {s} outside 0..{c - 1}")
    return y


def evaluate_F(model: Model, y) -> float:
    """Sum of energy factor lookups; ``-inf`` propagates."""
    y = check_assignment(model, y)
    total = 0.0
    for fac in model.energy_factors:
        total += float(fac.values[flat_index(fac.scope, model.cardinalities, y)])
    return total


def evaluate_G(model: Model, y) -> tuple:
    """Per-dimension ADD/MAX fold of statistic lookups, as a tuple of ints."""
    y = check_assignment(model, y)
    acc = model.accumulation
    out = [0] * len(acc)
    for fac in model.statistic_factors:
        row = fac.values[flat_index(fac.scope, model.cardinalities, y)]
        for d, a in enumerate(acc):
            if a is ADD:
                out[d] += int(row[d])
            elif row[d] > out[d]:
                out[d] = int(row[d])
    return tuple(out)
