"""Combinators H(F, l) that couple the energy with the global statistics.

Every combinator must be non-decreasing in its first argument; this is the
only property the exactness argument of the message passer relies on.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import MonotonicityError

NEG_INF = -math.inf


class Combinator:
    """Base class. Subclasses implement ``__call__(f, l) -> float``."""

    name = "combinator"

    def __call__(self, f: float, l: tuple) -> float:
        raise NotImplementedError


def _zero(l):
    return 0.0


class Sum(Combinator):
    """Margin scaling: ``H = F + eta(l)``."""

    name = "sum"

    def __init__(self, eta: Callable[[tuple], float] = _zero):
        self.eta = eta

    def __call__(self, f, l):
        return f + self.eta(l)


class Product(Combinator):
    """Slack scaling: ``H = F * eta(l)`` with ``eta >= 0`` checked on every call."""

    name = "product"

    def __init__(self, eta: Callable[[tuple], float]):
        self.eta = eta

    def __call__(self, f, l):
        e = self.eta(l)
        if not e >= 0:
            raise MonotonicityError(f"slack-scaling eta({l}) = {e} is negative")
        if e == 0:
            # 0 * -inf would be nan; an infeasible F stays infeasible
            return NEG_INF if f == NEG_INF else 0.0
        return f * e


class Gate(Combinator):
    """Hard constraint on the statistics: ``H = F + eta(l)`` if ``predicate(l)``, else ``-inf``."""

    name = "gate"

    def __init__(self, predicate: Callable[[tuple], bool], eta: Callable[[tuple], float] | None = None):
        self.predicate = predicate
        self.eta = eta

    def __call__(self, f, l):
        if not self.predicate(l):
            return NEG_INF
        return f if self.eta is None else f + self.eta(l)


class General(Combinator):
    """User-supplied ``h(f, l)``.

    The caller must declare ``monotone=True``; the engine cannot verify the
    property and the optimum is only guaranteed when it holds.
    """

    name = "general"

    def __init__(self, h: Callable[[float, tuple], float], monotone: bool = False):
        if not monotone:
            raise MonotonicityError("General combinator requires monotone=True (non-decreasing in F)")
        self.h = h

    def __call__(self, f, l):
        return self.h(f, l)


def identity_eta(l):
    """eta(l) = sum of the statistic components (the identity for P=1)."""
    return float(sum(l))


def constant_eta(c: float):
    def eta(l):
        return c

    return eta


def requirement(dim: int, op: str, value: int) -> Callable[[tuple], bool]:
    """Predicate ``l[dim] <op> value`` with op in eq, ne, le, lt, ge, gt."""
    ops = {
        "eq": lambda a: a == value,
        "ne": lambda a: a != value,
        "le": lambda a: a <= value,
        "lt": lambda a: a < value,
        "ge": lambda a: a >= value,
        "gt": lambda a: a > value,
    }
    if op not in ops:
        raise ValueError(f"unknown comparison {op!r}")
    test = ops[op]
    return lambda l: test(l[dim])


def all_of(*predicates):
    return lambda l: all(p(l) for p in predicates)
