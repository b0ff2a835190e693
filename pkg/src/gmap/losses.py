"""Sequence losses written as eta(G(y)) over integer label statistics.

Every builder returns a :class:`LossSpec` holding unary statistic factors
against a fixed ground truth, the accumulation per dimension, the evaluator
eta and the bound on the number of reachable statistic values at length M.

True/false positives use a per-position convention: position t is
predicted positive when ``y_t`` is in the positive label set (default: every
non-zero label), a true positive when additionally ``y_t == y*_t``, and a
false positive otherwise. The number of positives in the truth is a
constant, so false negatives never need their own statistic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import LengthError
from .model import ADD, MAX, StatisticFactor


@dataclass(frozen=True)
class LossSpec:
    name: str
    truth: tuple
    factors: tuple
    accumulation: tuple
    eta: Callable[[tuple], float]
    r_bound: int
    # (coefficients, constant) when eta is affine in G, enabling the folded path
    linear: tuple | None = None

    @property
    def P(self):
        return len(self.accumulation)

    def __call__(self, l):
        return self.eta(l)


def _cards(truth, cardinalities):
    m = len(truth)
    if cardinalities is None:
        n = max(2, max(truth, default=0) + 1)
        return (n,) * m
    if isinstance(cardinalities, int):
        return (cardinalities,) * m
    cards = tuple(cardinalities)
    if len(cards) != m:
        raise LengthError(f"ground truth has length {m}, model has {len(cards)} variables")
    return cards


def _unary(truth, cards, fn):
    """One statistic factor per position; ``fn(t, s)`` gives the vector for y_t = s."""
    return tuple(
        StatisticFactor((t,), np.array([fn(t, s) for s in range(c)], dtype=np.int64))
        for t, c in enumerate(cards)
    )


def _is_pos(positive):
    if positive is None:
        return lambda s: s != 0
    pos = frozenset(positive)
    if not pos:
        raise ValueError("positive label set must be nonempty")
    return lambda s: s in pos


def count_positives(truth, positive=None) -> int:
    is_pos = _is_pos(positive)
    return sum(1 for s in truth if is_pos(s))


def hamming(truth: Sequence[int], cardinalities=None, normalized=False) -> LossSpec:
    """Hamming distance, or Hamming loss (divided by M) when ``normalized``."""
    truth = tuple(truth)
    cards = _cards(truth, cardinalities)
    m = len(truth)
    factors = _unary(truth, cards, lambda t, s: [int(s != truth[t])])
    if normalized:
        scale = 1.0 / m if m else 0.0
        return LossSpec("hamming-norm", truth, factors, (ADD,), lambda l: l[0] * scale, m + 1, ((scale,), 0.0))
    return LossSpec("hamming", truth, factors, (ADD,), lambda l: float(l[0]), m + 1, ((1.0,), 0.0))


def weighted_hamming(weight, truth: Sequence[int], cardinalities=None) -> LossSpec:
    """Counts of (true label, predicted label) pairs; eta is the weighted sum."""
    truth = tuple(truth)
    w = np.asarray(weight, dtype=np.float64)
    n = w.shape[0]
    if w.shape != (n, n) or not np.all(np.isfinite(w)):
        raise ValueError("weight must be a finite square matrix")
    cards = _cards(truth, cardinalities if cardinalities is not None else n)
    if max(cards) > n or max(truth, default=0) >= n:
        raise ValueError("weight matrix is smaller than the label set")
    m = len(truth)

    def vec(t, s):
        out = [0] * (n * n)
        out[truth[t] * n + s] = 1
        return out

    coeffs = tuple(float(x) for x in w.reshape(-1))

    def eta(l):
        return float(sum(c * g for c, g in zip(coeffs, l)))

    return LossSpec(
        "whamming", truth, _unary(truth, cards, vec), (ADD,) * (n * n), eta,
        comb(m + n * n - 1, m), (coeffs, 0.0),
    )


def tp_fp(truth: Sequence[int], positive=None, cardinalities=None) -> tuple:
    """Unary (TP, FP) statistic factors, P=2, both ADD."""
    truth = tuple(truth)
    cards = _cards(truth, cardinalities)
    is_pos = _is_pos(positive)
    factors = _unary(
        truth, cards, lambda t, s: [int(is_pos(s) and s == truth[t]), int(is_pos(s) and s != truth[t])]
    )
    return factors, (ADD, ADD)


def eta_f_beta(beta: float, n_pos: int):
    b2 = beta * beta

    def eta(l):
        tp, fp = l[0], l[1]
        den = b2 * n_pos + tp + fp
        return 0.0 if den == 0 else 1.0 - (1.0 + b2) * tp / den

    return eta


def eta_precision(l):
    tp, fp = l[0], l[1]
    return 0.0 if tp + fp == 0 else 1.0 - tp / (tp + fp)


def eta_recall(n_pos: int):
    def eta(l):
        return 0.0 if n_pos == 0 else 1.0 - l[0] / n_pos

    return eta


def eta_iou(n_pos: int):
    def eta(l):
        tp, fp = l[0], l[1]
        den = n_pos + fp
        return 0.0 if den == 0 else 1.0 - tp / den

    return eta


def eta_fp_count(l):
    return float(l[-1])


def _select(factors, dim):
    return tuple(StatisticFactor(f.scope, f.values[:, dim:dim + 1]) for f in factors)


def f_beta(truth, beta=1.0, positive=None, cardinalities=None) -> LossSpec:
    factors, acc = tp_fp(truth, positive, cardinalities)
    m = len(truth)
    name = "fbeta" if beta != 1.0 else "f1"
    return LossSpec(name, tuple(truth), factors, acc, eta_f_beta(beta, count_positives(truth, positive)), (m + 1) ** 2)


def precision(truth, positive=None, cardinalities=None) -> LossSpec:
    factors, acc = tp_fp(truth, positive, cardinalities)
    return LossSpec("precision", tuple(truth), factors, acc, eta_precision, (len(truth) + 1) ** 2)


def iou(truth, positive=None, cardinalities=None) -> LossSpec:
    factors, acc = tp_fp(truth, positive, cardinalities)
    return LossSpec("iou", tuple(truth), factors, acc, eta_iou(count_positives(truth, positive)), (len(truth) + 1) ** 2)


def recall(truth, positive=None, cardinalities=None) -> LossSpec:
    factors, _ = tp_fp(truth, positive, cardinalities)
    n_pos = count_positives(truth, positive)
    lin = ((-1.0 / n_pos,), 1.0) if n_pos else ((0.0,), 0.0)
    return LossSpec("recall", tuple(truth), _select(factors, 0), (ADD,), eta_recall(n_pos), len(truth) + 1, lin)


def fp_count(truth, positive=None, cardinalities=None) -> LossSpec:
    factors, _ = tp_fp(truth, positive, cardinalities)
    return LossSpec("fp-count", tuple(truth), _select(factors, 1), (ADD,), eta_fp_count, len(truth) + 1, ((1.0,), 0.0))


def label_count(truth, normalized=False, cardinalities=None) -> LossSpec:
    """``|sum y - sum y*|`` (divided by M when ``normalized``); binary labels."""
    truth = tuple(truth)
    cards = _cards(truth, cardinalities if cardinalities is not None else 2)
    if any(c > 2 for c in cards):
        raise ValueError("label-count loss needs binary variables")
    m = len(truth)
    target = sum(truth)
    factors = _unary(truth, cards, lambda t, s: [s])
    if normalized:
        return LossSpec("label-count-norm", truth, factors, (ADD,), lambda l: abs(l[0] - target) / m, m + 1)
    return LossSpec("label-count", truth, factors, (ADD,), lambda l: float(abs(l[0] - target)), m + 1)


def zero_one(truth, positive=None, cardinalities=None) -> LossSpec:
    """``G = (TP, [FP > 0])`` with the second dimension max-folded."""
    truth = tuple(truth)
    cards = _cards(truth, cardinalities)
    is_pos = _is_pos(positive)
    n_pos = count_positives(truth, positive)
    factors = _unary(
        truth, cards, lambda t, s: [int(is_pos(s) and s == truth[t]), int(is_pos(s) and s != truth[t])]
    )

    def eta(l):
        return 1.0 if max(n_pos - l[0], l[1]) > 0 else 0.0

    return LossSpec("zero-one", truth, factors, (ADD, MAX), eta, 2 * (len(truth) + 1))


LOSS_NAMES = (
    "hamming", "hamming-norm", "whamming", "fp-count", "recall", "precision",
    "fbeta:<beta>", "iou", "label-count", "label-count-norm", "zero-one",
)


def loss_by_name(name: str, truth, cardinalities=None, positive=None, weight=None) -> LossSpec:
    """Resolve a command-line loss name."""
    if name == "hamming":
        return hamming(truth, cardinalities)
    if name == "hamming-norm":
        return hamming(truth, cardinalities, normalized=True)
    if name == "whamming":
        if weight is None:
            n = max(cardinalities) if cardinalities is not None and not isinstance(cardinalities, int) else (
                cardinalities or max(2, max(truth) + 1))
            weight = 1.0 - np.eye(n)
        return weighted_hamming(weight, truth, cardinalities)
    if name == "fp-count":
        return fp_count(truth, positive, cardinalities)
    if name == "recall":
        return recall(truth, positive, cardinalities)
    if name == "precision":
        return precision(truth, positive, cardinalities)
    if name == "f1":
        return f_beta(truth, 1.0, positive, cardinalities)
    if name.startswith("fbeta"):
        beta = float(name.split(":", 1)[1]) if ":" in name else 1.0
        return f_beta(truth, beta, positive, cardinalities)
    if name == "iou":
        return iou(truth, positive, cardinalities)
    if name == "label-count":
        return label_count(truth, False, cardinalities)
    if name == "label-count-norm":
        return label_count(truth, True, cardinalities)
    if name == "zero-one":
        return zero_one(truth, positive, cardinalities)
    raise ValueError(f"unknown loss {name!r}; expected one of {', '.join(LOSS_NAMES)}")
