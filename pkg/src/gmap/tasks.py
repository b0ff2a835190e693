"""Application builders: each assembles a model, a clique tree and a combinator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import combinators as H
from .cliquetree import build_clique_tree, reduce_neighbors, reshape_dedup_sepsets
from .errors import LengthError, ScaleError
from .inference import Solution, run_constrained_mp, standard_junction_tree
from .losses import LossSpec, count_positives, eta_f_beta, tp_fp
from .model import ADD, MAX, EnergyFactor, Model, StatisticFactor, build_model, evaluate_F, evaluate_G

MARGIN = "margin"
SLACK = "slack"


@dataclass
class TaskResult:
    solutions: list
    metadata: dict = field(default_factory=dict)

    @property
    def solution(self) -> Solution:
        return self.solutions[0]


def prepare_tree(model: Model, reduce=True, reshape=False, root=0):
    tree = build_clique_tree(model)
    if reshape:
        tree = reshape_dedup_sepsets(tree)
    if reduce:
        tree = reduce_neighbors(tree)
    return tree.with_root(root) if root else tree


def solve(model: Model, combinator, reduce=True, reshape=False, root=0) -> Solution:
    return run_constrained_mp(prepare_tree(model, reduce, reshape, root), combinator)


def attach(model: Model, factors, accumulation) -> Model:
    """Replace the model's statistics."""
    return build_model(model.cardinalities, model.energy_factors, factors, accumulation)


def _unary_stats(model, fn):
    return tuple(
        StatisticFactor((t,), np.array([fn(t, s) for s in range(c)], dtype=np.int64))
        for t, c in enumerate(model.cardinalities)
    )


def loss_augmented(model_F: Model, loss: LossSpec, mode=MARGIN, fast_path=True, **tree_opts) -> Solution:
    """``max_y F(y) + Delta(y*, y)`` (margin) or ``F(y) * Delta(y*, y)`` (slack)."""
    if len(loss.truth) != model_F.M:
        raise LengthError(f"ground truth has length {len(loss.truth)}, model has {model_F.M} variables")
    model = attach(model_F, loss.factors, loss.accumulation)
    if mode == MARGIN:
        if fast_path and loss.linear is not None and all(a is ADD for a in loss.accumulation):
            return margin_folded(model, loss, **tree_opts)
        return solve(model, H.Sum(loss.eta), **tree_opts)
    if mode == SLACK:
        return solve(model, H.Product(loss.eta), **tree_opts)
    raise ValueError(f"mode must be {MARGIN!r} or {SLACK!r}")


def fold_linear(model: Model, coeffs) -> Model:
    """Fold ``coeffs . g_t`` into energy factors; the result has no statistics."""
    extra = [
        EnergyFactor(g.scope, g.values.astype(np.float64) @ np.asarray(coeffs, dtype=np.float64))
        for g in model.statistic_factors
    ]
    return build_model(model.cardinalities, list(model.energy_factors) + extra)


def margin_folded(model: Model, loss: LossSpec, reduce=True, reshape=False, root=0) -> Solution:
    """Margin scaling with an affine eta via plain max-product on folded factors."""
    coeffs, _ = loss.linear
    folded = fold_linear(model, coeffs)
    sol = standard_junction_tree(prepare_tree(folded, reduce, reshape, root))
    if not sol.feasible:
        return sol
    F = evaluate_F(model, sol.y)
    G = evaluate_G(model, sol.y)
    return Solution(sol.y, F + loss.eta(G), F, G, True, sol.diagnostics)


def label_count_constrained(model: Model, b: int, **tree_opts) -> Solution:
    """MAP subject to exactly ``b`` variables set to 1 (binary variables)."""
    if any(c > 2 for c in model.cardinalities):
        raise ValueError("label-count constraint needs binary variables")
    m = attach(model, _unary_stats(model, lambda t, s: [s]), (ADD,))
    return solve(m, H.Gate(lambda l: l[0] == b), **tree_opts)


@dataclass(frozen=True)
class ChainScore:
    """Linear chain score ``sum_t unary[x_t, y_t] + sum_t pairwise[y_{t-1}, y_t]``.

    ``obs`` holds observation symbols in ``0..D-1``.
    """

    obs: tuple
    unary: np.ndarray
    pairwise: np.ndarray

    def __init__(self, obs, unary, pairwise):
        object.__setattr__(self, "obs", tuple(int(o) for o in obs))
        object.__setattr__(self, "unary", np.asarray(unary, dtype=np.float64))
        object.__setattr__(self, "pairwise", np.asarray(pairwise, dtype=np.float64))

    @property
    def D(self):
        return self.unary.shape[0]

    @property
    def N(self):
        return self.unary.shape[1]

    def to_model(self) -> Model:
        n = self.N
        m = len(self.obs)
        energy = [EnergyFactor((t,), self.unary[o]) for t, o in enumerate(self.obs)]
        energy += [EnergyFactor((t - 1, t), self.pairwise.reshape(-1)) for t in range(1, m)]
        return build_model([n] * m, energy)

    def statistics(self):
        """Count statistics: D*N observation-state dims, then N*N transition dims."""
        d, n = self.D, self.N
        p = d * n + n * n
        m = len(self.obs)
        factors = []
        for t, o in enumerate(self.obs):
            vals = np.zeros((n, p), dtype=np.int64)
            for s in range(n):
                vals[s, o * n + s] = 1
            factors.append(StatisticFactor((t,), vals))
        for t in range(1, m):
            vals = np.zeros((n * n, p), dtype=np.int64)
            for k in range(n * n):
                vals[k, d * n + k] = 1
            factors.append(StatisticFactor((t - 1, t), vals))
        return tuple(factors), (ADD,) * p

    def weights(self):
        return np.concatenate([self.unary.reshape(-1), self.pairwise.reshape(-1)])

    def state_bound(self) -> int:
        m = len(self.obs)
        dn, nn = self.D * self.N, self.N * self.N
        return comb(m + dn - 1, m) * comb(m + nn - 1, m)


def integer_weights(w, precision=1000):
    scaled = np.round(np.asarray(w, dtype=np.float64) * precision)
    if not np.allclose(scaled / precision, w, rtol=0, atol=1e-9):
        raise ScaleError(f"weights are not multiples of 1/{precision}")
    return [int(x) for x in scaled]


def objective_range_constrained(chain: ChainScore, a=-math.inf, b=math.inf, precision=1000, **tree_opts) -> Solution:
    """MAP of a chain score subject to ``a <= score(y) <= b``.

    The score is tracked exactly as integer counts; the range test runs on
    the root statistics with weights scaled to integers at ``precision``.
    """
    base = chain.to_model()
    factors, acc = chain.statistics()
    iw = integer_weights(chain.weights(), precision)
    lo = -math.inf if a == -math.inf else Fraction(a).limit_denominator(10**12)
    hi = math.inf if b == math.inf else Fraction(b).limit_denominator(10**12)

    def inside(l):
        score = Fraction(sum(w * g for w, g in zip(iw, l)), precision)
        return lo <= score <= hi

    return solve(attach(base, factors, acc), H.Gate(inside), **tree_opts)


def exclude_patterns(model: Model, patterns, **tree_opts) -> Solution:
    """Best assignment different from every given pattern."""
    patterns = [tuple(p) for p in patterns]
    for p in patterns:
        if len(p) != model.M:
            raise LengthError(f"pattern {p} has length {len(p)}, model has {model.M} variables")
    if not patterns:
        return standard_junction_tree(prepare_tree(model, **tree_opts))
    k = len(patterns)
    stats = _unary_stats(model, lambda t, s: [int(s != p[t]) for p in patterns])
    m = attach(model, stats, (MAX,) * k)
    return solve(m, H.Gate(lambda l: all(l)), **tree_opts)


def diverse_kbest(model: Model, K: int, margins=(), **tree_opts) -> TaskResult:
    """Greedy diverse K-best: solution j keeps Hamming distance >= m_{j-1} to all earlier ones."""
    margins = list(margins)
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(margins) < K - 1:
        raise ValueError(f"need {K - 1} margins, got {len(margins)}")
    found = []
    first = standard_junction_tree(prepare_tree(model, **tree_opts))
    if not first.feasible:
        return TaskResult([], {"infeasible_round": 1})
    found.append(first)
    for j in range(2, K + 1):
        need = margins[j - 2]
        prev = [s.y for s in found]
        stats = _unary_stats(model, lambda t, s: [int(s != p[t]) for p in prev])
        m = attach(model, stats, (ADD,) * len(prev))
        sol = solve(m, H.Gate(lambda l, need=need: all(d >= need for d in l)), **tree_opts)
        if not sol.feasible:
            return TaskResult(found, {"infeasible_round": j})
        found.append(sol)
    return TaskResult(found, {"infeasible_round": None})


def generalization_bound_term(model_F: Model, score_truth: float, truth, positive=None, **tree_opts) -> Solution:
    """``max_y [score* - F(y) <= FP + FN] * Delta_F1(y*, y)``.

    ``F`` is the model score ``w . Psi(x, y)`` and ``score_truth`` is
    ``w . Psi(x, y*)``. Hamming distance enters as ``FP + FN`` with
    ``FN = |y*|_+ - TP``, so the (TP, FP) statistics of the F1 loss suffice.
    """
    truth = tuple(truth)
    if len(truth) != model_F.M:
        raise LengthError(f"ground truth has length {len(truth)}, model has {model_F.M} variables")
    factors, acc = tp_fp(truth, positive, model_F.cardinalities)
    n_pos = count_positives(truth, positive)
    eta = eta_f_beta(1.0, n_pos)

    def h(f, l):
        return eta(l) if score_truth - f <= n_pos - l[0] + l[1] else 0.0

    return solve(attach(model_F, factors, acc), H.General(h, monotone=True), **tree_opts)

