"""Exhaustive reference implementations.

Nothing here uses the message passer. The oracles enumerate assignments in
lexicographic order and only rely on model evaluation, so they can certify
the engine's values *and* its tie-breaking.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

from .errors import BudgetExceeded
from .model import ADD, check_assignment, evaluate_F, evaluate_G, flat_index

NEG_INF = -math.inf
DEFAULT_BUDGET = 10**6


def _check_budget(size, budget):
    if size > budget:
        raise BudgetExceeded(f"{size} joint states exceed the budget of {budget}")


def strata(model, budget=DEFAULT_BUDGET) -> dict:
    """``{G(y): (max F, lexicographically first maximiser)}`` over feasible y."""
    _check_budget(math.prod(model.cardinalities), budget)
    best = {}
    for y in itertools.product(*(range(c) for c in model.cardinalities)):
        f = evaluate_F(model, y)
        if f == NEG_INF:
            continue
        g = evaluate_G(model, y)
        cur = best.get(g)
        if cur is None or f > cur[0]:
            best[g] = (f, y)
    return best


def brute_force(model, combinator, budget=DEFAULT_BUDGET):
    """Exhaustive ``max_y H(F(y), G(y))``.

    Tie rule (shared with the engine): per statistic value keep the
    lexicographically first maximiser of F; among the statistic values whose
    H attains the optimum, return the one with the lexicographically first
    configuration.
    """
    from .inference import Solution, infeasible

    best = None
    for g, (f, y) in strata(model, budget).items():
        h = combinator(f, g)
        if best is None or h > best[0] or (h == best[0] and y < best[1]):
            best = (h, y)
    if best is None or best[0] == NEG_INF:
        return infeasible()
    y = best[1]
    F = evaluate_F(model, y)
    G = evaluate_G(model, y)
    return Solution(y, combinator(F, G), F, G, True, {})


def brute_force_plain(model, budget=DEFAULT_BUDGET):
    """Lexicographically first maximiser of F alone (no statistics)."""
    _check_budget(math.prod(model.cardinalities), budget)
    best = None
    for y in itertools.product(*(range(c) for c in model.cardinalities)):
        f = evaluate_F(model, y)
        if f > NEG_INF and (best is None or f > best[0]):
            best = (f, y)
    return best


def side_of(tree, i, j):
    """Node ids reachable from ``i`` without crossing the edge ``i - j``."""
    seen = {i}
    queue = deque([i])
    while queue:
        u = queue.popleft()
        for w in tree.neighbors(u):
            if w == j or w in seen:
                continue
            seen.add(w)
            queue.append(w)
    return seen


def brute_force_message_table(tree, i, j, budget=DEFAULT_BUDGET) -> dict:
    """Every feasible ``(sepset assignment, l) -> value`` for the message ``i -> j``.

    The value is the max of the summed energy factors on the ``i`` side over
    that side's non-sepset variables, restricted to configurations whose
    folded statistics equal ``l``.
    """
    model = tree.model
    cards = model.cardinalities
    nodes = side_of(tree, i, j)
    variables = sorted({v for n in nodes for v in tree.nodes[n].variables})
    sep = tuple(sorted(set(tree.nodes[i].variables) & set(tree.nodes[j].variables))) if j is not None else ()
    energy = [model.energy_factors[t] for n in sorted(nodes) for t in tree.nodes[n].energy]
    stats = [model.statistic_factors[t] for n in sorted(nodes) for t in tree.nodes[n].statistics]
    _check_budget(math.prod(cards[v] for v in variables), budget)

    table = {}
    acc = model.accumulation
    for ys in itertools.product(*(range(cards[v]) for v in variables)):
        y = dict(zip(variables, ys))
        f = 0.0
        for fac in energy:
            f += float(fac.values[flat_index(fac.scope, cards, y)])
        if f == NEG_INF:
            continue
        l = [0] * len(acc)
        for fac in stats:
            row = fac.values[flat_index(fac.scope, cards, y)]
            for d, a in enumerate(acc):
                l[d] = l[d] + int(row[d]) if a is ADD else max(l[d], int(row[d]))
        key = (tuple(y[v] for v in sep), tuple(l))
        if key not in table or f > table[key]:
            table[key] = f
    return table


def brute_force_message(tree, i, j, s, l, budget=DEFAULT_BUDGET) -> float:
    """Value of ``mu_{i->j}(s, l)``; ``-inf`` when the key is unreachable."""
    return brute_force_message_table(tree, i, j, budget).get((tuple(s), tuple(l)), NEG_INF)


# Direct loss definitions on (truth, prediction); written without statistics.

def _positives(labels, positive):
    return [(t in positive) if positive is not None else t != 0 for t in labels]


def direct_loss(name, truth, y, positive=None, beta=1.0, weight=None):
    truth = list(truth)
    y = list(y)
    m = len(truth)
    if name == "hamming":
        return float(sum(a != b for a, b in zip(truth, y)))
    if name == "hamming-norm":
        return sum(a != b for a, b in zip(truth, y)) / m
    if name == "whamming":
        return float(sum(weight[a][b] for a, b in zip(truth, y)))
    if name in ("label-count", "label-count-norm"):
        d = abs(sum(y) - sum(truth))
        return float(d) if name == "label-count" else d / m
    pos_t = _positives(truth, positive)
    pos_y = _positives(y, positive)
    tp = sum(1 for a, b, py in zip(truth, y, pos_y) if py and a == b)
    fp = sum(1 for a, b, py in zip(truth, y, pos_y) if py and a != b)
    n_pos = sum(pos_t)
    fn = n_pos - tp
    if name == "fp-count":
        return float(fp)
    if name == "zero-one":
        return float(truth != y)
    if name == "recall":
        return 0.0 if n_pos == 0 else 1.0 - tp / n_pos
    if name == "precision":
        return 0.0 if tp + fp == 0 else 1.0 - tp / (tp + fp)
    if name == "fbeta":
        b2 = beta * beta
        den = (1 + b2) * tp + b2 * fn + fp
        return 0.0 if den == 0 else 1.0 - (1 + b2) * tp / den
    if name == "iou":
        den = tp + fp + fn
        return 0.0 if den == 0 else 1.0 - tp / den
    raise ValueError(f"unknown loss {name!r}")


def hamming_distance(a, b) -> int:
    return sum(x != y for x, y in zip(a, b))


def check_solution(model, solution):
    """Recompute F and G of a reported solution."""
    y = check_assignment(model, solution.y)
    return evaluate_F(model, y), evaluate_G(model, y)
