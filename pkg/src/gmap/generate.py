"""Seeded random models for tests and benchmarks.

Energies are drawn from a grid of quarter-integers so every sum is exact in
binary floating point: ties are real ties, which exercises tie-breaking.
"""

from __future__ import annotations

import numpy as np

from .model import ADD, MAX, EnergyFactor, StatisticFactor, build_model

TOPOLOGIES = ("chain", "width2", "star", "tree", "cycle")


def _edges(rng, m, topology):
    if m < 2:
        return []
    if topology == "chain":
        return [(t, t + 1) for t in range(m - 1)]
    if topology == "star":
        return [(0, t) for t in range(1, m)]
    if topology == "tree":
        return [(int(rng.integers(0, t)), t) for t in range(1, m)]
    if topology == "cycle":
        return [(t, t + 1) for t in range(m - 1)] + ([(0, m - 1)] if m > 2 else [])
    if topology == "width2":
        return []
    raise ValueError(f"unknown topology {topology!r}")


def scopes(rng, m, topology):
    out = [(t,) for t in range(m)]
    if topology == "width2":
        if m >= 3:
            out += [(t, t + 1, t + 2) for t in range(m - 2)]
        elif m == 2:
            out.append((0, 1))
    else:
        out += list(_edges(rng, m, topology))
    return out


def energy_table(rng, size, neg_inf_rate=0.0):
    vals = rng.integers(-8, 9, size=size) / 4.0
    if neg_inf_rate:
        vals[rng.random(size) < neg_inf_rate] = -np.inf
    return vals


def random_model(rng, M, N, topology="chain", P=0, accumulation=None, neg_inf_rate=0.0, stat_range=2, stat_scope="mixed"):
    """A random model over the given topology.

    Statistic factors are attached to unary scopes and, when
    ``stat_scope == "mixed"``, to some higher-order scopes as well. Entries on
    MAX dimensions are non-negative.
    """
    if isinstance(N, int):
        cards = [N] * M
    else:
        cards = list(N)
    sc = scopes(rng, M, topology)
    energy = []
    for s in sc:
        size = int(np.prod([cards[v] for v in s]))
        energy.append(EnergyFactor(s, energy_table(rng, size, neg_inf_rate)))
    if accumulation is None:
        accumulation = [ADD] * P
    P = len(accumulation)
    stats = []
    if P:
        choices = sc if stat_scope == "mixed" else [(t,) for t in range(M)]
        for s in choices:
            if stat_scope == "mixed" and len(s) > 1 and rng.random() < 0.5:
                continue
            size = int(np.prod([cards[v] for v in s]))
            vals = np.zeros((size, P), dtype=np.int64)
            for d, a in enumerate(accumulation):
                if a is MAX:
                    vals[:, d] = rng.integers(0, 2, size=size)
                else:
                    vals[:, d] = rng.integers(0, stat_range, size=size)
            stats.append(StatisticFactor(s, vals))
    return build_model(cards, energy, stats, accumulation)


def random_chain(rng, M, N=2, scale=1.0):
    """Chain with continuous unary and pairwise energies (benchmarks)."""
    energy = [EnergyFactor((t,), rng.normal(scale=scale, size=N)) for t in range(M)]
    energy += [EnergyFactor((t, t + 1), rng.normal(scale=scale, size=N * N)) for t in range(M - 1)]
    return build_model([N] * M, energy)


def random_accumulation(rng, P, allow_max=True):
    return [MAX if (allow_max and rng.random() < 0.5) else ADD for _ in range(P)]
