"""Run-time scaling benchmarks on synthetic binary chains."""

from __future__ import annotations

import csv
import gc
import io
import math
import statistics
import time

import numpy as np

from . import tasks
from .generate import random_chain
from .inference import standard_junction_tree
from .losses import f_beta, hamming, zero_one

HEADER = ("task", "M", "N", "seconds", "max_l_states", "messages")


def _truth(rng, m, n):
    return tuple(int(x) for x in rng.integers(0, n, size=m))


def _plain(model, truth, rng):
    return standard_junction_tree(tasks.prepare_tree(model))


def _margin_hamming(model, truth, rng):
    return tasks.loss_augmented(model, hamming(truth, model.cardinalities), tasks.MARGIN)


def _margin_hamming_general(model, truth, rng):
    return tasks.loss_augmented(model, hamming(truth, model.cardinalities), tasks.MARGIN, fast_path=False)


def _slack_hamming(model, truth, rng):
    return tasks.loss_augmented(model, hamming(truth, model.cardinalities), tasks.SLACK)


def _slack_fbeta(model, truth, rng):
    return tasks.loss_augmented(model, f_beta(truth, 1.0, cardinalities=model.cardinalities), tasks.SLACK)


def _slack_zero_one(model, truth, rng):
    return tasks.loss_augmented(model, zero_one(truth, cardinalities=model.cardinalities), tasks.SLACK)


def _label_count(model, truth, rng):
    return tasks.label_count_constrained(model, model.M // 2)


def _exclude(model, truth, rng):
    pats = [_truth(rng, model.M, model.N) for _ in range(3)]
    return tasks.exclude_patterns(model, pats)


TASKS = {
    "plain-map": _plain,
    "margin-hamming": _margin_hamming,
    "margin-hamming-general": _margin_hamming_general,
    "slack-hamming": _slack_hamming,
    "slack-fbeta": _slack_fbeta,
    "slack-zero-one": _slack_zero_one,
    "label-count": _label_count,
    "exclude": _exclude,
}


def parse_range(text: str) -> list:
    """``"20:200:20"`` -> [20, 40, ..., 200] (inclusive); a single number is a one-item range."""
    parts = [int(p) for p in text.split(":")]
    if len(parts) == 1:
        return parts
    if len(parts) == 2:
        parts.append(1)
    lo, hi, step = parts
    if lo < 1 or hi < lo or step < 1:
        raise ValueError(f"bad range {text!r}")
    return list(range(lo, hi + 1, step))


def _instance(fn, N, seed, m, rep):
    rng = np.random.default_rng([seed, m, rep])
    model = random_chain(rng, m, N)
    truth = _truth(rng, m, N)
    # task-specific draws (e.g. excluded patterns) repeat identically across timed calls
    return fn, model, truth, [seed, m, rep, 1]


def _call(fn, model, truth, key):
    return fn(model, truth, np.random.default_rng(key))


def run(task: str, Ms, N=2, repetitions=1, seed=0, timing=True, min_time=1.0, min_calls=3) -> list:
    """One record per (M, repetition), in that order.

    Each (M, repetition) pair gets its own generator seeded from
    ``(seed, M, repetition)``, so records do not depend on which other sizes
    were requested.

    ``seconds`` is the fastest of repeated solves. Solves are issued in
    rounds that visit every pending (M, repetition) once, alternating
    direction, and a pair leaves the rounds once it has had ``min_calls``
    solves and ``min_time`` seconds of solving. On a shared machine whose speed drifts, this gives every size
    samples from the same fast and slow spells; interference only ever adds
    time, so the minimum is the stable estimate (the timeit rationale).
    """
    if task not in TASKS:
        raise ValueError(f"unknown bench task {task!r}; choose from {', '.join(TASKS)}")
    fn = TASKS[task]
    Ms = list(Ms)
    keys = [(m, rep) for m in Ms for rep in range(repetitions)]
    calls = {key: _instance(fn, N, seed, *key) for key in keys}

    sols, best, spent, count = {}, {}, dict.fromkeys(keys, 0.0), dict.fromkeys(keys, 0)
    # repetitions of one size sit far apart in a round, so their median spans speed drift
    pending = sorted(keys, key=lambda k: (k[1], k[0]))
    enabled = gc.isenabled()
    if timing:
        gc.disable()
    try:
        rnd = 0
        while pending:
            for key in (pending if rnd % 2 == 0 else pending[::-1]):
                start = time.perf_counter()
                sols[key] = _call(*calls[key])
                took = time.perf_counter() - start
                best[key] = min(best.get(key, math.inf), took)
                spent[key] += took
                count[key] += 1
            pending = [k for k in pending if timing and (spent[k] < min_time or count[k] < min_calls)]
            rnd += 1
    finally:
        if enabled:
            gc.enable()

    return [
        {
            "task": task,
            "M": m,
            "N": N,
            "seconds": best[(m, rep)] if timing else 0.0,
            "max_l_states": sols[(m, rep)].diagnostics.get("max_l_states", 1),
            "messages": sols[(m, rep)].diagnostics.get("messages", 0),
        }
        for m, rep in keys
    ]


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([r["task"], r["M"], r["N"], f"{r['seconds']:.6f}", r["max_l_states"], r["messages"]])
    return buf.getvalue()


def fit_slope(records) -> float:
    """Least-squares slope of log(median seconds) against log(M), upper half of the M range."""
    by_m = {}
    for r in records:
        by_m.setdefault(r["M"], []).append(r["seconds"])
    ms = sorted(by_m)
    upper = ms[len(ms) // 2:] if len(ms) > 2 else ms
    if len(upper) < 2:
        raise ValueError("need at least two sizes to fit a slope")
    x = np.log([float(m) for m in upper])
    y = np.log([max(statistics.median(by_m[m]), 1e-12) for m in upper])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
