"""Constrained max-product message passing on clique trees.

Each message ``mu_{i->j}`` is a sparse table keyed by ``(sepset assignment, l)``
where ``l`` is the folded statistic vector of everything on the ``i`` side of
the edge. Only reachable keys with finite value are stored. The combinator is
applied once, over the root beliefs.

Ties are broken towards the lexicographically smallest assignment. To make
that exact across the whole tree every stored entry also carries an integer
rank ``sum_v y_v * W_v`` (mixed-radix weight of each eliminated variable);
among equal values the smaller rank wins. Across root strata with equal H the
smallest rank wins again, so the result is: the stratum whose best
configuration is lexicographically smallest, and within it the
lexicographically smallest maximiser of F.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .cliquetree import CliqueTree, clique_energy, clique_statistics
from .combinators import Combinator, Sum
from .errors import CorruptRecord, NotReady
from .model import ADD, evaluate_F, evaluate_G

NEG_INF = -math.inf


@dataclass
class MessageTable:
    """Sparse ``(sepset assignment, l) -> (value, rank, clique assignment, child l's)``.

    ``target`` is None for the root beliefs, whose sepset is empty.
    """

    source: int
    target: int | None
    sepset: tuple
    table: dict = field(default_factory=dict)
    work: int = 0

    def get(self, s, l):
        return self.table.get(s, {}).get(l)

    def value(self, s, l) -> float:
        e = self.get(s, l)
        return NEG_INF if e is None else e[0]

    def items(self):
        for s, bucket in self.table.items():
            for l, e in bucket.items():
                yield (s, l), e

    def __len__(self):
        return sum(len(b) for b in self.table.values())

    def l_states(self) -> int:
        return len({l for b in self.table.values() for l in b})


@dataclass
class Solution:
    y: tuple | None
    p: float
    F: float
    G: tuple | None
    feasible: bool = True
    diagnostics: dict = field(default_factory=dict)

    def to_text(self) -> str:
        if not self.feasible:
            return "status infeasible\np* -inf\n"
        return (
            f"p* {self.p!r}\nF {self.F!r}\n"
            f"G{''.join(f' {g}' for g in self.G)}\n"
            f"y{''.join(f' {s}' for s in self.y)}\n"
        )

    def to_dict(self) -> dict:
        d = {"feasible": self.feasible}
        if self.feasible:
            d.update(p=self.p, F=self.F, G=list(self.G), y=list(self.y))
        if self.diagnostics:
            d["diagnostics"] = self.diagnostics
        return d


def infeasible(diagnostics=None) -> Solution:
    return Solution(None, NEG_INF, NEG_INF, None, False, diagnostics or {})


def _combiner(accumulation):
    p = len(accumulation)
    if all(a is ADD for a in accumulation):
        if p == 0:
            return lambda a, b: a
        if p == 1:
            return lambda a, b: (a[0] + b[0],)
        if p == 2:
            return lambda a, b: (a[0] + b[0], a[1] + b[1])
        return lambda a, b: tuple(x + y for x, y in zip(a, b))
    adds = tuple(a is ADD for a in accumulation)
    return lambda a, b: tuple(
        (x + y) if add else (x if x >= y else y) for x, y, add in zip(a, b, adds)
    )


class _Compiled:
    """Per-tree caches: clique assignments, tables and lexicographic weights."""

    def __init__(self, tree: CliqueTree):
        self.tree = tree
        model = tree.model
        cards = model.cardinalities
        w = [1] * model.M
        for v in range(model.M - 2, -1, -1):
            w[v] = w[v + 1] * cards[v + 1]
        self.weight = w
        self.zero = (0,) * model.P
        self.combine = _combiner(model.accumulation)
        self._nodes = {}

    def node(self, i):
        hit = self._nodes.get(i)
        if hit is None:
            node = self.tree.nodes[i]
            cards = self.tree.model.cardinalities
            assigns = list(itertools.product(*(range(cards[v]) for v in node.variables)))
            f = clique_energy(self.tree, i).tolist()
            g = clique_statistics(self.tree, i)
            g = None if g is None else [tuple(int(x) for x in row) for row in g]
            hit = (node.variables, assigns, f, g)
            self._nodes[i] = hit
        return hit


def send_message(tree: CliqueTree, i: int, j: int | None, incoming: dict, _ctx: _Compiled | None = None) -> MessageTable:
    """Compute ``mu_{i->j}``; ``j=None`` gives the root beliefs of ``i``.

    ``incoming`` maps a neighbour id ``k`` to the table ``mu_{k->i}``. All
    neighbours except ``j`` must be present.
    """
    ctx = _ctx or _Compiled(tree)
    variables, assigns, f, g = ctx.node(i)
    children = [k for k in tree.neighbors(i) if k != j]
    missing = [k for k in children if k not in incoming]
    if missing:
        raise NotReady(f"clique {i} is missing messages from {missing}")
    if j is not None and j not in tree.neighbors(i):
        raise ValueError(f"{j} is not a neighbour of {i}")

    pos = {v: p for p, v in enumerate(variables)}
    sep = tree.sepset(i, j) if j is not None else ()
    sep_pos = [pos[v] for v in sep]
    sep_set = set(sep)
    elim = [(pos[v], ctx.weight[v]) for v in variables if v not in sep_set]
    child_pos = [[pos[v] for v in tree.sepset(k, i)] for k in children]
    child_tabs = [incoming[k].table for k in children]
    combine = ctx.combine
    zero = ctx.zero

    out = {}
    memo = {}
    work = 0
    for a, ys in enumerate(assigns):
        fv = f[a]
        if fv == NEG_INF:
            continue
        ckeys = tuple(tuple(ys[p] for p in cp) for cp in child_pos)
        combos = memo.get(ckeys)
        if combos is None:
            combos, w_ = _combine_children(child_tabs, ckeys, combine, zero)
            work += w_
            memo[ckeys] = combos
        if not combos:
            continue
        skey = tuple(ys[p] for p in sep_pos)
        lw = 0
        for p, wt in elim:
            lw += ys[p] * wt
        ga = None if g is None else g[a]
        bucket = out.get(skey)
        if bucket is None:
            bucket = out[skey] = {}
        work += len(combos)
        for l, (v, w, cl) in combos.items():
            nl = l if ga is None else combine(l, ga)
            nv = v + fv
            nw = w + lw
            cur = bucket.get(nl)
            if cur is None or nv > cur[0] or (nv == cur[0] and nw < cur[1]):
                bucket[nl] = (nv, nw, a, cl)
    out = {s: b for s, b in out.items() if b}
    return MessageTable(i, j, sep, out, work)


def _combine_children(child_tabs, ckeys, combine, zero):
    """Left fold of sparse convolutions of the children's tables at fixed sepset keys."""
    combos = {zero: (0.0, 0, ())}
    work = 0
    for n, (tab, key) in enumerate(zip(child_tabs, ckeys)):
        bucket = tab.get(key)
        if not bucket:
            return {}, work
        if n == 0:
            combos = {l: (e[0], e[1], (l,)) for l, e in bucket.items()}
            work += len(bucket)
            continue
        nxt = {}
        for l1, (v1, w1, cl1) in combos.items():
            for l2, e2 in bucket.items():
                nl = combine(l1, l2)
                nv = v1 + e2[0]
                nw = w1 + e2[1]
                cur = nxt.get(nl)
                if cur is None or nv > cur[0] or (nv == cur[0] and nw < cur[1]):
                    nxt[nl] = (nv, nw, cl1 + (l2,))
        work += len(combos) * len(bucket)
        combos = nxt
    return combos, work


def schedule(tree: CliqueTree, root: int | None = None) -> list:
    """Leaves-to-root edge order ``[(i, parent), ...]``; children in ascending id."""
    root = tree.root if root is None else root
    order = []
    stack = [(root, None, False)]
    while stack:
        u, p, done = stack.pop()
        if done:
            if p is not None:
                order.append((u, p))
            continue
        stack.append((u, p, True))
        for c in reversed([k for k in tree.neighbors(u) if k != p]):
            stack.append((c, u, False))
    return order


def collect_messages(tree: CliqueTree, root: int | None = None, _ctx=None) -> dict:
    """All upward messages, keyed by ``(source, target)``."""
    ctx = _ctx or _Compiled(tree)
    tables = {}
    for i, j in schedule(tree, root):
        inc = {k: tables[(k, i)] for k in tree.neighbors(i) if k != j and (k, i) in tables}
        tables[(i, j)] = send_message(tree, i, j, inc, ctx)
    return tables


def root_beliefs(tree: CliqueTree, tables: dict, root: int | None = None, _ctx=None) -> MessageTable:
    """Beliefs at the root: a table with the single sepset key ``()``."""
    root = tree.root if root is None else root
    inc = {k: tables[(k, root)] for k in tree.neighbors(root) if (k, root) in tables}
    return send_message(tree, root, None, inc, _ctx)


def backtrack(tree: CliqueTree, tables: dict, l_star: tuple, root_entry, root: int | None = None, _ctx=None) -> tuple:
    """Rebuild the full assignment from the stored decision records."""
    root = tree.root if root is None else root
    ctx = _ctx or _Compiled(tree)
    y = [None] * tree.model.M
    stack = [(root, None, root_entry)]
    while stack:
        i, parent, entry = stack.pop()
        variables, assigns, _, _ = ctx.node(i)
        ys = assigns[entry[2]]
        for v, s in zip(variables, ys):
            if y[v] is None:
                y[v] = s
            elif y[v] != s:
                raise CorruptRecord(f"clique {i} disagrees with its parent on variable {v}")
        children = [k for k in tree.neighbors(i) if k != parent]
        if len(children) != len(entry[3]):
            raise CorruptRecord(f"clique {i}: record lists {len(entry[3])} children, tree has {len(children)}")
        for k, lk in zip(children, entry[3]):
            msg = tables.get((k, i))
            if msg is None:
                raise CorruptRecord(f"no message {k}->{i}")
            skey = tuple(y[v] for v in msg.sepset)
            child = msg.get(skey, lk)
            if child is None:
                raise CorruptRecord(f"message {k}->{i} has no record for {skey}, {lk}")
            stack.append((k, i, child))
    if any(s is None for s in y):
        raise CorruptRecord("some variables were never assigned")
    return tuple(y)


def run_constrained_mp(tree: CliqueTree, combinator: Combinator, root: int | None = None) -> Solution:
    """Exact ``max_y H(F(y), G(y))`` on a clique tree.

    Returns an infeasible :class:`Solution` (``feasible=False``) when every
    stratum evaluates to ``-inf``.
    """
    root = tree.root if root is None else root
    ctx = _Compiled(tree)
    tables = collect_messages(tree, root, ctx)
    beliefs = root_beliefs(tree, tables, root, ctx)
    per_message = {f"{i}->{j}": t.l_states() for (i, j), t in tables.items()}
    diag = {
        "messages": len(tables),
        "max_l_states": max([beliefs.l_states(), *per_message.values()]),
        "root_l_states": beliefs.l_states(),
        "work": beliefs.work + sum(t.work for t in tables.values()),
        "l_states": per_message,
    }
    best = None
    for l, entry in beliefs.table.get((), {}).items():
        h = combinator(entry[0], l)
        if h != h:
            raise ValueError(f"combinator returned NaN at l={l}")
        if best is None or h > best[0] or (h == best[0] and entry[1] < best[1][1]):
            best = (h, entry, l)
    if best is None or best[0] == NEG_INF:
        return infeasible(diag)
    _, entry, l_star = best
    y = backtrack(tree, tables, l_star, entry, root, ctx)
    F = evaluate_F(tree.model, y)
    G = evaluate_G(tree.model, y)
    if G != l_star:
        raise CorruptRecord(f"reconstructed statistics {G} differ from chosen stratum {l_star}")
    return Solution(y, combinator(F, G), F, G, True, diag)


def standard_junction_tree(tree: CliqueTree, root: int | None = None) -> Solution:
    """Plain max-product MAP: the same protocol with the statistics dropped."""
    plain = tree.with_model(tree.model.without_statistics(), keep_statistics=False)
    return run_constrained_mp(plain, Sum(), root)
